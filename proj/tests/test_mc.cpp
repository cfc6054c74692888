#include <doctest.h>

#include <cmath>

#include "netkin/error.hpp"
#include "netkin/mc.hpp"
#include "support.hpp"

using namespace netkin;
using namespace netkin::testing;

namespace {

ControlLaw constant_control(int n, double u_chi, double u_int) {
    return [=](const MacroState &s) {
        return ControlSignal{Vector::Constant(n, u_chi), Vector::Constant(n, u_int), s.t, NoteNone};
    };
}

ModelParams exchange(int n, double nu1, double nu2) {
    ModelParams p;
    p.variant = ModelVariant::Exchange;
    p.nu1 = Vector::Constant(n, nu1);
    p.nu2 = Vector::Constant(n, nu2);
    return p;
}

ModelParams healing(int n, double nu1, double nu2) {
    ModelParams p = exchange(n, nu1, nu2);
    p.variant = ModelVariant::InfectionHealing;
    return p;
}

double total_load(const ParticleEnsemble &ens) {
    double s = 0.0;
    for (double v : ens.loads) s += v;
    return s;
}

ErrorCode code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

} // namespace

TEST_CASE("initial placement") {
    const ParticleEnsemble ens = make_ensemble(10, vec({0.35, 0.1, 0.3, 0.05, 0.2}), vec({2, 4, 0.1, 1, 1.5}), 1);
    const MomentEstimate est = moments(ens);
    // 3.5, 1, 3, 0.5, 2: the single leftover goes to the first tied remainder
    CHECK(est.counts == std::vector<std::size_t>{4, 1, 3, 0, 2});
    CHECK(ens.agents() == 10);
    CHECK(est.state.mom[0] == doctest::Approx(0.8));
    CHECK(est.state.rho.sum() == doctest::Approx(1.0));
    CHECK(code_of([] { make_ensemble(0, vec({1.0}), vec({1.0}), 1); }) == ErrorCode::ValidationError);
    CHECK(code_of([] { make_ensemble(5, vec({1.0, 0.0}), vec({1.0}), 1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("moment estimates") {
    ParticleEnsemble ens = make_ensemble(4, vec({0.5, 0.5}), vec({1.0, 3.0}), 1);
    ens.loads = {1.0, 3.0, 2.0, 2.0};
    const MomentEstimate est = moments(ens, 2.5);
    CHECK(est.state.t == 2.5);
    CHECK(est.state.rho[0] == 0.5);
    CHECK(est.state.mom[0] == 1.0);
    CHECK(est.state.mom[1] == 1.0);
    CHECK(est.rho_se[0] == doctest::Approx(std::sqrt(0.25 / 4)));
    // X = (1, 3, 0, 0) for node 1: mean 1, variance 1.5
    CHECK(est.mom_se[0] == doctest::Approx(std::sqrt(1.5 / 4)));
}

TEST_CASE("migration") {
    const auto p = table1();
    SUBCASE("no migration rate means no moves") {
        ParticleEnsemble ens = make_ensemble(1000, vec({0.35, 0.1, 0.3, 0.05, 0.2}), Vector::Ones(5), 3);
        const auto before = ens.nodes;
        for (int k = 0; k < 50; ++k) step_migration(ens, p, 0.0, 0.05);
        CHECK(ens.nodes == before);
    }
    SUBCASE("identity matrix keeps everyone home") {
        ParticleEnsemble ens = make_ensemble(1000, Vector::Constant(3, 1.0 / 3), Vector::Ones(3), 3);
        const auto before = ens.nodes;
        for (int k = 0; k < 50; ++k) step_migration(ens, TransitionMatrix::validate(Matrix::Identity(3, 3)), 1.0, 0.05);
        CHECK(ens.nodes == before);
    }
    SUBCASE("loads travel with the agent") {
        ParticleEnsemble ens = make_ensemble(2000, vec({0.35, 0.1, 0.3, 0.05, 0.2}), vec({2, 4, 0.1, 1, 1.5}), 3);
        const double before = total_load(ens);
        for (int k = 0; k < 100; ++k) step_migration(ens, p, 1.0, 0.05);
        CHECK(total_load(ens) == before);
    }
    SUBCASE("step guard") {
        ParticleEnsemble ens = make_ensemble(10, Vector::Ones(5), Vector::Ones(5), 3);
        CHECK(code_of([&] { step_migration(ens, p, 1.0, 0.5); }) == ErrorCode::StepTooLarge);
    }
}

TEST_CASE("exchange rule") {
    SUBCASE("equal coefficients conserve every node's load without noise") {
        ParticleEnsemble ens = make_ensemble(1000, vec({0.6, 0.4}), vec({2.0, 5.0}), 9);
        const double before = total_load(ens);
        for (int k = 0; k < 200; ++k) step_exchange(ens, exchange(2, 0.3, 0.3), Vector::Zero(2), 0.1);
        CHECK(std::abs(total_load(ens) - before) < 1e-9 * before);
    }
    SUBCASE("full control blocks every interaction") {
        ParticleEnsemble ens = make_ensemble(1000, vec({0.6, 0.4}), vec({2.0, 5.0}), 9);
        const auto before = ens.loads;
        for (int k = 0; k < 100; ++k) step_exchange(ens, exchange(2, 0.2, 0.8), Vector::Ones(2), 0.1);
        CHECK(ens.loads == before);
    }
    SUBCASE("pure loss drains to zero") {
        ParticleEnsemble ens = make_ensemble(500, vec({1.0}), vec({1.0}), 9);
        ModelParams params = exchange(1, 1.0, 0.0);
        for (int k = 0; k < 3000; ++k) step_exchange(ens, params, Vector::Zero(1), 0.1);
        CHECK(total_load(ens) < 1e-12);
    }
    SUBCASE("bad inputs") {
        ParticleEnsemble ens = make_ensemble(10, vec({1.0}), vec({1.0}), 9);
        CHECK(code_of([&] { step_exchange(ens, exchange(1, 0.1, 0.1), vec({1.5}), 0.01); }) ==
              ErrorCode::OutOfRangeControl);
        CHECK(code_of([&] { step_exchange(ens, healing(1, 0.1, 0.1), vec({0.0}), 0.01); }) ==
              ErrorCode::WrongVariant);
        CHECK(code_of([&] { step_exchange(ens, exchange(1, 0.1, 0.1), vec({0.0}), 0.5); }) ==
              ErrorCode::StepTooLarge);
        CHECK(code_of([&] { step_exchange(ens, exchange(1, 0.5, 0.1), vec({0.0}), 0.01, {0.6}); }) ==
              ErrorCode::ValidationError);
    }
}

TEST_CASE("infection-healing rule") {
    SUBCASE("without healing loads never decrease") {
        ParticleEnsemble ens = make_ensemble(1000, vec({0.6, 0.4}), vec({1.0, 0.5}), 4);
        ModelParams params = healing(2, 0.2, 0.5);
        params.gamma = 0.0;
        for (int k = 0; k < 50; ++k) {
            const auto before = ens.loads;
            step_infection_healing(ens, params, Vector::Zero(2), 0.1);
            for (std::size_t a = 0; a < before.size(); ++a) CHECK(ens.loads[a] >= before[a]);
        }
    }
    SUBCASE("full healing without infection clears every load") {
        ParticleEnsemble ens = make_ensemble(500, vec({1.0}), vec({1.0}), 4);
        ModelParams params = healing(1, 1.0, 0.5);
        params.sigma = 0.0;
        for (int k = 0; k < 3000; ++k) step_infection_healing(ens, params, Vector::Zero(1), 0.1);
        CHECK(total_load(ens) == 0.0);
    }
    SUBCASE("noise keeps loads nonnegative at the largest amplitude") {
        ModelParams params = healing(1, 0.4, 0.5);
        ParticleEnsemble ens = make_ensemble(1000, vec({1.0}), vec({1.0}), 4);
        const NoiseModel noise{max_noise_amplitude(params)};
        for (int k = 0; k < 200; ++k) step_infection_healing(ens, params, Vector::Zero(1), 0.05, noise);
        for (double v : ens.loads) CHECK(v >= 0.0);
    }
}

TEST_CASE("simulation is deterministic for a fixed seed") {
    const Scenario s = preset("test2_uncontrolled");
    McConfig config;
    config.agents = 2000;
    config.t_end = 2.0;
    config.dt = 0.05;
    config.seed = 42;
    auto a = simulate_mc(s.transition(), s.model, constant_control(5, 0, 0), s.initial_state(), config);
    auto b = simulate_mc(s.transition(), s.model, constant_control(5, 0, 0), s.initial_state(), config);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(same_values(a.samples[k].estimate.state.mom, b.samples[k].estimate.state.mom));
        CHECK(same_values(a.samples[k].estimate.state.rho, b.samples[k].estimate.state.rho));
    }
    config.seed = 43;
    auto c = simulate_mc(s.transition(), s.model, constant_control(5, 0, 0), s.initial_state(), config);
    CHECK_FALSE(same_values(a.samples.back().estimate.state.mom, c.samples.back().estimate.state.mom));
    CHECK(a.samples.front().t == 0.0);
    CHECK(a.samples.back().t == 2.0);
}

TEST_CASE("replicas do not depend on the worker count") {
    const Scenario s = preset("test1_uncontrolled");
    McConfig config;
    config.agents = 1000;
    config.t_end = 1.0;
    config.dt = 0.05;
    config.seed = 7;
    const auto law = constant_control(5, 0, 0);
    const auto one = run_replicas(s.transition(), s.model, law, s.initial_state(), config, 4, 1);
    const auto many = run_replicas(s.transition(), s.model, law, s.initial_state(), config, 4, 3);
    REQUIRE(one.size() == 4);
    for (int r = 0; r < 4; ++r) {
        CHECK(one[r].seed == many[r].seed);
        CHECK(same_values(one[r].samples.back().estimate.state.mom, many[r].samples.back().estimate.state.mom));
    }
    CHECK(one[0].seed == 7);
    CHECK(one[1].seed == replica_seed(7, 1));
    CHECK(replica_seed(7, 1) != replica_seed(8, 1));
    CHECK(code_of([&] { run_replicas(s.transition(), s.model, law, s.initial_state(), config, 0, 1); }) ==
          ErrorCode::ValidationError);
}

TEST_CASE("small ensembles follow the mean equations") {
    const Scenario s = preset("test2_uncontrolled");
    Scenario short_run = s;
    short_run.integration.dt = 0.01;
    short_run.integration.t_end = 4.0;
    short_run.integration.record_every = 100;
    const Trajectory ode = simulate(short_run);
    McConfig config;
    config.agents = 20000;
    config.dt = 0.01;
    config.t_end = 4.0;
    config.record_every = 100;
    config.seed = 5;
    const auto mc = simulate_mc(s.transition(), s.model, constant_control(5, 0, 0), s.initial_state(), config);
    REQUIRE(mc.samples.size() == ode.size());
    for (std::size_t k = 0; k < ode.size(); ++k) {
        const auto &est = mc.samples[k].estimate;
        for (int i = 0; i < 5; ++i) {
            CHECK(std::abs(est.state.rho[i] - ode.states[k].rho[i]) <= 4.0 * est.rho_se[i] + 1e-3);
            CHECK(std::abs(est.state.mom[i] - ode.states[k].mom[i]) <=
                  4.0 * est.mom_se[i] + 0.02 * ode.states[k].mom[i]);
        }
    }
}
