// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "netkin/cli.hpp"
#include "netkin/control.hpp"
#include "netkin/mc.hpp"
#include "netkin/scenario.hpp"
#include "netkin/spectral.hpp"

using namespace netkin;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string &what, const std::string &detail) {
    std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <typename F> void guarded(int id, const std::string &what, F &&body) {
    try {
        body();
    } catch (const std::exception &e) {
        report(id, false, what, std::string("exception: ") + e.what());
    }
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

Trajectory run(Scenario s, double dt = 1e-2, int record_every = 100) {
    s.integration.dt = dt;
    s.integration.record_every = record_every;
    return simulate(s);
}

double network_mean(const MacroState &s) { return s.total_moment() / s.total_mass(); }

Vector final_means(const Trajectory &t) { return derived_means(t.final_state()).m; }

Matrix random_stochastic(int n, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix m(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) m(i, j) = u(rng);
        m.col(j) /= m.col(j).sum();
    }
    return m;
}

double uniform(std::mt19937_64 &rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// --------------------------------------------------------------------------

void criterion1() {
    guarded(1, "mass conservation and runtime for every preset", [] {
        double worst_drift = 0.0, worst_time = 0.0;
        std::string worst_name;
        for (const auto &name : preset_names()) {
            const auto start = std::chrono::steady_clock::now();
            const Trajectory t = run(preset(name), 1e-2, 1);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            worst_drift = std::max(worst_drift, t.max_mass_drift());
            if (secs > worst_time) {
                worst_time = secs;
                worst_name = name;
            }
        }
        report(1, worst_drift < 1e-9 && worst_time < 1.0, "mass conservation and runtime for every preset",
               "max drift " + num(worst_drift) + ", slowest " + worst_name + " " + num(worst_time) + " s");
    });
}

void criterion2() {
    guarded(2, "mass converges to the stationary density by t = 200", [] {
        Scenario s = preset("test1_uncontrolled");
        s.integration.t_end = 200.0;
        const Trajectory t = run(s);
        const auto sd = stationary_density(s.transition(), 1.0);
        const double err = (t.final_state().rho - sd.rho_inf).cwiseAbs().maxCoeff();
        report(2, err < 1e-6, "mass converges to the stationary density by t = 200", "max error " + num(err));
    });
}

void criterion3() {
    guarded(3, "equal coefficients: every mean reaches 1.48 by t = 200", [] {
        const Scenario s = preset("fig1_nu_equal");
        const double target = s.initial_rho.dot(s.initial_m); // 1.48 by hand
        Scenario run_to = s;
        run_to.integration.t_end = 200.0;
        const Vector m = final_means(run(run_to));
        const double err = (m.array() - 1.48).abs().maxCoeff();
        report(3, err < 1e-3 && std::abs(target - 1.48) < 1e-12,
               "equal coefficients: every mean reaches 1.48 by t = 200",
               "max |m_i - 1.48| = " + num(err));
    });
}

struct Test1 {
    Trajectory uncontrolled, mobility, early, full, suppression;
};

const Test1 &test1() {
    static const Test1 t{run(preset("test1_uncontrolled")), run(preset("test1_mobility_only")),
                         run(preset("test1_early_stop")), run(preset("test1_full")),
                         run(preset("test1_mobility_suppression"))};
    return t;
}

void criteria4to8() {
    guarded(4, "Test 1 uncontrolled means in [300, 3000] at t = 100", [] {
        const Vector m = final_means(test1().uncontrolled);
        const bool ok = (m.array() >= 300.0).all() && (m.array() <= 3000.0).all();
        std::ostringstream d;
        d << "node means";
        for (int i = 0; i < m.size(); ++i) d << ' ' << num(m[i]);
        report(4, ok, "Test 1 uncontrolled means in [300, 3000] at t = 100", d.str());
    });
    guarded(5, "Test 1 mobility control lowers the mean 2x to 4.5x", [] {
        const double r = network_mean(test1().uncontrolled.final_state()) /
                         network_mean(test1().mobility.final_state());
        report(5, r >= 2.0 && r <= 4.5, "Test 1 mobility control lowers the mean 2x to 4.5x", "ratio " + num(r));
    });
    guarded(6, "Test 1 early stop reduces the mean 25-40% against mobility-only", [] {
        const double mob = network_mean(test1().mobility.final_state());
        const double early = network_mean(test1().early.final_state());
        const double cut = (mob - early) / mob;
        report(6, cut >= 0.25 && cut <= 0.40, "Test 1 early stop reduces the mean 25-40% against mobility-only",
               "reduction " + num(100.0 * cut) + "%");
    });
    guarded(7, "Test 1 full control 1e2x to 1e4x below uncontrolled, not growing", [] {
        const double r = network_mean(test1().uncontrolled.final_state()) /
                         network_mean(test1().full.final_state());
        const auto verdicts = convergence_report(test1().full, 20.0, 1e-3);
        const bool growing = std::any_of(verdicts.begin(), verdicts.end(),
                                         [](TailVerdict v) { return v == TailVerdict::Growing; });
        report(7, r >= 1e2 && r <= 1e4 && !growing,
               "Test 1 full control 1e2x to 1e4x below uncontrolled, not growing",
               "ratio " + num(r) + (growing ? ", some node growing" : ", no node growing"));
    });
    guarded(8, "Test 1 mobility suppression exceeds uncontrolled", [] {
        // isolated nodes with nu2 < nu1 decay, so the claim is about the network mean
        const double sup = network_mean(test1().suppression.final_state());
        const double free = network_mean(test1().uncontrolled.final_state());
        const Vector per_node = final_means(test1().suppression).cwiseQuotient(final_means(test1().uncontrolled));
        report(8, sup > free, "Test 1 mobility suppression exceeds uncontrolled",
               "network mean " + num(sup) + " vs " + num(free) + ", per-node ratios " + num(per_node.minCoeff()) +
                   " to " + num(per_node.maxCoeff()));
    });
}

// Linear stability regimes of the healing model on random small graphs.
void criterion9() {
    guarded(9, "critical-density trichotomy on 200 random graphs", [] {
        std::mt19937_64 rng(2024);
        int agree = 0;
        const int instances = 200;
        for (int k = 0; k < instances; ++k) {
            const int n = 3 + k % 2;
            const int regime = k % 3; // 0: rho_inf < rho_c, 1: rho_c > 1, 2: rho_c < min rho_inf
            Scenario s = preset("test2_uncontrolled");
            s.name = "trichotomy";
            s.matrix.entries = random_stochastic(n, rng);
            const TransitionMatrix p = s.transition();
            const Vector rho_inf = stationary_density(p, 1.0).rho_inf;
            s.model.sigma = 1.0;
            s.model.gamma = 1.0;
            s.model.chi = uniform(rng, 0.2, 1.0);
            s.model.nu1 = Vector(n);
            s.model.nu2 = Vector(n);
            for (int i = 0; i < n; ++i) {
                double rho_c = 0.0;
                switch (regime) {
                case 0: rho_c = rho_inf[i] * uniform(rng, 1.05, 2.0); break;
                case 1: rho_c = uniform(rng, 1.05, 3.0); break;
                default: rho_c = rho_inf.minCoeff() * uniform(rng, 0.2, 0.95); break;
                }
                // nu1 = rho_c nu2 with both in [0, 1]
                const double nu2 = uniform(rng, 0.3, 1.0) * std::min(1.0, 1.0 / rho_c);
                s.model.nu2[i] = nu2;
                s.model.nu1[i] = rho_c * nu2;
            }
            Vector r0(n), m0(n);
            for (int i = 0; i < n; ++i) {
                r0[i] = uniform(rng, 0.1, 1.0);
                m0[i] = uniform(rng, 0.5, 2.0);
            }
            s.initial_rho = r0 / r0.sum();
            s.initial_m = m0;
            s.policy = ControlPolicy{};
            s.integration = {0.05, 200.0, 20};
            validate(s);
            const auto verdicts = convergence_report(simulate(s), 50.0, 1e-4);
            const bool all_zero = std::all_of(verdicts.begin(), verdicts.end(),
                                              [](TailVerdict v) { return v == TailVerdict::ConvergedToZero; });
            const bool some_growing = std::any_of(verdicts.begin(), verdicts.end(),
                                                  [](TailVerdict v) { return v == TailVerdict::Growing; });
            if (regime == 2 ? some_growing : all_zero) ++agree;
        }
        const double frac = static_cast<double>(agree) / instances;
        report(9, frac >= 0.95, "critical-density trichotomy on 200 random graphs",
               std::to_string(agree) + "/" + std::to_string(instances) + " agree");
    });
}

void criterion10() {
    guarded(10, "Test 2 full control eradicates and caps the infection rate", [] {
        const Scenario s = preset("test2_full_control");
        const Trajectory t = run(s, 1e-2, 1);
        const Vector m0 = s.initial_m;
        const Vector m = final_means(t);
        double worst_rel = 0.0;
        for (int i = 0; i < m.size(); ++i) worst_rel = std::max(worst_rel, m[i] / m0[i]);
        double worst_excess = -1e300;
        for (const auto &u : t.controls)
            for (int i = 0; i < s.size(); ++i)
                worst_excess = std::max(worst_excess, s.model.sigma * (1 - u.u_interaction[i]) * s.model.nu2[i] -
                                                          s.model.gamma * s.model.nu1[i]);
        const bool ok = worst_rel < 1e-6 && worst_excess <= 1e-12;
        report(10, ok, "Test 2 full control eradicates and caps the infection rate",
               "max m_i(50)/m_i(0) = " + num(worst_rel) + ", max rate excess " + num(worst_excess));
    });
}

void criterion11() {
    guarded(11, "reproduction number brackets for Test 2", [] {
        const Scenario free = preset("test2_uncontrolled");
        const Scenario ctl = preset("test2_full_control");
        const R0Series a = r0_series(free, run(free));
        const R0Series b = r0_series(ctl, run(ctl));
        const bool ok = a.asymptotic.upper > 1.0 && b.asymptotic.lower < 1.0 && b.asymptotic.upper < 1.0;
        report(11, ok, "reproduction number brackets for Test 2",
               "uncontrolled [" + num(a.asymptotic.lower) + ", " + num(a.asymptotic.upper) + "], controlled [" +
                   num(b.asymptotic.lower) + ", " + num(b.asymptotic.upper) + "]");
    });
}

// Monte Carlo against the ODE at 20 checkpoints over t in (0, 20]. The
// standard error of one seed-fixed run is the spread across independent
// replicas: binary exchanges correlate agents, so the per-agent spread inside
// a single ensemble understates it.
struct McComparison {
    int checks = 0;
    int within = 0;
    double rms_rel = 0.0; ///< RMS relative deviation of rho and mom over all replicas
};

McComparison compare_mc(const std::string &name, std::size_t agents, int replicas) {
    Scenario s = preset(name);
    s.integration = {0.01, 20.0, 100};
    const Trajectory ode = simulate(s);
    const ControlledSystem sys = make_system(s);
    const ControlLaw law = [&sys](const MacroState &x) { return sys.controls(x); };
    McConfig config;
    config.agents = agents;
    config.seed = 1;
    config.dt = s.integration.dt;
    config.t_end = s.integration.t_end;
    config.record_every = s.integration.record_every;
    const int workers = std::max(1u, std::thread::hardware_concurrency());
    const auto reps = run_replicas(s.transition(), s.model, law, s.initial_state(), config, replicas, workers);
    const int n = s.size();
    const double r = replicas;
    McComparison out;
    double sq = 0.0;
    int terms = 0;
    for (std::size_t k = 1; k < reps[0].samples.size(); ++k) {
        const MacroState &ref = ode.states[k];
        Vector sum_r = Vector::Zero(n), sq_r = Vector::Zero(n), sum_m = Vector::Zero(n), sq_m = Vector::Zero(n);
        for (const auto &rep : reps) {
            const MacroState &x = rep.samples[k].estimate.state;
            sum_r += x.rho;
            sq_r += x.rho.cwiseProduct(x.rho);
            sum_m += x.mom;
            sq_m += x.mom.cwiseProduct(x.mom);
            for (int i = 0; i < n; ++i) {
                sq += std::pow((x.rho[i] - ref.rho[i]) / ref.rho[i], 2) +
                      std::pow((x.mom[i] - ref.mom[i]) / ref.mom[i], 2);
                terms += 2;
            }
        }
        const MacroState &seeded = reps[0].samples[k].estimate.state;
        for (int i = 0; i < n; ++i) {
            const double se_r = std::sqrt(std::max(0.0, (sq_r[i] - sum_r[i] * sum_r[i] / r) / (r - 1)));
            const double se_m = std::sqrt(std::max(0.0, (sq_m[i] - sum_m[i] * sum_m[i] / r) / (r - 1)));
            out.checks += 2;
            out.within += (std::abs(seeded.rho[i] - ref.rho[i]) <= 3.0 * se_r) +
                          (std::abs(seeded.mom[i] - ref.mom[i]) <= 3.0 * se_m);
        }
    }
    out.rms_rel = std::sqrt(sq / terms);
    return out;
}

void criterion12() {
    guarded(12, "Monte Carlo tracks the ODE within 3 standard errors, error ~ N^-1/2", [] {
        const int replicas = 8;
        int checks = 0, within = 0;
        std::string slopes;
        bool slopes_ok = true;
        for (const std::string name : {"test1_uncontrolled", "test2_uncontrolled"}) {
            std::vector<double> logn, loge;
            for (std::size_t n : {1'000u, 10'000u, 100'000u}) {
                const McComparison c = compare_mc(name, n, replicas);
                if (n == 100'000u) {
                    checks += c.checks;
                    within += c.within;
                }
                logn.push_back(std::log(static_cast<double>(n)));
                loge.push_back(std::log(c.rms_rel));
            }
            const double mx = (logn[0] + logn[1] + logn[2]) / 3.0, my = (loge[0] + loge[1] + loge[2]) / 3.0;
            double sxy = 0.0, sxx = 0.0;
            for (int k = 0; k < 3; ++k) {
                sxy += (logn[k] - mx) * (loge[k] - my);
                sxx += (logn[k] - mx) * (logn[k] - mx);
            }
            const double slope = sxy / sxx;
            slopes += " " + name + " slope " + num(slope);
            slopes_ok = slopes_ok && slope >= -0.75 && slope <= -0.25;
        }
        report(12, within == checks && slopes_ok,
               "Monte Carlo tracks the ODE within 3 standard errors, error ~ N^-1/2",
               std::to_string(within) + "/" + std::to_string(checks) + " within 3 SE;" + slopes);
    });
}

void criterion13() {
    guarded(13, "control algebra identities on random states", [] {
        std::mt19937_64 rng(13);
        const Scenario s = preset("test1_uncontrolled");
        const TransitionMatrix p = s.transition();
        const int n = s.size();
        double worst_ratio = 0.0, worst_identity = 0.0, worst_column = 0.0;
        for (int k = 0; k < 1000; ++k) {
            MacroState x;
            x.rho = Vector(n);
            x.mom = Vector(n);
            Vector kk(n), u(n);
            for (int i = 0; i < n; ++i) {
                x.rho[i] = uniform(rng, 0.01, 1.0);
                x.mom[i] = uniform(rng, 0.01, 2.0);
                kk[i] = uniform(rng, 0.5, 5.0);
                u[i] = uniform(rng, 0.0, 1.0);
            }
            const double q = uniform(rng, 1.1, 4.0);
            const Vector wc = raw_u_chi(x, p, s.model.chi, kk, q), pc = plain_raw_u_chi(x, p, s.model.chi, kk, q);
            const Vector wm = raw_u_mu(x, s.model, kk, q), pm = plain_raw_u_mu(x, s.model, kk, q);
            for (int i = 0; i < n; ++i) {
                const double r = std::pow(x.rho[i], q);
                if (pc[i] != 0.0) worst_ratio = std::max(worst_ratio, std::abs(wc[i] / pc[i] / r - 1.0));
                if (pm[i] != 0.0) worst_ratio = std::max(worst_ratio, std::abs(wm[i] / pm[i] / r - 1.0));
            }
            const GlobalControl g = global_u_mu(x, s.model, uniform(rng, 0.5, 50.0), q);
            worst_identity = std::max(worst_identity, std::abs(g.u - g.per_node.sum()));
            const TransitionMatrix pu = controlled_matrix(p, u);
            for (int j = 0; j < n; ++j)
                worst_column = std::max(worst_column, std::abs(pu.entries().col(j).sum() - 1.0));
        }
        report(13, worst_ratio <= 1e-12 && worst_identity <= 1e-13 && worst_column <= 1e-12,
               "control algebra identities on random states",
               "ratio " + num(worst_ratio) + ", identity " + num(worst_identity) + ", column sums " +
                   num(worst_column));
    });
}

void criterion14() {
    guarded(14, "Lombardy relaxed control 10x below uncontrolled, uncontrolled growing", [] {
        const Trajectory free = run(preset("lombardy_uncontrolled"));
        const Trajectory relaxed = run(preset("lombardy_relaxed"));
        const double r = network_mean(free.final_state()) / network_mean(relaxed.final_state());
        // least-squares log slope of the network mean over the last fifth of the horizon
        const double t_end = free.times.back();
        double st = 0, sl = 0, stt = 0, stl = 0, k = 0;
        for (std::size_t i = 0; i < free.size(); ++i) {
            if (free.times[i] < 0.8 * t_end) continue;
            const double l = std::log(network_mean(free.states[i]));
            st += free.times[i];
            sl += l;
            stt += free.times[i] * free.times[i];
            stl += free.times[i] * l;
            ++k;
        }
        const double slope = (k * stl - st * sl) / (k * stt - st * st);
        report(14, r >= 10.0 && slope > 0.0, "Lombardy relaxed control 10x below uncontrolled, uncontrolled growing",
               "ratio " + num(r) + ", uncontrolled log slope " + num(slope));
    });
}

void criterion15() {
    guarded(15, "RK4 step-halving error ratio in [12, 20]", [] {
        const Scenario s = preset("test1_uncontrolled");
        const MacroState ref = run(s, 0.1 / 16.0, 100000).final_state();
        auto err = [&](double dt) {
            const MacroState y = run(s, dt, 100000).final_state();
            return std::max((y.rho - ref.rho).cwiseAbs().maxCoeff(), (y.mom - ref.mom).cwiseAbs().maxCoeff());
        };
        const double ratio = err(0.1) / err(0.05);
        report(15, ratio >= 12.0 && ratio <= 20.0, "RK4 step-halving error ratio in [12, 20]", "ratio " + num(ratio));
    });
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criteria4to8();
    criterion9();
    criterion10();
    criterion11();
    criterion12();
    criterion13();
    criterion14();
    criterion15();
    std::printf("%d of 15 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
