#include "netkin/mc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "netkin/error.hpp"

namespace netkin {

namespace {

// Portable draws: the standard distributions are implementation-defined, the
// engine is not.
double uniform01(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64 &rng, std::size_t bound) {
    // rejection sampling keeps the draw exactly uniform
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

double noise_draw(std::mt19937_64 &rng, const NoiseModel &noise) {
    if (noise.amplitude == 0.0) return 0.0;
    return noise.amplitude * (2.0 * uniform01(rng) - 1.0);
}

void guard_probability(double p, const char *what) {
    if (p > max_event_probability) {
        std::ostringstream msg;
        msg << what << " probability per step " << p << " exceeds " << max_event_probability
            << "; reduce dt";
        fail(ErrorCode::StepTooLarge, msg.str());
    }
}

std::vector<std::vector<std::size_t>> agents_by_node(const ParticleEnsemble &ens) {
    std::vector<std::vector<std::size_t>> groups(ens.n_nodes);
    for (std::size_t a = 0; a < ens.nodes.size(); ++a) groups[ens.nodes[a]].push_back(a);
    return groups;
}

void shuffle(std::vector<std::size_t> &v, std::mt19937_64 &rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

void check_controls(const Vector &u, int n) {
    if (u.size() != n) fail(ErrorCode::DimensionMismatch, "control vector does not match graph");
    for (int i = 0; i < n; ++i)
        if (!(u[i] >= 0.0 && u[i] <= 1.0))
            fail(ErrorCode::OutOfRangeControl, "controls must lie in [0,1]");
}

void check_noise(const NoiseModel &noise, const ModelParams &params) {
    if (!(noise.amplitude >= 0.0) || noise.amplitude > max_noise_amplitude(params) + 1e-15)
        fail(ErrorCode::ValidationError,
             "noise amplitude must lie in [0, " + std::to_string(max_noise_amplitude(params)) + "]");
}

} // namespace

double max_noise_amplitude(const ModelParams &params) {
    const double worst_self = 1.0 - (params.nu1.size() ? params.nu1.maxCoeff() : 0.0);
    if (params.variant == ModelVariant::Exchange) return worst_self;
    return std::min(1.0, worst_self);
}

ParticleEnsemble make_ensemble(std::size_t agents, const Vector &rho0, const Vector &m0,
                               std::uint64_t seed) {
    if (agents == 0) fail(ErrorCode::ValidationError, "agent count must be positive");
    if (rho0.size() != m0.size() || rho0.size() == 0)
        fail(ErrorCode::DimensionMismatch, "rho0 and m0 must be nonempty and of equal length");
    const double mass = rho0.sum();
    if (!(mass > 0.0)) fail(ErrorCode::ValidationError, "total mass must be positive");
    const int n = static_cast<int>(rho0.size());

    std::vector<std::size_t> counts(n);
    std::vector<std::pair<double, int>> remainders;
    std::size_t placed = 0;
    for (int i = 0; i < n; ++i) {
        const double exact = static_cast<double>(agents) * rho0[i] / mass;
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        placed += counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto &a, const auto &b) { return a.first > b.first; });
    for (std::size_t k = 0; placed < agents; ++k, ++placed) ++counts[remainders[k % n].second];

    ParticleEnsemble ens;
    ens.n_nodes = n;
    ens.total_mass = mass;
    ens.seed = seed;
    ens.rng.seed(seed);
    ens.nodes.reserve(agents);
    ens.loads.reserve(agents);
    for (int i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < counts[i]; ++c) {
            ens.nodes.push_back(i);
            ens.loads.push_back(m0[i]);
        }
    }
    return ens;
}

void step_migration(ParticleEnsemble &ens, const TransitionMatrix &p_eff, double chi, double dt) {
    if (p_eff.size() != ens.n_nodes)
        fail(ErrorCode::DimensionMismatch, "matrix does not match ensemble graph");
    const double p_jump = chi * dt;
    guard_probability(p_jump, "migration");
    if (p_jump <= 0.0) return;
    const int n = ens.n_nodes;
    // column-wise cumulative distribution of destinations
    Matrix cdf(n, n);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += p_eff(i, j);
            cdf(i, j) = acc;
        }
        cdf(n - 1, j) = 1.0;
    }
    for (std::size_t a = 0; a < ens.nodes.size(); ++a) {
        if (uniform01(ens.rng) >= p_jump) continue;
        const int j = ens.nodes[a];
        const double r = uniform01(ens.rng);
        int i = 0;
        while (i < n - 1 && r >= cdf(i, j)) ++i;
        ens.nodes[a] = i;
    }
}

void step_exchange(ParticleEnsemble &ens, const ModelParams &params, const Vector &u_mu, double dt,
                   NoiseModel noise) {
    if (params.variant != ModelVariant::Exchange)
        fail(ErrorCode::WrongVariant, "step_exchange needs the exchange model");
    check_controls(u_mu, ens.n_nodes);
    check_noise(noise, params);
    const double n_agents = static_cast<double>(ens.agents());
    auto groups = agents_by_node(ens);
    for (int i = 0; i < ens.n_nodes; ++i) {
        auto &g = groups[i];
        if (g.size() < 2) continue;
        const double rho_hat = static_cast<double>(g.size()) / n_agents * ens.total_mass;
        const double p = params.mu * (1.0 - u_mu[i]) * rho_hat * dt;
        guard_probability(p, "exchange");
        if (p <= 0.0) continue;
        shuffle(g, ens.rng);
        const double keep = 1.0 - params.nu1[i];
        for (std::size_t k = 0; k + 1 < g.size(); k += 2) {
            if (uniform01(ens.rng) >= p) continue;
            double &v = ens.loads[g[k]];
            double &w = ens.loads[g[k + 1]];
            const double eta = noise_draw(ens.rng, noise);
            const double eta_star = noise_draw(ens.rng, noise);
            const double v_new = (keep + eta) * v + params.nu2[i] * w;
            const double w_new = (keep + eta_star) * w + params.nu2[i] * v;
            v = std::max(0.0, v_new);
            w = std::max(0.0, w_new);
        }
    }
}

void step_infection_healing(ParticleEnsemble &ens, const ModelParams &params,
                            const Vector &u_sigma, double dt, NoiseModel noise) {
    if (params.variant != ModelVariant::InfectionHealing)
        fail(ErrorCode::WrongVariant, "step_infection_healing needs the infection-healing model");
    check_controls(u_sigma, ens.n_nodes);
    check_noise(noise, params);
    const double p_heal = params.gamma * dt;
    guard_probability(p_heal, "healing");
    const double n_agents = static_cast<double>(ens.agents());
    auto groups = agents_by_node(ens);
    for (int i = 0; i < ens.n_nodes; ++i) {
        auto &g = groups[i];
        if (g.size() < 2) continue;
        const double rho_hat = static_cast<double>(g.size()) / n_agents * ens.total_mass;
        const double p = params.sigma * (1.0 - u_sigma[i]) * rho_hat * dt;
        guard_probability(p, "infection");
        if (p <= 0.0) continue;
        shuffle(g, ens.rng);
        for (std::size_t k = 0; k + 1 < g.size(); k += 2) {
            if (uniform01(ens.rng) >= p) continue;
            double &v = ens.loads[g[k]];
            double &w = ens.loads[g[k + 1]];
            const double eta1 = noise_draw(ens.rng, noise);
            const double eta2 = noise_draw(ens.rng, noise);
            const double v_new = v + params.nu2[i] * w + eta1 * v;
            const double w_new = w + params.nu2[i] * v + eta2 * w;
            v = std::max(0.0, v_new);
            w = std::max(0.0, w_new);
        }
    }
    if (p_heal <= 0.0) return;
    for (std::size_t a = 0; a < ens.loads.size(); ++a) {
        if (uniform01(ens.rng) >= p_heal) continue;
        const double eta = noise_draw(ens.rng, noise);
        ens.loads[a] = std::max(0.0, (1.0 - params.nu1[ens.nodes[a]] + eta) * ens.loads[a]);
    }
}

MomentEstimate moments(const ParticleEnsemble &ens, double t) {
    const int n = ens.n_nodes;
    const double total = static_cast<double>(ens.agents());
    const double w = ens.total_mass / total;
    std::vector<std::size_t> counts(n, 0);
    std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
    for (std::size_t a = 0; a < ens.agents(); ++a) {
        const int i = ens.nodes[a];
        ++counts[i];
        sum[i] += ens.loads[a];
        sum_sq[i] += ens.loads[a] * ens.loads[a];
    }
    MomentEstimate out;
    out.state.rho = Vector(n);
    out.state.mom = Vector(n);
    out.state.t = t;
    out.rho_se = Vector(n);
    out.mom_se = Vector(n);
    out.counts = counts;
    for (int i = 0; i < n; ++i) {
        const double frac = static_cast<double>(counts[i]) / total;
        out.state.rho[i] = frac * ens.total_mass;
        out.state.mom[i] = sum[i] * w;
        out.rho_se[i] = ens.total_mass * std::sqrt(frac * (1.0 - frac) / total);
        // per-agent contribution X_a = v_a 1[node_a = i]; se = sd(X) / sqrt(N)
        const double mean_x = sum[i] / total;
        const double var_x = std::max(0.0, sum_sq[i] / total - mean_x * mean_x);
        out.mom_se[i] = ens.total_mass * std::sqrt(var_x / total);
    }
    return out;
}

std::uint64_t replica_seed(std::uint64_t base, int replica) {
    // splitmix64 finalizer
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(replica + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

McTrajectory simulate_mc(const TransitionMatrix &p, const ModelParams &params,
                         const ControlLaw &control, const MacroState &initial,
                         const McConfig &config) {
    params.validate(p.size());
    if (initial.size() != p.size())
        fail(ErrorCode::DimensionMismatch, "initial state does not match the graph size");
    if (!(config.dt > 0.0) || !(config.t_end > 0.0) || config.record_every < 1)
        fail(ErrorCode::ValidationError, "dt, t_end and record_every must be positive");
    if (!(config.noise.amplitude >= 0.0) ||
        config.noise.amplitude > max_noise_amplitude(params) + 1e-15)
        fail(ErrorCode::ValidationError, "noise amplitude must lie in [0, " +
                                             std::to_string(max_noise_amplitude(params)) + "]");

    const NodeMeans means = derived_means(initial);
    Vector m0 = Vector::Zero(initial.size());
    for (int i = 0; i < initial.size(); ++i)
        if (means.defined[i]) m0[i] = means.m[i];
    ParticleEnsemble ens = make_ensemble(config.agents, initial.rho, m0, config.seed);

    McTrajectory out;
    out.seed = config.seed;
    const long steps = std::max(1L, std::lround(config.t_end / config.dt));
    const double dt = config.t_end / static_cast<double>(steps);
    double t = 0.0;
    for (long step = 0;; ++step) {
        MomentEstimate est = moments(ens, t);
        ControlSignal u = control(est.state);
        if (step % config.record_every == 0 || step == steps)
            out.samples.push_back({t, est, u});
        if (step == steps) break;

        if ((u.u_chi.array() != 0.0).any())
            step_migration(ens, controlled_matrix(p, u.u_chi), params.chi, dt);
        else
            step_migration(ens, p, params.chi, dt);
        if (params.variant == ModelVariant::Exchange)
            step_exchange(ens, params, u.u_interaction, dt, config.noise);
        else
            step_infection_healing(ens, params, u.u_interaction, dt, config.noise);
        t = (step + 1 == steps) ? config.t_end : static_cast<double>(step + 1) * dt;
    }
    return out;
}

std::vector<McTrajectory> run_replicas(const TransitionMatrix &p, const ModelParams &params,
                                       const ControlLaw &control, const MacroState &initial,
                                       const McConfig &config, int replicas, int workers) {
    if (replicas < 1 || workers < 1)
        fail(ErrorCode::ValidationError, "replicas and workers must be >= 1");
    std::vector<McTrajectory> results(static_cast<std::size_t>(replicas));
    if (replicas == 1) {
        results[0] = simulate_mc(p, params, control, initial, config);
        return results;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_lock;
    auto worker = [&] {
        for (int r = next++; r < replicas; r = next++) {
            try {
                McConfig c = config;
                c.seed = r == 0 ? config.seed : replica_seed(config.seed, r);
                results[static_cast<std::size_t>(r)] = simulate_mc(p, params, control, initial, c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_lock);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, replicas); ++w) pool.emplace_back(worker);
    for (auto &th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

} // namespace netkin
