#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "netkin/dynamics.hpp"
#include "netkin/graph.hpp"
#include "netkin/integrate.hpp"

namespace netkin {

/// Agents on the graph, each with a node label and a nonnegative load.
///
/// Each agent stands for total_mass / N of mass, so node masses are
/// n_i / N * total_mass and first moments sum(v) / N * total_mass.
struct ParticleEnsemble {
    std::vector<int> nodes;
    std::vector<double> loads;
    int n_nodes = 0;
    double total_mass = 1.0;
    std::uint64_t seed = 0;
    std::mt19937_64 rng;

    std::size_t agents() const { return loads.size(); }
};

/// Deterministic initial placement: node counts by largest remainder of
/// N * rho_i / sum(rho), every agent in node i starting at load m0_i.
ParticleEnsemble make_ensemble(std::size_t agents, const Vector &rho0, const Vector &m0,
                               std::uint64_t seed);

/// Mean-zero uniform noise on [-amplitude, amplitude] added to the
/// self-coefficient of each update rule. Zero amplitude keeps the rules
/// deterministic.
struct NoiseModel {
    double amplitude = 0.0;
};

/// Per-agent event probabilities per step must stay below this.
inline constexpr double max_event_probability = 0.1;

/// Each agent in node j jumps with probability chi dt, redrawing its node
/// from column j of P_eff.
void step_migration(ParticleEnsemble &ens, const TransitionMatrix &p_eff, double chi, double dt);

/// Symmetric exchange v' = (1 - nu1 + eta) v + nu2 v*. Agents of a node are
/// shuffled into disjoint pairs; each pair interacts with probability
/// mu (1 - u_mu) rho_i dt, so every agent is updated at that rate and at most
/// once per step.
void step_exchange(ParticleEnsemble &ens, const ModelParams &params, const Vector &u_mu, double dt,
                   NoiseModel noise = {});

/// Infection gain v' = v + nu2 v* + eta v on random same-node pairs with
/// probability sigma (1 - u_sigma) rho_i dt, then independent healing
/// v'' = (1 - nu1 + eta'') v with probability gamma dt per agent.
void step_infection_healing(ParticleEnsemble &ens, const ModelParams &params,
                            const Vector &u_sigma, double dt, NoiseModel noise = {});

struct MomentEstimate {
    MacroState state; ///< rho_hat and first-moment estimates
    Vector rho_se;    ///< binomial standard error of rho_hat
    Vector mom_se;    ///< standard error of the first-moment estimate
    std::vector<std::size_t> counts;
};

MomentEstimate moments(const ParticleEnsemble &ens, double t = 0.0);

struct McConfig {
    std::size_t agents = 100'000;
    std::uint64_t seed = 1;
    double dt = 1e-2;
    double t_end = 10.0;
    int record_every = 10;
    NoiseModel noise;
};

struct McSample {
    double t = 0.0;
    MomentEstimate estimate;
    ControlSignal controls;
};

struct McTrajectory {
    std::uint64_t seed = 0;
    std::vector<McSample> samples;
};

/// Splitting scheme per step: migrate with P^u, then interact, then heal.
/// Controls are evaluated on the current moment estimate at the start of
/// each step.
McTrajectory simulate_mc(const TransitionMatrix &p, const ModelParams &params,
                         const ControlLaw &control, const MacroState &initial,
                         const McConfig &config);

/// Seed of replica r > 0, decorrelated from neighbouring base seeds. Replica 0
/// runs on the base seed itself.
std::uint64_t replica_seed(std::uint64_t base, int replica);

/// Independent replicas on at most `workers` threads. Output order follows
/// the replica index, so results do not depend on scheduling.
std::vector<McTrajectory> run_replicas(const TransitionMatrix &p, const ModelParams &params,
                                       const ControlLaw &control, const MacroState &initial,
                                       const McConfig &config, int replicas, int workers);

/// Largest admissible noise amplitude keeping loads nonnegative for the
/// given model.
double max_noise_amplitude(const ModelParams &params);

} // namespace netkin
