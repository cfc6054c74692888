#pragma once

#include <iosfwd>
#include <vector>

#include "netkin/error.hpp"
#include "netkin/scenario.hpp"
#include "netkin/spectral.hpp"

namespace netkin {

/// Exit codes of the command-line tool.
enum ExitCode : int { ExitOk = 0, ExitValidation = 1, ExitRuntime = 2 };

int exit_code_for(ErrorCode code);

/// Entry point of the `netkin` executable, with injectable streams for tests.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

/// R0 bracket along a trajectory (current rho(t) and controls in place of
/// their limits) plus the asymptotic bracket.
struct R0Series {
    std::vector<double> times;
    std::vector<R0Bounds> bounds;
    R0Bounds asymptotic;
    bool controlled = false;
};

R0Series r0_series(const Scenario &s, const Trajectory &traj);

/// Twin runs of the exchange model: one network-wide interaction control u
/// and one with per-node controls u~_i, from identical initial data.
struct GlobalLocalComparison {
    double k = 0.0;                   ///< penalization used for both runs
    std::vector<double> times;
    std::vector<double> u_global;     ///< pre-clamp u on the global run
    std::vector<Vector> u_local;      ///< pre-clamp u~_i on the global run's states
    std::vector<double> residual;     ///< |u - sum_i u~_i|
    std::vector<double> mean_global;  ///< sum rho m / sum rho
    std::vector<double> mean_local;
};

/// Minimal global penalization keeping u(0) <= 1.
double default_k_global(const MacroState &initial, const ModelParams &params, double q);

GlobalLocalComparison compare_global_local(const Scenario &s);

} // namespace netkin
