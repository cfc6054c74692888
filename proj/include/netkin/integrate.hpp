#pragma once

#include <functional>
#include <string>
#include <vector>

#include "netkin/control.hpp"
#include "netkin/dynamics.hpp"
#include "netkin/graph.hpp"

namespace netkin {

using ControlLaw = std::function<ControlSignal(const MacroState &)>;

/// Coupled (rho, rho m) right-hand side with state feedback. The control law
/// is consulted on every evaluation and P^u is rebuilt from its u^chi.
class ControlledSystem {
  public:
    ControlledSystem(TransitionMatrix p, ModelParams params, ControlLaw control);
    /// Convenience: feedback assembled from a policy and the initial state.
    ControlledSystem(TransitionMatrix p, ModelParams params, const ControlPolicy &policy,
                     const MacroState &initial);

    struct Derivative {
        Vector rho;
        Vector mom;
    };

    Derivative evaluate(const MacroState &state, ControlSignal *used = nullptr) const;
    ControlSignal controls(const MacroState &state) const { return m_control(state); }

    const TransitionMatrix &matrix() const { return m_p; }
    const ModelParams &params() const { return m_params; }

  private:
    TransitionMatrix m_p;
    ModelParams m_params;
    ControlLaw m_control;
};

struct IntegrationSettings {
    double dt = 1e-2;
    double t_end = 100.0;
    int record_every = 10;

    bool operator==(const IntegrationSettings &) const = default;
};

struct SampleDiagnostics {
    double total_mass = 0.0;
    double total_moment = 0.0;
    double min_component = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<MacroState> states;
    std::vector<ControlSignal> controls;
    std::vector<SampleDiagnostics> diagnostics;
    std::vector<std::string> warnings;
    unsigned notes = NoteNone; ///< union of control notes over all evaluations

    std::size_t size() const { return times.size(); }
    const MacroState &final_state() const { return states.back(); }
    double max_mass_drift() const;
};

inline constexpr double negative_clip_threshold = 1e-10;
inline constexpr double mass_drift_limit = 1e-9;

/// Classical fixed-step RK4. Samples every `record_every` steps plus the final
/// step. Components in (-1e-10, 0) are clipped to zero after each step.
Trajectory integrate(const ControlledSystem &system, const MacroState &y0,
                     const IntegrationSettings &settings);

enum class TailVerdict { ConvergedToZero, ConvergedToValue, Growing, Oscillating };

std::string_view to_string(TailVerdict verdict);

/// Classifies each node's mean over the final `window` of the trajectory.
///
/// Means below `tol` (absolute) are converged-to-zero. A tail whose increments
/// change sign at least three times, with relative spread above tol that does
/// not halve from the first to the second half of the window, is oscillating.
/// Otherwise a log-slope above tol is growing, below -tol converged-to-zero,
/// and anything else converged-to-value. Nodes whose mean is
/// undefined in the window are judged on their first moment instead.
std::vector<TailVerdict> convergence_report(const Trajectory &traj, double window, double tol);

} // namespace netkin
