#pragma once

#include <vector>

#include "netkin/dynamics.hpp"
#include "netkin/graph.hpp"

namespace netkin {

enum class MobilityMode { Off, Feedback, FullSuppression };
enum class InteractionMode { Off, Feedback, FeedbackUntil, ExplicitLaw };

/// Choice of k_i^sigma inside the admissible interval
/// [rho^{q+1} m^q nu2 sigma, rho^{q+1} m^q nu2 sigma / (1 - rho^c)].
enum class KSigmaStrategy {
    IntervalLower, ///< full suppression, u = 1
    IntervalUpper, ///< eradication, u = 1 - rho^c
    Explicit,      ///< fixed user coefficient
};

/// How the floor delta of the mobility control is resolved from P.
enum class DeltaRule { MinEntry, MinPositiveEntry, Fixed };

struct ControlPolicy {
    double q = 2.0; ///< exponent of psi(x) = x^q / q
    MobilityMode mobility = MobilityMode::Off;
    InteractionMode interaction = InteractionMode::Off;
    double t_bar = 0.0; ///< interaction control switches off after t_bar (FeedbackUntil)
    DeltaRule delta_rule = DeltaRule::MinEntry;
    double delta_value = 0.0; ///< used with DeltaRule::Fixed
    KSigmaStrategy k_sigma = KSigmaStrategy::IntervalUpper;
    double k_sigma_explicit = 0.0;
    double k_chi_factor = 1.0; ///< multiplier on the minimal k^chi bound
    double k_mu_factor = 1.0;  ///< multiplier on the minimal k^mu bound
    double relaxed_scale = 2.5e-5;

    void validate() const;
    double resolve_delta(const TransitionMatrix &p) const;

    bool operator==(const ControlPolicy &) const = default;
};

/// Bits reported alongside a control evaluation.
enum ControlNote : unsigned {
    NoteNone = 0,
    /// raw u^chi was negative but the delta floor lifted it
    NoteNegativeMobilityFeedback = 1u << 0,
    /// eradication k^sigma requested where rho^c >= 1; lower bound used instead
    NoteCriticalFallback = 1u << 1,
};

struct ControlSignal {
    Vector u_chi;
    Vector u_interaction;
    double t = 0.0;
    unsigned notes = NoteNone;
};

/// psi'(x) = x^(q-1) for psi(x) = x^q / q.
double psi_prime(double x, double q);

/// Unclamped weighted-objective mobility law
/// psi'(mom_i) (chi / k_i) (sum_j P_ij mom_j - mom_i).
Vector raw_u_chi(const MacroState &state, const TransitionMatrix &p, double chi,
                 const Vector &k_chi, double q);

/// Unclamped weighted-objective interaction law for the exchange model,
/// psi'(mom_i) (mu / k_i) (nu2 - nu1) rho_i mom_i.
Vector raw_u_mu(const MacroState &state, const ModelParams &params, const Vector &k_mu, double q);

/// Plain-mean counterparts (psi applied to m_i instead of rho_i m_i). The
/// bracket is normalized by rho_i in both laws, which makes the
/// weighted/plain ratio rho_i^q for mobility and interaction alike.
Vector plain_raw_u_chi(const MacroState &state, const TransitionMatrix &p, double chi,
                       const Vector &k_chi, double q);
Vector plain_raw_u_mu(const MacroState &state, const ModelParams &params, const Vector &k_mu,
                      double q);

/// min(max(delta, raw), 1) per node.
Vector feedback_u_chi(const MacroState &state, const TransitionMatrix &p, double chi,
                      const Vector &k_chi, double q, double delta);

/// min(max(0, raw), 1) per node; nodes with nu2 <= nu1 clamp to zero.
Vector feedback_u_mu(const MacroState &state, const ModelParams &params, const Vector &k_mu,
                     double q);

/// k^sigma per strategy, then psi'(mom_i) (sigma / k_i) nu2 rho_i mom_i
/// clamped to [0,1]. Nodes with rho^c >= 1 under IntervalUpper fall back to
/// IntervalLower and set `*fell_back`.
Vector feedback_u_sigma(const MacroState &state, const ModelParams &params, double q,
                        KSigmaStrategy strategy, double k_explicit = 0.0,
                        bool *fell_back = nullptr);

/// Time-constant relaxed law min(max(0, (rho_i(0) m_i(0))^q sigma nu2 * scale), 1).
Vector relaxed_u_sigma(const MacroState &state_at_0, const ModelParams &params, double q,
                       double scale = 2.5e-5);

struct GlobalControl {
    double u = 0.0;   ///< single network-wide control, before clamping
    Vector per_node;  ///< targeted controls whose sum is u
};

/// Global interaction control on the total first moment and its per-node
/// decomposition.
GlobalControl global_u_mu(const MacroState &state, const ModelParams &params, double k, double q);

struct MobilityPenalization {
    Vector k;
    std::vector<bool> disabled; ///< k_i == 0: no outflow to penalize
    bool all_disabled() const;
};

/// Minimal k_i^chi = rho_i(t)^{q-1} m_i(0)^{q-1} chi m_ibar(0) (1 - P_ii),
/// ibar = argmax_j m_j(0) (lowest index on ties).
MobilityPenalization penalization_k_chi(const MacroState &state_at_0, const MacroState &state,
                                        const TransitionMatrix &p, double chi, double q);

/// Minimal k_i^mu = rho_i(t)^{q+1} m_i(0)^q mu (nu2 - nu1); +inf where nu2 <= nu1
/// (the law is then non-positive and unused).
Vector penalization_k_mu(const MacroState &state_at_0, const MacroState &state,
                         const ModelParams &params, double q);

/// State feedback assembled from a policy. Controls are recomputed from
/// whatever state is passed, so RK stages each get their own evaluation.
class FeedbackController {
  public:
    FeedbackController(TransitionMatrix p, ModelParams params, ControlPolicy policy,
                       MacroState initial);

    ControlSignal evaluate(const MacroState &state) const;

    const ControlPolicy &policy() const { return m_policy; }
    double delta() const { return m_delta; }

  private:
    Vector mobility(const MacroState &state, unsigned &notes) const;
    Vector interaction(const MacroState &state, unsigned &notes) const;

    TransitionMatrix m_p;
    ModelParams m_params;
    ControlPolicy m_policy;
    MacroState m_initial;
    double m_delta;
    Vector m_relaxed;
};

} // namespace netkin
