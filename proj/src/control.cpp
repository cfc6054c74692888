#include "netkin/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "netkin/error.hpp"

namespace netkin {

namespace {

double clamp01(double x) { return std::min(std::max(0.0, x), 1.0); }

void require_positive(const Vector &k, const char *name) {
    for (Eigen::Index i = 0; i < k.size(); ++i)
        if (!(k[i] > 0.0))
            fail(ErrorCode::NonpositivePenalization,
                 std::string(name) + "[" + std::to_string(i + 1) + "] must be > 0");
}

void require_length(const Vector &v, int n, const char *name) {
    if (v.size() != n)
        fail(ErrorCode::DimensionMismatch, std::string(name) + " has length " +
                                               std::to_string(v.size()) + ", expected " +
                                               std::to_string(n));
}

Vector mobility_bracket(const MacroState &state, const TransitionMatrix &p) {
    require_length(state.mom, p.size(), "mom");
    return p.entries() * state.mom - state.mom;
}

} // namespace

void ControlPolicy::validate() const {
    auto bad = [](const std::string &key, const std::string &why) {
        fail(ErrorCode::ValidationError, key + ": " + why);
    };
    if (!(q > 1.0)) bad("q", "exponent must be > 1");
    if (!(t_bar >= 0.0)) bad("t_bar", "must be >= 0");
    if (delta_rule == DeltaRule::Fixed && !(delta_value >= 0.0 && delta_value < 1.0))
        bad("delta", "must lie in [0,1)");
    if (k_sigma == KSigmaStrategy::Explicit && !(k_sigma_explicit > 0.0))
        bad("k_sigma", "explicit coefficient must be > 0");
    if (!(k_chi_factor > 0.0)) bad("k_chi_factor", "must be > 0");
    if (!(k_mu_factor > 0.0)) bad("k_mu_factor", "must be > 0");
    if (!(relaxed_scale >= 0.0)) bad("relaxed_scale", "must be >= 0");
}

double ControlPolicy::resolve_delta(const TransitionMatrix &p) const {
    switch (delta_rule) {
    case DeltaRule::MinEntry: return p.min_entry();
    case DeltaRule::MinPositiveEntry: return p.min_positive_entry();
    case DeltaRule::Fixed: return delta_value;
    }
    return 0.0;
}

double psi_prime(double x, double q) {
    if (!(q > 1.0)) fail(ErrorCode::InvalidExponent, "psi exponent q must be > 1");
    if (x <= 0.0) return 0.0;
    return std::pow(x, q - 1.0);
}

Vector raw_u_chi(const MacroState &state, const TransitionMatrix &p, double chi,
                 const Vector &k_chi, double q) {
    require_length(k_chi, p.size(), "k_chi");
    require_positive(k_chi, "k_chi");
    const Vector bracket = mobility_bracket(state, p);
    Vector out(p.size());
    for (int i = 0; i < p.size(); ++i)
        out[i] = psi_prime(state.mom[i], q) * (chi / k_chi[i]) * bracket[i];
    return out;
}

Vector raw_u_mu(const MacroState &state, const ModelParams &params, const Vector &k_mu,
                double q) {
    if (params.variant != ModelVariant::Exchange)
        fail(ErrorCode::WrongVariant, "u^mu is defined for the exchange model");
    const int n = state.size();
    require_length(k_mu, n, "k_mu");
    require_positive(k_mu, "k_mu");
    Vector out(n);
    for (int i = 0; i < n; ++i)
        out[i] = psi_prime(state.mom[i], q) * (params.mu / k_mu[i]) *
                 (params.nu2[i] - params.nu1[i]) * state.rho[i] * state.mom[i];
    return out;
}

Vector plain_raw_u_chi(const MacroState &state, const TransitionMatrix &p, double chi,
                       const Vector &k_chi, double q) {
    require_length(k_chi, p.size(), "k_chi");
    require_positive(k_chi, "k_chi");
    const Vector bracket = mobility_bracket(state, p);
    Vector out(p.size());
    for (int i = 0; i < p.size(); ++i) {
        const double m = state.mom[i] / state.rho[i];
        out[i] = psi_prime(m, q) * (chi / k_chi[i]) * bracket[i] / state.rho[i];
    }
    return out;
}

Vector plain_raw_u_mu(const MacroState &state, const ModelParams &params, const Vector &k_mu,
                      double q) {
    if (params.variant != ModelVariant::Exchange)
        fail(ErrorCode::WrongVariant, "u^mu is defined for the exchange model");
    const int n = state.size();
    require_length(k_mu, n, "k_mu");
    require_positive(k_mu, "k_mu");
    Vector out(n);
    for (int i = 0; i < n; ++i) {
        const double m = state.mom[i] / state.rho[i];
        out[i] = psi_prime(m, q) * (params.mu / k_mu[i]) * (params.nu2[i] - params.nu1[i]) *
                 state.mom[i];
    }
    return out;
}

Vector feedback_u_chi(const MacroState &state, const TransitionMatrix &p, double chi,
                      const Vector &k_chi, double q, double delta) {
    Vector u = raw_u_chi(state, p, chi, k_chi, q);
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::min(std::max(delta, u[i]), 1.0);
    return u;
}

Vector feedback_u_mu(const MacroState &state, const ModelParams &params, const Vector &k_mu,
                     double q) {
    Vector u = raw_u_mu(state, params, k_mu, q);
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = clamp01(u[i]);
    return u;
}

Vector feedback_u_sigma(const MacroState &state, const ModelParams &params, double q,
                        KSigmaStrategy strategy, double k_explicit, bool *fell_back) {
    if (params.variant != ModelVariant::InfectionHealing)
        fail(ErrorCode::WrongVariant, "u^sigma is defined for the infection-healing model");
    if (strategy == KSigmaStrategy::Explicit && !(k_explicit > 0.0))
        fail(ErrorCode::NonpositivePenalization, "explicit k_sigma must be > 0");
    const int n = state.size();
    if (fell_back) *fell_back = false;
    Vector u = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        const double gain = params.sigma * params.nu2[i] * state.rho[i] * state.mom[i];
        if (!(gain > 0.0)) continue; // no infection pressure, no control
        const double lower = state.rho[i] * std::pow(state.mom[i], q) * params.nu2[i] * params.sigma;
        double k = lower;
        switch (strategy) {
        case KSigmaStrategy::IntervalLower: break;
        case KSigmaStrategy::IntervalUpper: {
            const double rho_c = params.gamma * params.nu1[i] / (params.sigma * params.nu2[i]);
            if (rho_c < 1.0) {
                k = lower / (1.0 - rho_c);
            } else if (fell_back) {
                *fell_back = true;
            }
            break;
        }
        case KSigmaStrategy::Explicit: k = k_explicit; break;
        }
        u[i] = clamp01(psi_prime(state.mom[i], q) * (params.sigma / k) * params.nu2[i] *
                       state.rho[i] * state.mom[i]);
    }
    return u;
}

Vector relaxed_u_sigma(const MacroState &state_at_0, const ModelParams &params, double q,
                       double scale) {
    if (params.variant != ModelVariant::InfectionHealing)
        fail(ErrorCode::WrongVariant, "relaxed u^sigma is defined for the infection-healing model");
    const int n = state_at_0.size();
    Vector u(n);
    for (int i = 0; i < n; ++i) {
        const double k_tilde =
            std::pow(std::max(0.0, state_at_0.mom[i]), q) * params.sigma * params.nu2[i];
        u[i] = clamp01(k_tilde * scale);
    }
    return u;
}

GlobalControl global_u_mu(const MacroState &state, const ModelParams &params, double k, double q) {
    if (params.variant != ModelVariant::Exchange)
        fail(ErrorCode::WrongVariant, "global u^mu is defined for the exchange model");
    if (!(k > 0.0)) fail(ErrorCode::NonpositivePenalization, "global k must be > 0");
    const int n = state.size();
    const double weight = psi_prime(state.total_moment(), q) * params.mu / k;
    GlobalControl out{0.0, Vector(n)};
    for (int i = 0; i < n; ++i) {
        out.per_node[i] = weight * (params.nu2[i] - params.nu1[i]) * state.mom[i];
        out.u += out.per_node[i];
    }
    return out;
}

bool MobilityPenalization::all_disabled() const {
    return std::all_of(disabled.begin(), disabled.end(), [](bool b) { return b; });
}

MobilityPenalization penalization_k_chi(const MacroState &state_at_0, const MacroState &state,
                                        const TransitionMatrix &p, double chi, double q) {
    if (chi == 0.0)
        fail(ErrorCode::ZeroChi, "k^chi is not needed without migration; disable mobility control");
    const int n = p.size();
    require_length(state_at_0.rho, n, "rho(0)");
    require_length(state.rho, n, "rho");
    const NodeMeans m0 = derived_means(state_at_0);
    int ibar = 0;
    for (int j = 1; j < n; ++j)
        if (m0.m[j] > m0.m[ibar]) ibar = j;
    MobilityPenalization out{Vector(n), std::vector<bool>(n, false)};
    for (int i = 0; i < n; ++i) {
        const double mi0 = m0.defined[i] ? m0.m[i] : 0.0;
        out.k[i] = std::pow(state.rho[i], q - 1.0) * std::pow(mi0, q - 1.0) * chi * m0.m[ibar] *
                   (1.0 - p(i, i));
        out.disabled[i] = !(out.k[i] > 0.0);
    }
    return out;
}

Vector penalization_k_mu(const MacroState &state_at_0, const MacroState &state,
                         const ModelParams &params, double q) {
    const int n = state.size();
    const NodeMeans m0 = derived_means(state_at_0);
    Vector k(n);
    for (int i = 0; i < n; ++i) {
        const double gap = params.nu2[i] - params.nu1[i];
        if (gap <= 0.0) {
            k[i] = std::numeric_limits<double>::infinity();
            continue;
        }
        const double mi0 = m0.defined[i] ? m0.m[i] : 0.0;
        k[i] = std::pow(state.rho[i], q + 1.0) * std::pow(mi0, q) * params.mu * gap;
    }
    return k;
}

FeedbackController::FeedbackController(TransitionMatrix p, ModelParams params,
                                       ControlPolicy policy, MacroState initial)
    : m_p(std::move(p)), m_params(std::move(params)), m_policy(policy),
      m_initial(std::move(initial)), m_delta(0.0) {
    m_policy.validate();
    m_params.validate(m_p.size());
    m_delta = m_policy.resolve_delta(m_p);
    if (m_policy.interaction == InteractionMode::ExplicitLaw) {
        if (m_params.variant != ModelVariant::InfectionHealing)
            fail(ErrorCode::ValidationError,
                 "interaction: the explicit relaxed law needs the infection-healing model");
        m_relaxed = relaxed_u_sigma(m_initial, m_params, m_policy.q, m_policy.relaxed_scale);
    }
}

Vector FeedbackController::mobility(const MacroState &state, unsigned &notes) const {
    const int n = m_p.size();
    switch (m_policy.mobility) {
    case MobilityMode::Off: return Vector::Zero(n);
    case MobilityMode::FullSuppression: return Vector::Ones(n);
    case MobilityMode::Feedback: break;
    }
    if (m_params.chi == 0.0) return Vector::Zero(n);
    const MobilityPenalization pen =
        penalization_k_chi(m_initial, state, m_p, m_params.chi, m_policy.q);
    const Vector bracket = m_p.entries() * state.mom - state.mom;
    Vector u(n);
    for (int i = 0; i < n; ++i) {
        double raw = 0.0;
        if (!pen.disabled[i]) {
            raw = psi_prime(state.mom[i], m_policy.q) *
                  (m_params.chi / (m_policy.k_chi_factor * pen.k[i])) * bracket[i];
        }
        if (raw < 0.0 && m_delta > 0.0) notes |= NoteNegativeMobilityFeedback;
        u[i] = std::min(std::max(m_delta, raw), 1.0);
    }
    return u;
}

Vector FeedbackController::interaction(const MacroState &state, unsigned &notes) const {
    const int n = m_p.size();
    switch (m_policy.interaction) {
    case InteractionMode::Off: return Vector::Zero(n);
    case InteractionMode::ExplicitLaw: return m_relaxed;
    case InteractionMode::FeedbackUntil:
        if (state.t > m_policy.t_bar) return Vector::Zero(n);
        break;
    case InteractionMode::Feedback: break;
    }
    if (m_params.variant == ModelVariant::InfectionHealing) {
        bool fell_back = false;
        Vector u = feedback_u_sigma(state, m_params, m_policy.q, m_policy.k_sigma,
                                    m_policy.k_sigma_explicit, &fell_back);
        if (fell_back) notes |= NoteCriticalFallback;
        return u;
    }
    const Vector k = penalization_k_mu(m_initial, state, m_params, m_policy.q);
    Vector u(n);
    for (int i = 0; i < n; ++i) {
        const double num = psi_prime(state.mom[i], m_policy.q) * m_params.mu *
                           (m_params.nu2[i] - m_params.nu1[i]) * state.rho[i] * state.mom[i];
        if (!(num > 0.0)) {
            u[i] = 0.0;
        } else if (!(k[i] > 0.0)) {
            u[i] = 1.0; // vanishing penalization saturates the control
        } else {
            u[i] = clamp01(num / (m_policy.k_mu_factor * k[i]));
        }
    }
    return u;
}

ControlSignal FeedbackController::evaluate(const MacroState &state) const {
    ControlSignal out;
    out.t = state.t;
    out.u_chi = mobility(state, out.notes);
    out.u_interaction = interaction(state, out.notes);
    return out;
}

} // namespace netkin
