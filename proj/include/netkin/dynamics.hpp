#pragma once

#include <vector>

#include "netkin/graph.hpp"
#include "netkin/types.hpp"

namespace netkin {

enum class ModelVariant {
    Exchange,         ///< gain and loss inside one symmetric binary interaction
    InfectionHealing, ///< binary infection gain, autonomous linear healing loss
};

/// Rates and exchange coefficients of either model. Only the fields of the
/// active variant are consulted: mu for Exchange, sigma/gamma for
/// InfectionHealing.
struct ModelParams {
    ModelVariant variant = ModelVariant::Exchange;
    Vector nu1;
    Vector nu2;
    double chi = 1.0;
    double mu = 1.0;
    double sigma = 1.0;
    double gamma = 1.0;

    int size() const { return static_cast<int>(nu1.size()); }
    /// Throws ValidationError on negative rates, coefficients outside [0,1],
    /// or a length different from `n`.
    void validate(int n) const;

    bool operator==(const ModelParams &o) const {
        return variant == o.variant && same_values(nu1, o.nu1) && same_values(nu2, o.nu2) &&
               chi == o.chi && mu == o.mu && sigma == o.sigma && gamma == o.gamma;
    }
};

/// Node masses rho_i and first moments rho_i m_i. Means are derived, never
/// integrated, so that emptying nodes stay regular.
struct MacroState {
    Vector rho;
    Vector mom;
    double t = 0.0;

    int size() const { return static_cast<int>(rho.size()); }
    double total_mass() const { return rho.sum(); }
    double total_moment() const { return mom.sum(); }

    static MacroState from_means(const Vector &rho, const Vector &m, double t = 0.0);
};

/// d rho / dt = chi (P_eff - I) rho
Vector rhs_mass(const MacroState &state, const TransitionMatrix &p_eff, double chi);

/// chi (P_eff mom - mom) + mu (1 - u_mu) (nu2 - nu1) rho * mom
Vector rhs_moment_exchange(const MacroState &state, const TransitionMatrix &p_eff,
                           const ModelParams &params, const Vector &u_mu);

/// chi (P_eff mom - mom) + sigma (1 - u_sigma) nu2 rho * mom - gamma nu1 mom
Vector rhs_moment_infection_healing(const MacroState &state, const TransitionMatrix &p_eff,
                                    const ModelParams &params, const Vector &u_sigma);

/// In-node interaction contribution to d mom / dt for either variant, without
/// the migration flux.
Vector interaction_term(const MacroState &state, const ModelParams &params,
                        const Vector &u_interaction);

struct NodeMeans {
    Vector m;                 ///< mom / rho where defined, NaN elsewhere
    std::vector<bool> defined;
};

inline constexpr double default_mean_floor = 1e-12;

NodeMeans derived_means(const MacroState &state, double mean_floor = default_mean_floor);

} // namespace netkin
