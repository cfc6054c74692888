#include "netkin/dynamics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "netkin/error.hpp"

namespace netkin {

namespace {

void check_length(const Vector &v, int n, const char *name) {
    if (v.size() != n)
        fail(ErrorCode::DimensionMismatch, std::string(name) + " has length " +
                                               std::to_string(v.size()) + ", expected " +
                                               std::to_string(n));
}

void check_state(const MacroState &state, const TransitionMatrix &p_eff) {
    check_length(state.rho, p_eff.size(), "rho");
    check_length(state.mom, p_eff.size(), "mom");
}

Vector migration_flux(const Vector &x, const TransitionMatrix &p_eff, double chi) {
    return chi * (p_eff.entries() * x - x);
}

} // namespace

void ModelParams::validate(int n) const {
    auto bad = [](const std::string &key, const std::string &why) {
        fail(ErrorCode::ValidationError, key + ": " + why);
    };
    if (nu1.size() != n) bad("nu1", "expected " + std::to_string(n) + " values");
    if (nu2.size() != n) bad("nu2", "expected " + std::to_string(n) + " values");
    for (int i = 0; i < n; ++i) {
        if (!(nu1[i] >= 0.0 && nu1[i] <= 1.0)) bad("nu1", "entries must lie in [0,1]");
        if (!(nu2[i] >= 0.0 && nu2[i] <= 1.0)) bad("nu2", "entries must lie in [0,1]");
    }
    if (!(chi >= 0.0) || !std::isfinite(chi)) bad("chi", "must be a finite rate >= 0");
    if (variant == ModelVariant::Exchange) {
        if (!(mu >= 0.0) || !std::isfinite(mu)) bad("mu", "must be a finite rate >= 0");
    } else {
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) bad("sigma", "must be a finite rate >= 0");
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) bad("gamma", "must be a finite rate >= 0");
    }
}

MacroState MacroState::from_means(const Vector &rho, const Vector &m, double t) {
    if (rho.size() != m.size())
        fail(ErrorCode::DimensionMismatch, "rho and m lengths differ");
    return MacroState{rho, rho.cwiseProduct(m), t};
}

Vector rhs_mass(const MacroState &state, const TransitionMatrix &p_eff, double chi) {
    check_length(state.rho, p_eff.size(), "rho");
    return migration_flux(state.rho, p_eff, chi);
}

Vector interaction_term(const MacroState &state, const ModelParams &params,
                        const Vector &u_interaction) {
    const int n = state.size();
    check_length(u_interaction, n, "u_interaction");
    check_length(params.nu1, n, "nu1");
    check_length(params.nu2, n, "nu2");
    Vector out(n);
    for (int i = 0; i < n; ++i) {
        // rho_i^2 m_i evaluated as rho_i * mom_i
        const double quad = state.rho[i] * state.mom[i];
        if (params.variant == ModelVariant::Exchange) {
            out[i] = params.mu * (1.0 - u_interaction[i]) * (params.nu2[i] - params.nu1[i]) * quad;
        } else {
            out[i] = params.sigma * (1.0 - u_interaction[i]) * params.nu2[i] * quad -
                     params.gamma * params.nu1[i] * state.mom[i];
        }
    }
    return out;
}

Vector rhs_moment_exchange(const MacroState &state, const TransitionMatrix &p_eff,
                           const ModelParams &params, const Vector &u_mu) {
    if (params.variant != ModelVariant::Exchange)
        fail(ErrorCode::WrongVariant, "rhs_moment_exchange needs the exchange model");
    check_state(state, p_eff);
    return migration_flux(state.mom, p_eff, params.chi) + interaction_term(state, params, u_mu);
}

Vector rhs_moment_infection_healing(const MacroState &state, const TransitionMatrix &p_eff,
                                    const ModelParams &params, const Vector &u_sigma) {
    if (params.variant != ModelVariant::InfectionHealing)
        fail(ErrorCode::WrongVariant,
             "rhs_moment_infection_healing needs the infection-healing model");
    check_state(state, p_eff);
    return migration_flux(state.mom, p_eff, params.chi) + interaction_term(state, params, u_sigma);
}

NodeMeans derived_means(const MacroState &state, double mean_floor) {
    const int n = state.size();
    NodeMeans out{Vector(n), std::vector<bool>(n, false)};
    for (int i = 0; i < n; ++i) {
        if (state.rho[i] >= mean_floor && state.rho[i] > 0.0) {
            out.m[i] = state.mom[i] / state.rho[i];
            out.defined[i] = true;
        } else {
            out.m[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

} // namespace netkin
