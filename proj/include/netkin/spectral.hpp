#pragma once

#include <vector>

#include "netkin/dynamics.hpp"
#include "netkin/graph.hpp"

namespace netkin {

/// rho_i^c = gamma nu1_i / (sigma nu2_i): node mass above which in-node
/// infection outpaces healing.
struct CriticalDensities {
    Vector rho_c;                     ///< +inf on infection-free nodes
    std::vector<bool> infection_free; ///< sigma nu2_i == 0
};

CriticalDensities critical_densities(const ModelParams &params);

/// Perron-Frobenius bracket of the basic reproduction number from the row
/// sums of B D^{-1}.
struct R0Bounds {
    double lower = 0.0;
    double upper = 0.0;
    Vector row_sums;
};

/// beta_ij = chi P_ij rho_j / ((chi + gamma nu1) rho_i) + sigma nu2 rho_i delta_ij / (chi + gamma nu1).
/// Requires node-constant nu1, nu2.
R0Bounds r0_bounds_uncontrolled(const TransitionMatrix &p, const StationaryDensity &rho_inf,
                                const ModelParams &params);

/// Per-node quotient (chi (1-u_chi) + sigma (1-u_sigma) nu2 rho_i) / (chi (1-u_chi) + gamma nu1),
/// bracketed by its min and max over nodes.
R0Bounds r0_bounds_controlled(const TransitionMatrix &p, const StationaryDensity &rho_inf,
                              const ModelParams &params, const Vector &u_chi_inf,
                              const Vector &u_sigma_inf);

/// Linearization of the mean equations around (rho_inf, 0):
/// A = chi (R^{-1} P R - I) + diag(sigma nu2_i rho_i - gamma nu1_i).
/// Node-dependent coefficients are allowed here.
Matrix linearized_matrix(const TransitionMatrix &p, const Vector &rho_inf,
                         const ModelParams &params);

/// Rightmost eigenvalue of a Metzler matrix, by power iteration on A + s I
/// with s large enough to make the shifted matrix nonnegative.
double metzler_spectral_abscissa(const Matrix &a, long max_iterations = 200'000,
                                 double tol = 1e-13);

/// Spectral radius of B D^{-1} (the exact R0 inside the bracket), by power
/// iteration. Diagnostic only.
double r0_spectral_radius(const TransitionMatrix &p, const StationaryDensity &rho_inf,
                          const ModelParams &params);

} // namespace netkin
