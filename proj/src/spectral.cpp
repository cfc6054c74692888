#include "netkin/spectral.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "netkin/error.hpp"

namespace netkin {

namespace {

constexpr double positivity_floor = 1e-14;

void require_healing_model(const ModelParams &params) {
    if (params.variant != ModelVariant::InfectionHealing)
        fail(ErrorCode::WrongVariant, "reproduction number needs the infection-healing model");
}

void require_constant_coefficients(const ModelParams &params) {
    for (Eigen::Index i = 1; i < params.nu1.size(); ++i)
        if (params.nu1[i] != params.nu1[0] || params.nu2[i] != params.nu2[0])
            fail(ErrorCode::HeterogeneousParams,
                 "R0 bracket assumes node-constant nu1 and nu2");
}

void require_positive_density(const Vector &rho) {
    for (Eigen::Index i = 0; i < rho.size(); ++i)
        if (!(rho[i] > positivity_floor))
            fail(ErrorCode::Reducible, "stationary density vanishes at node " +
                                           std::to_string(i + 1));
}

R0Bounds from_row_sums(Vector sums) {
    R0Bounds out;
    out.lower = sums.minCoeff();
    out.upper = sums.maxCoeff();
    out.row_sums = std::move(sums);
    return out;
}

} // namespace

CriticalDensities critical_densities(const ModelParams &params) {
    require_healing_model(params);
    const auto n = params.nu1.size();
    CriticalDensities out{Vector(n), std::vector<bool>(n, false)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const double infection = params.sigma * params.nu2[i];
        if (infection > 0.0) {
            out.rho_c[i] = params.gamma * params.nu1[i] / infection;
        } else {
            out.rho_c[i] = std::numeric_limits<double>::infinity();
            out.infection_free[i] = true;
        }
    }
    return out;
}

R0Bounds r0_bounds_uncontrolled(const TransitionMatrix &p, const StationaryDensity &rho_inf,
                                const ModelParams &params) {
    require_healing_model(params);
    require_constant_coefficients(params);
    const Vector &rho = rho_inf.rho_inf;
    const int n = p.size();
    if (rho.size() != n) fail(ErrorCode::DimensionMismatch, "rho_inf does not match P");
    require_positive_density(rho);
    const double chi = params.chi;
    const double heal = params.gamma * params.nu1[0];
    const double denom = chi + heal;
    if (!(denom > 0.0)) fail(ErrorCode::ZeroDenominator, "chi + gamma nu1 must be > 0");
    const double infect = params.sigma * params.nu2[0];

    Vector sums = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double beta = chi * p(i, j) * rho[j] / (chi * rho[i] + heal * rho[i]);
            if (i == j) beta += infect * rho[i] / denom;
            sums[i] += beta;
        }
    }
    return from_row_sums(std::move(sums));
}

R0Bounds r0_bounds_controlled(const TransitionMatrix &p, const StationaryDensity &rho_inf,
                              const ModelParams &params, const Vector &u_chi_inf,
                              const Vector &u_sigma_inf) {
    require_healing_model(params);
    require_constant_coefficients(params);
    const Vector &rho = rho_inf.rho_inf;
    const int n = p.size();
    if (rho.size() != n || u_chi_inf.size() != n || u_sigma_inf.size() != n)
        fail(ErrorCode::DimensionMismatch, "controlled R0 inputs do not match P");
    for (int i = 0; i < n; ++i)
        if (!(u_chi_inf[i] >= 0.0 && u_chi_inf[i] <= 1.0 && u_sigma_inf[i] >= 0.0 &&
              u_sigma_inf[i] <= 1.0))
            fail(ErrorCode::OutOfRangeControl, "asymptotic controls must lie in [0,1]");
    const double heal = params.gamma * params.nu1[0];
    const double infect = params.sigma * params.nu2[0];
    Vector q(n);
    for (int i = 0; i < n; ++i) {
        const double move = params.chi * (1.0 - u_chi_inf[i]);
        const double denom = move + heal;
        if (!(denom > 0.0))
            fail(ErrorCode::ZeroDenominator,
                 "chi (1 - u_chi) + gamma nu1 vanishes at node " + std::to_string(i + 1));
        q[i] = (move + (1.0 - u_sigma_inf[i]) * infect * rho[i]) / denom;
    }
    return from_row_sums(std::move(q));
}

Matrix linearized_matrix(const TransitionMatrix &p, const Vector &rho_inf,
                         const ModelParams &params) {
    require_healing_model(params);
    const int n = p.size();
    if (rho_inf.size() != n) fail(ErrorCode::DimensionMismatch, "rho_inf does not match P");
    require_positive_density(rho_inf);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = params.chi * p(i, j) * rho_inf[j] / rho_inf[i];
    for (int i = 0; i < n; ++i)
        a(i, i) += -params.chi + params.sigma * params.nu2[i] * rho_inf[i] -
                   params.gamma * params.nu1[i];
    return a;
}

namespace {

// Dominant eigenvalue of a nonnegative irreducible matrix.
double perron_root(const Matrix &m, long max_iterations, double tol) {
    const auto n = m.rows();
    // averaging with the identity removes periodicity without moving the eigenvector
    const Matrix lazy = 0.5 * (m + Matrix::Identity(n, n));
    Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
    double lambda = 0.0;
    for (long it = 0; it < max_iterations; ++it) {
        Vector y = lazy * x;
        const double next = y.sum() / x.sum();
        y /= y.sum();
        const double change = (y - x).cwiseAbs().maxCoeff();
        x.swap(y);
        if (change < tol && std::abs(next - lambda) < tol * std::max(1.0, std::abs(next))) {
            lambda = next;
            return 2.0 * lambda - 1.0;
        }
        lambda = next;
    }
    fail(ErrorCode::NoConvergence, "Perron root iteration did not converge");
}

} // namespace

double metzler_spectral_abscissa(const Matrix &a, long max_iterations, double tol) {
    const auto n = a.rows();
    double shift = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) shift = std::max(shift, -a(i, i));
    shift += 1.0;
    const Matrix shifted = a + shift * Matrix::Identity(n, n);
    if ((shifted.array() < 0.0).any())
        fail(ErrorCode::ValidationError, "matrix is not Metzler (negative off-diagonal entry)");
    return perron_root(shifted, max_iterations, tol) - shift;
}

double r0_spectral_radius(const TransitionMatrix &p, const StationaryDensity &rho_inf,
                          const ModelParams &params) {
    require_healing_model(params);
    const Vector &rho = rho_inf.rho_inf;
    const int n = p.size();
    require_positive_density(rho);
    Matrix bd(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double d = params.chi + params.gamma * params.nu1[j];
            if (!(d > 0.0)) fail(ErrorCode::ZeroDenominator, "chi + gamma nu1 must be > 0");
            double b = params.chi * p(i, j) * rho[j] / rho[i];
            if (i == j) b += params.sigma * params.nu2[i] * rho[i];
            bd(i, j) = b / d;
        }
    }
    return perron_root(bd, 1'000'000, 1e-13);
}

} // namespace netkin
