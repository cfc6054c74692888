#pragma once

#include <random>

#include "netkin/scenario.hpp"

namespace netkin::testing {

inline Matrix table1_matrix() { return preset("test1_uncontrolled").matrix.entries; }
inline TransitionMatrix table1() { return TransitionMatrix::validate(table1_matrix()); }

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

/// Random column-stochastic matrix with strictly positive entries.
inline Matrix random_stochastic(int n, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    Matrix m(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) m(i, j) = u(rng);
        m.col(j) /= m.col(j).sum();
    }
    return m;
}

inline Vector random_vector(int n, std::mt19937_64 &rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

} // namespace netkin::testing
