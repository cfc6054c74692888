#pragma once

#include <Eigen/Dense>

namespace netkin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Exact equality that tolerates differing shapes (Eigen's operator== does not).
template <typename A, typename B> bool same_values(const A &a, const B &b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

} // namespace netkin
