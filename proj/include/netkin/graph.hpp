#pragma once

#include <filesystem>
#include <iosfwd>

#include "netkin/types.hpp"

namespace netkin {

/// Column-stochastic transition matrix: entry (i, j) is the probability of
/// jumping from node j to node i. Immutable once validated.
class TransitionMatrix {
  public:
    /// Renormalizes columns whose sum is within `tol` of one; rejects the rest.
    static TransitionMatrix validate(const Matrix &raw, double tol = 1e-12);

    int size() const { return static_cast<int>(m_entries.rows()); }
    const Matrix &entries() const { return m_entries; }
    double operator()(int i, int j) const { return m_entries(i, j); }
    bool irreducible() const { return m_irreducible; }

    /// Smallest entry; the literal clamp floor of the mobility control.
    double min_entry() const { return m_entries.minCoeff(); }
    /// Smallest strictly positive entry (1 for the identity-like degenerate case).
    double min_positive_entry() const;

  private:
    TransitionMatrix(Matrix entries, bool irreducible)
        : m_entries(std::move(entries)), m_irreducible(irreducible) {}

    friend TransitionMatrix controlled_matrix(const TransitionMatrix &, const Vector &);

    Matrix m_entries;
    bool m_irreducible;
};

/// Strong connectivity of the digraph j -> i over positive entries
/// (forward and transposed breadth-first search from node 0).
bool is_strongly_connected(const Matrix &m);

/// Mobility-controlled matrix: off-diagonal (i, j) scaled by (1 - u_chi[i]),
/// diagonal absorbs the suppressed outflow so every column still sums to one.
TransitionMatrix controlled_matrix(const TransitionMatrix &p, const Vector &u_chi);

struct StationaryDensity {
    Vector rho_inf;
    long iterations = 0;
    double residual = 0.0;
};

/// Perron vector of an irreducible P scaled to `total_mass`.
///
/// Iterates the lazy chain (P + I) / 2, which has the same fixed point as P
/// but is aperiodic, so periodic irreducible graphs converge as well.
StationaryDensity stationary_density(const TransitionMatrix &p, double total_mass,
                                     long max_iterations = 1'000'000,
                                     double tol = 1e-12);

/// Row condition P_ii >= sum_{k != i} P_ik - 1 for every node. When it holds
/// the controlled mass system is globally asymptotically stable.
bool check_metzler_condition(const TransitionMatrix &p);

enum class Orientation { ColumnStochastic, RowStochastic };

/// Reads one matrix row per line; entries separated by commas and/or
/// whitespace. Lines starting with '#' are comments. Row-stochastic input is
/// transposed on load.
Matrix read_matrix(std::istream &in, Orientation orientation = Orientation::ColumnStochastic);
Matrix read_matrix_file(const std::filesystem::path &path,
                        Orientation orientation = Orientation::ColumnStochastic);

/// Reads a whitespace/comma separated list of numbers (one or many per line).
Vector read_vector_file(const std::filesystem::path &path);

} // namespace netkin
