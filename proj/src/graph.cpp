#include "netkin/graph.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "netkin/error.hpp"

namespace netkin {

namespace {

std::vector<bool> reachable_from_zero(const Matrix &m, bool transposed) {
    const auto n = m.rows();
    std::vector<bool> seen(n, false);
    std::queue<Eigen::Index> frontier;
    seen[0] = true;
    frontier.push(0);
    while (!frontier.empty()) {
        const auto j = frontier.front();
        frontier.pop();
        for (Eigen::Index i = 0; i < n; ++i) {
            // edge j -> i exists when P_ij > 0
            const double w = transposed ? m(j, i) : m(i, j);
            if (w > 0.0 && !seen[i]) {
                seen[i] = true;
                frontier.push(i);
            }
        }
    }
    return seen;
}

bool all_true(const std::vector<bool> &v) {
    for (bool b : v)
        if (!b) return false;
    return true;
}

} // namespace

bool is_strongly_connected(const Matrix &m) {
    if (m.rows() == 0) return false;
    return all_true(reachable_from_zero(m, false)) && all_true(reachable_from_zero(m, true));
}

TransitionMatrix TransitionMatrix::validate(const Matrix &raw, double tol) {
    if (raw.rows() == 0 || raw.cols() == 0) fail(ErrorCode::EmptyMatrix, "transition matrix is empty");
    if (raw.rows() != raw.cols())
        fail(ErrorCode::DimensionMismatch, "transition matrix must be square, got " +
                                               std::to_string(raw.rows()) + "x" +
                                               std::to_string(raw.cols()));
    Matrix m = raw;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (!std::isfinite(m(i, j)))
                fail(ErrorCode::NonStochastic, "non-finite entry at (" + std::to_string(i + 1) +
                                                   "," + std::to_string(j + 1) + ")");
            if (m(i, j) < 0.0)
                fail(ErrorCode::NegativeEntry, "negative entry at (" + std::to_string(i + 1) + "," +
                                                   std::to_string(j + 1) + ")");
        }
        const double s = m.col(j).sum();
        if (std::abs(s - 1.0) >= tol) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "column " << j + 1 << " sums to " << s << " (tolerance " << tol << ")";
            fail(ErrorCode::NonStochastic, msg.str());
        }
        m.col(j) /= s;
    }
    const bool irreducible = is_strongly_connected(m);
    return TransitionMatrix(std::move(m), irreducible);
}

double TransitionMatrix::min_positive_entry() const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m_entries.cols(); ++j)
        for (Eigen::Index i = 0; i < m_entries.rows(); ++i)
            if (m_entries(i, j) > 0.0 && m_entries(i, j) < best) best = m_entries(i, j);
    return std::isfinite(best) ? best : 1.0;
}

TransitionMatrix controlled_matrix(const TransitionMatrix &p, const Vector &u_chi) {
    const int n = p.size();
    if (u_chi.size() != n)
        fail(ErrorCode::DimensionMismatch, "u_chi has length " + std::to_string(u_chi.size()) +
                                               ", expected " + std::to_string(n));
    for (int i = 0; i < n; ++i)
        if (!(u_chi[i] >= 0.0 && u_chi[i] <= 1.0))
            fail(ErrorCode::OutOfRangeControl,
                 "u_chi[" + std::to_string(i + 1) + "] = " + std::to_string(u_chi[i]) +
                     " outside [0,1]");

    const Matrix &pm = p.entries();
    Matrix pu(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i)
            if (i != j) pu(i, j) = pm(i, j) * (1.0 - u_chi[i]);
        // P_jj + sum_{k != j} u_k P_kj
        pu(j, j) = pm(j, j);
        for (int k = 0; k < n; ++k)
            if (k != j) pu(j, j) += u_chi[k] * pm(k, j);
    }
    const bool irreducible =
        (p.irreducible() && u_chi.maxCoeff() < 1.0) ? true : is_strongly_connected(pu);
    return TransitionMatrix(std::move(pu), irreducible);
}

StationaryDensity stationary_density(const TransitionMatrix &p, double total_mass,
                                     long max_iterations, double tol) {
    if (!p.irreducible())
        fail(ErrorCode::Reducible, "stationary density requires an irreducible matrix");
    const int n = p.size();
    const Matrix &pm = p.entries();
    Vector rho = Vector::Constant(n, 1.0 / n);
    Vector next(n);
    StationaryDensity out;
    for (long it = 1; it <= max_iterations; ++it) {
        next.noalias() = 0.5 * (pm * rho + rho);
        next /= next.sum();
        rho.swap(next);
        if (it % 8 == 0 || it == max_iterations) {
            const double residual = (pm * rho - rho).cwiseAbs().maxCoeff();
            if (residual < tol) {
                out.rho_inf = rho * total_mass;
                out.iterations = it;
                out.residual = residual;
                return out;
            }
        }
    }
    fail(ErrorCode::NoConvergence,
         "power iteration did not converge in " + std::to_string(max_iterations) + " iterations");
}

bool check_metzler_condition(const TransitionMatrix &p) {
    const Matrix &pm = p.entries();
    for (int i = 0; i < p.size(); ++i) {
        const double off_row = pm.row(i).sum() - pm(i, i);
        if (pm(i, i) < off_row - 1.0) return false;
    }
    return true;
}

namespace {

std::vector<double> split_numbers(const std::string &line, int line_no) {
    std::string cleaned = line;
    for (char &c : cleaned)
        if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(cleaned);
    std::vector<double> values;
    std::string token;
    while (ss >> token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != token.size())
            fail(ErrorCode::ParseError,
                 "line " + std::to_string(line_no) + ": '" + token + "' is not a number");
        values.push_back(v);
    }
    return values;
}

bool is_blank_or_comment(const std::string &line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

} // namespace

Matrix read_matrix(std::istream &in, Orientation orientation) {
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        auto row = split_numbers(line, line_no);
        if (!rows.empty() && row.size() != rows.front().size())
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": matrix row " +
                                            std::to_string(rows.size() + 1) + " has " +
                                            std::to_string(row.size()) + " entries, expected " +
                                            std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(ErrorCode::EmptyMatrix, "no matrix rows found");
    const auto n = static_cast<Eigen::Index>(rows.front().size());
    if (static_cast<Eigen::Index>(rows.size()) != n)
        fail(ErrorCode::ParseError, "matrix row " + std::to_string(rows.size() + 1) +
                                        " missing: found " + std::to_string(rows.size()) +
                                        " rows for " + std::to_string(n) + " columns");
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
    if (orientation == Orientation::RowStochastic) m.transposeInPlace();
    return m;
}

Matrix read_matrix_file(const std::filesystem::path &path, Orientation orientation) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open matrix file " + path.string());
    return read_matrix(in, orientation);
}

Vector read_vector_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open vector file " + path.string());
    std::vector<double> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        for (double v : split_numbers(line, line_no)) values.push_back(v);
    }
    Vector out(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) out[static_cast<Eigen::Index>(i)] = values[i];
    return out;
}

} // namespace netkin
