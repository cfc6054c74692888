#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "netkin/control.hpp"
#include "netkin/dynamics.hpp"
#include "netkin/graph.hpp"
#include "netkin/integrate.hpp"

namespace netkin {

/// Column-sum tolerance for matrices read from files (finite-precision
/// decimals); inline and built-in exact matrices use 1e-12.
inline constexpr double ingested_matrix_tolerance = 1e-9;

struct MatrixSource {
    Matrix entries;    ///< column-stochastic orientation, as read (before renormalization)
    std::string file;  ///< empty for inline rows
    Orientation orientation = Orientation::ColumnStochastic;
    double tolerance = 1e-12;

    bool operator==(const MatrixSource &o) const {
        return same_values(entries, o.entries) && file == o.file && orientation == o.orientation &&
               tolerance == o.tolerance;
    }
};

struct McSettings {
    std::size_t agents = 100'000;
    std::uint64_t seed = 1;
    double noise = 0.0;
    int replicas = 1;
    int workers = 1;

    bool operator==(const McSettings &) const = default;
};

struct OutputSettings {
    std::string dir = "out";

    bool operator==(const OutputSettings &) const = default;
};

/// A complete, validated experiment. Immutable after load.
struct Scenario {
    std::string name;
    ModelParams model;
    MatrixSource matrix;
    Vector initial_rho;            ///< mass fractions (counts are normalized on load)
    Vector initial_m;
    double population_scale = 1.0; ///< divisor applied to raw counts, 1 for fractions
    ControlPolicy policy;
    double k_global = 0.0;         ///< global-control penalization; 0 picks the minimal admissible value
    IntegrationSettings integration;
    McSettings mc;
    OutputSettings output;

    int size() const { return static_cast<int>(initial_rho.size()); }
    TransitionMatrix transition() const;
    MacroState initial_state() const;

    bool operator==(const Scenario &o) const {
        return name == o.name && model == o.model && matrix == o.matrix &&
               same_values(initial_rho, o.initial_rho) && same_values(initial_m, o.initial_m) &&
               population_scale == o.population_scale && policy == o.policy &&
               k_global == o.k_global && integration == o.integration && mc == o.mc &&
               output == o.output;
    }
};

/// Parses the sectioned key = value format. Relative matrix/vector paths are
/// resolved against `base_dir`.
Scenario parse_scenario(std::istream &in, const std::filesystem::path &base_dir = {});
Scenario load_scenario(const std::filesystem::path &path);

/// Full-precision text form; the matrix is written inline unless it came
/// from a file.
std::string serialize(const Scenario &s);

/// Throws ValidationError naming the offending key.
void validate(const Scenario &s);

Scenario preset(const std::string &name);
const std::vector<std::string> &preset_names();

/// Macroscopic run with the scenario's feedback policy.
ControlledSystem make_system(const Scenario &s);
Trajectory simulate(const Scenario &s);

} // namespace netkin
