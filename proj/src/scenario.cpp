#include "netkin/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "netkin/error.hpp"

namespace netkin {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    for (auto &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_list(const Vector &v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt(v[i]);
    }
    return out;
}

[[noreturn]] void parse_fail(int line, const std::string &key, const std::string &why) {
    std::ostringstream msg;
    msg << "line " << line;
    if (!key.empty()) msg << ", key '" << key << "'";
    msg << ": " << why;
    fail(ErrorCode::ParseError, msg.str());
}

[[noreturn]] void invalid(const std::string &key, const std::string &why) {
    fail(ErrorCode::ValidationError, key + ": " + why);
}

struct Entry {
    std::string value;
    int line = 0;
};

double to_double(const Entry &e, const std::string &key) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(e.value, &used);
    } catch (const std::exception &) {
        parse_fail(e.line, key, "expected a number, got '" + e.value + "'");
    }
    if (trim(e.value.substr(used)).size())
        parse_fail(e.line, key, "trailing characters in '" + e.value + "'");
    return x;
}

long long to_integer(const Entry &e, const std::string &key) {
    const double x = to_double(e, key);
    if (x != std::floor(x) || std::abs(x) > 9.0e15)
        parse_fail(e.line, key, "expected an integer, got '" + e.value + "'");
    return static_cast<long long>(x);
}

std::uint64_t to_seed(const Entry &e, const std::string &key) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(e.value, &used);
        if (trim(e.value.substr(used)).empty() && e.value.find('-') == std::string::npos) return v;
    } catch (const std::exception &) {
    }
    parse_fail(e.line, key, "expected a nonnegative integer, got '" + e.value + "'");
}

std::vector<double> to_numbers(const std::string &text, int line, const std::string &key) {
    std::string s = text;
    for (auto &c : s)
        if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(to_double(Entry{tok, line}, key));
    if (out.empty()) parse_fail(line, key, "empty list");
    return out;
}

Vector to_vector(const std::vector<double> &xs) {
    return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>> &known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"scenario", {"name"}},
        {"model", {"variant", "chi", "mu", "sigma", "gamma", "nu1", "nu2"}},
        {"graph", {"row", "file", "orientation", "tolerance"}},
        {"initial", {"rho", "counts", "rho_file", "counts_file", "population_scale", "m"}},
        {"policy",
         {"q", "mobility", "interaction", "t_bar", "delta", "k_sigma", "k_chi_factor",
          "k_mu_factor", "relaxed_scale", "k_global"}},
        {"integration", {"dt", "t_end", "record_every"}},
        {"mc", {"agents", "seed", "noise", "replicas", "workers"}},
        {"output", {"dir"}},
    };
    return keys;
}

struct RawScenario {
    std::map<std::string, Section> sections;
    std::vector<std::pair<std::vector<double>, int>> rows; // inline matrix rows with line numbers
    int graph_line = 0;
};

RawScenario read_sections(std::istream &in) {
    RawScenario raw;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') parse_fail(lineno, "", "unterminated section header");
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (!known_keys().count(section)) parse_fail(lineno, "", "unknown section [" + section + "]");
            if (raw.sections.count(section)) parse_fail(lineno, "", "duplicate section [" + section + "]");
            raw.sections[section];
            if (section == "graph") raw.graph_line = lineno;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail(lineno, "", "expected key = value");
        if (section.empty()) parse_fail(lineno, "", "key outside of any section");
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        const std::string full = section + "." + key;
        if (!known_keys().at(section).count(key)) parse_fail(lineno, full, "unknown key");
        if (section == "graph" && key == "row") {
            raw.rows.emplace_back(to_numbers(value, lineno, full), lineno);
            continue;
        }
        auto &sec = raw.sections[section];
        if (sec.count(key)) parse_fail(lineno, full, "duplicate key");
        if (value.empty()) parse_fail(lineno, full, "missing value");
        sec[key] = Entry{value, lineno};
    }
    return raw;
}

const Entry *find(const RawScenario &raw, const std::string &section, const std::string &key) {
    const auto s = raw.sections.find(section);
    if (s == raw.sections.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &file) {
    std::filesystem::path p(file);
    if (p.is_relative() && !base.empty()) p = base / p;
    return std::filesystem::weakly_canonical(p);
}

ModelVariant parse_variant(const Entry &e) {
    const auto v = lower(e.value);
    if (v == "exchange") return ModelVariant::Exchange;
    if (v == "infection_healing" || v == "infection-healing") return ModelVariant::InfectionHealing;
    parse_fail(e.line, "model.variant", "expected exchange or infection_healing");
}

MobilityMode parse_mobility(const Entry &e) {
    const auto v = lower(e.value);
    if (v == "off") return MobilityMode::Off;
    if (v == "feedback") return MobilityMode::Feedback;
    if (v == "suppress" || v == "full_suppression") return MobilityMode::FullSuppression;
    parse_fail(e.line, "policy.mobility", "expected off, feedback or suppress");
}

InteractionMode parse_interaction(const Entry &e) {
    const auto v = lower(e.value);
    if (v == "off") return InteractionMode::Off;
    if (v == "feedback") return InteractionMode::Feedback;
    if (v == "feedback_until") return InteractionMode::FeedbackUntil;
    if (v == "relaxed") return InteractionMode::ExplicitLaw;
    parse_fail(e.line, "policy.interaction", "expected off, feedback, feedback_until or relaxed");
}

const char *name_of(ModelVariant v) {
    return v == ModelVariant::Exchange ? "exchange" : "infection_healing";
}

const char *name_of(MobilityMode m) {
    switch (m) {
    case MobilityMode::Off: return "off";
    case MobilityMode::Feedback: return "feedback";
    case MobilityMode::FullSuppression: return "suppress";
    }
    return "off";
}

const char *name_of(InteractionMode m) {
    switch (m) {
    case InteractionMode::Off: return "off";
    case InteractionMode::Feedback: return "feedback";
    case InteractionMode::FeedbackUntil: return "feedback_until";
    case InteractionMode::ExplicitLaw: return "relaxed";
    }
    return "off";
}

// nu1/nu2 accept a single value broadcast to every node
Vector node_values(const Entry &e, const std::string &key, int n) {
    const auto xs = to_numbers(e.value, e.line, key);
    if (xs.size() == 1) return Vector::Constant(n, xs[0]);
    return to_vector(xs);
}

} // namespace

TransitionMatrix Scenario::transition() const {
    return TransitionMatrix::validate(matrix.entries, matrix.tolerance);
}

MacroState Scenario::initial_state() const { return MacroState::from_means(initial_rho, initial_m); }

Scenario parse_scenario(std::istream &in, const std::filesystem::path &base_dir) {
    const RawScenario raw = read_sections(in);
    Scenario s;

    if (auto e = find(raw, "scenario", "name")) s.name = e->value;

    // graph first: it fixes n
    const Entry *file = find(raw, "graph", "file");
    if (const Entry *o = find(raw, "graph", "orientation")) {
        const auto v = lower(o->value);
        if (v == "column") s.matrix.orientation = Orientation::ColumnStochastic;
        else if (v == "row") s.matrix.orientation = Orientation::RowStochastic;
        else parse_fail(o->line, "graph.orientation", "expected column or row");
    }
    if (auto e = find(raw, "graph", "tolerance")) s.matrix.tolerance = to_double(*e, "graph.tolerance");
    if (file && !raw.rows.empty())
        parse_fail(file->line, "graph.file", "give either graph.file or inline rows, not both");
    if (file) {
        const auto path = resolve(base_dir, file->value);
        if (!std::filesystem::exists(path))
            invalid("graph.file", "file not found: " + path.string());
        s.matrix.file = path.string();
        if (!find(raw, "graph", "tolerance")) s.matrix.tolerance = ingested_matrix_tolerance;
        s.matrix.entries = read_matrix_file(path, s.matrix.orientation);
    } else {
        if (raw.rows.empty()) parse_fail(raw.graph_line, "graph.row", "no matrix given");
        const std::size_t cols = raw.rows.front().first.size();
        for (std::size_t r = 0; r < raw.rows.size(); ++r) {
            if (raw.rows[r].first.size() != cols) {
                std::ostringstream why;
                why << "matrix row " << r + 1 << " has " << raw.rows[r].first.size()
                    << " entries, expected " << cols;
                parse_fail(raw.rows[r].second, "graph.row", why.str());
            }
        }
        if (raw.rows.size() < cols) {
            std::ostringstream why;
            why << "matrix row " << raw.rows.size() + 1 << " missing: found " << raw.rows.size()
                << " rows for " << cols << " columns";
            parse_fail(raw.rows.back().second, "graph.row", why.str());
        }
        if (raw.rows.size() > cols) {
            std::ostringstream why;
            why << "matrix has " << raw.rows.size() << " rows for " << cols << " columns";
            parse_fail(raw.rows[cols].second, "graph.row", why.str());
        }
        const auto n = static_cast<Eigen::Index>(cols);
        Matrix m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) m(i, j) = raw.rows[i].first[j];
        s.matrix.entries = s.matrix.orientation == Orientation::RowStochastic ? Matrix(m.transpose()) : m;
    }
    const int n = static_cast<int>(s.matrix.entries.rows());

    // model
    if (auto e = find(raw, "model", "variant")) s.model.variant = parse_variant(*e);
    if (auto e = find(raw, "model", "chi")) s.model.chi = to_double(*e, "model.chi");
    if (auto e = find(raw, "model", "mu")) s.model.mu = to_double(*e, "model.mu");
    if (auto e = find(raw, "model", "sigma")) s.model.sigma = to_double(*e, "model.sigma");
    if (auto e = find(raw, "model", "gamma")) s.model.gamma = to_double(*e, "model.gamma");
    const Entry *nu1 = find(raw, "model", "nu1");
    const Entry *nu2 = find(raw, "model", "nu2");
    if (!nu1) invalid("model.nu1", "required");
    if (!nu2) invalid("model.nu2", "required");
    s.model.nu1 = node_values(*nu1, "model.nu1", n);
    s.model.nu2 = node_values(*nu2, "model.nu2", n);

    // initial data
    const Entry *rho = find(raw, "initial", "rho");
    const Entry *counts = find(raw, "initial", "counts");
    const Entry *rho_file = find(raw, "initial", "rho_file");
    const Entry *counts_file = find(raw, "initial", "counts_file");
    const int given = (rho != nullptr) + (counts != nullptr) + (rho_file != nullptr) + (counts_file != nullptr);
    if (given != 1) invalid("initial.rho", "give exactly one of rho, counts, rho_file, counts_file");
    Vector r0;
    if (rho) r0 = to_vector(to_numbers(rho->value, rho->line, "initial.rho"));
    if (counts) r0 = to_vector(to_numbers(counts->value, counts->line, "initial.counts"));
    if (rho_file || counts_file) {
        const Entry *f = rho_file ? rho_file : counts_file;
        const auto path = resolve(base_dir, f->value);
        if (!std::filesystem::exists(path))
            invalid(rho_file ? "initial.rho_file" : "initial.counts_file",
                    "file not found: " + path.string());
        r0 = read_vector_file(path);
    }
    if (counts || counts_file) {
        const double total = r0.sum();
        if (!(total > 0.0)) invalid("initial.counts", "counts must have a positive total");
        s.population_scale = total;
        r0 /= total;
    } else if (auto e = find(raw, "initial", "population_scale")) {
        s.population_scale = to_double(*e, "initial.population_scale");
    }
    s.initial_rho = r0;
    const Entry *m = find(raw, "initial", "m");
    if (!m) invalid("initial.m", "required");
    s.initial_m = node_values(*m, "initial.m", n);

    // policy
    auto &pol = s.policy;
    if (auto e = find(raw, "policy", "q")) pol.q = to_double(*e, "policy.q");
    if (auto e = find(raw, "policy", "mobility")) pol.mobility = parse_mobility(*e);
    if (auto e = find(raw, "policy", "interaction")) pol.interaction = parse_interaction(*e);
    if (auto e = find(raw, "policy", "t_bar")) pol.t_bar = to_double(*e, "policy.t_bar");
    if (auto e = find(raw, "policy", "delta")) {
        const auto v = lower(e->value);
        if (v == "min_entry") pol.delta_rule = DeltaRule::MinEntry;
        else if (v == "min_positive_entry") pol.delta_rule = DeltaRule::MinPositiveEntry;
        else {
            pol.delta_rule = DeltaRule::Fixed;
            pol.delta_value = to_double(*e, "policy.delta");
        }
    }
    if (auto e = find(raw, "policy", "k_sigma")) {
        const auto v = lower(e->value);
        if (v == "interval_lower") pol.k_sigma = KSigmaStrategy::IntervalLower;
        else if (v == "interval_upper") pol.k_sigma = KSigmaStrategy::IntervalUpper;
        else {
            pol.k_sigma = KSigmaStrategy::Explicit;
            pol.k_sigma_explicit = to_double(*e, "policy.k_sigma");
        }
    }
    if (auto e = find(raw, "policy", "k_chi_factor")) pol.k_chi_factor = to_double(*e, "policy.k_chi_factor");
    if (auto e = find(raw, "policy", "k_mu_factor")) pol.k_mu_factor = to_double(*e, "policy.k_mu_factor");
    if (auto e = find(raw, "policy", "relaxed_scale")) pol.relaxed_scale = to_double(*e, "policy.relaxed_scale");
    if (auto e = find(raw, "policy", "k_global")) s.k_global = to_double(*e, "policy.k_global");

    if (auto e = find(raw, "integration", "dt")) s.integration.dt = to_double(*e, "integration.dt");
    if (auto e = find(raw, "integration", "t_end")) s.integration.t_end = to_double(*e, "integration.t_end");
    if (auto e = find(raw, "integration", "record_every"))
        s.integration.record_every = static_cast<int>(to_integer(*e, "integration.record_every"));

    if (auto e = find(raw, "mc", "agents")) {
        const auto a = to_integer(*e, "mc.agents");
        if (a <= 0) invalid("mc.agents", "must be positive");
        s.mc.agents = static_cast<std::size_t>(a);
    }
    if (auto e = find(raw, "mc", "seed")) s.mc.seed = to_seed(*e, "mc.seed");
    if (auto e = find(raw, "mc", "noise")) s.mc.noise = to_double(*e, "mc.noise");
    if (auto e = find(raw, "mc", "replicas")) s.mc.replicas = static_cast<int>(to_integer(*e, "mc.replicas"));
    if (auto e = find(raw, "mc", "workers")) s.mc.workers = static_cast<int>(to_integer(*e, "mc.workers"));

    if (auto e = find(raw, "output", "dir")) s.output.dir = e->value;

    validate(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open scenario file " + path.string());
    Scenario s = parse_scenario(in, path.parent_path());
    if (s.name.empty()) s.name = path.stem().string();
    return s;
}

void validate(const Scenario &s) {
    const int n = static_cast<int>(s.matrix.entries.rows());
    if (n == 0) invalid("graph", "empty matrix");
    try {
        (void)s.transition();
    } catch (const Error &e) {
        invalid("graph", e.what());
    }
    s.model.validate(n);
    if (s.initial_rho.size() != n)
        invalid("initial.rho", "length " + std::to_string(s.initial_rho.size()) + " does not match " +
                                   std::to_string(n) + " nodes");
    if (s.initial_m.size() != n)
        invalid("initial.m", "length " + std::to_string(s.initial_m.size()) + " does not match " +
                                 std::to_string(n) + " nodes");
    for (int i = 0; i < n; ++i) {
        if (!(s.initial_rho[i] >= 0.0) || !std::isfinite(s.initial_rho[i]))
            invalid("initial.rho", "entries must be finite and nonnegative");
        if (!(s.initial_m[i] >= 0.0) || !std::isfinite(s.initial_m[i]))
            invalid("initial.m", "entries must be finite and nonnegative");
    }
    if (std::abs(s.initial_rho.sum() - 1.0) > 1e-6)
        invalid("initial.rho", "fractions sum to " + fmt(s.initial_rho.sum()) + ", expected 1");
    if (!(s.population_scale > 0.0)) invalid("initial.population_scale", "must be positive");
    s.policy.validate();
    if (s.policy.interaction == InteractionMode::ExplicitLaw &&
        s.model.variant != ModelVariant::InfectionHealing)
        invalid("policy.interaction", "the relaxed law needs the infection-healing model");
    if (!(s.k_global >= 0.0)) invalid("policy.k_global", "must be >= 0");
    if (!(s.integration.dt > 0.0)) invalid("integration.dt", "must be > 0");
    if (!(s.integration.t_end > 0.0)) invalid("integration.t_end", "must be > 0");
    if (s.integration.record_every < 1) invalid("integration.record_every", "must be >= 1");
    if (s.mc.agents == 0) invalid("mc.agents", "must be positive");
    if (s.mc.replicas < 1) invalid("mc.replicas", "must be >= 1");
    if (s.mc.workers < 1) invalid("mc.workers", "must be >= 1");
    if (!(s.mc.noise >= 0.0)) invalid("mc.noise", "must be >= 0");
}

std::string serialize(const Scenario &s) {
    std::ostringstream out;
    out << "[scenario]\n";
    if (!s.name.empty()) out << "name = " << s.name << "\n";

    out << "\n[model]\n"
        << "variant = " << name_of(s.model.variant) << "\n"
        << "chi = " << fmt(s.model.chi) << "\n"
        << "mu = " << fmt(s.model.mu) << "\n"
        << "sigma = " << fmt(s.model.sigma) << "\n"
        << "gamma = " << fmt(s.model.gamma) << "\n"
        << "nu1 = " << fmt_list(s.model.nu1) << "\n"
        << "nu2 = " << fmt_list(s.model.nu2) << "\n";

    out << "\n[graph]\n";
    out << "tolerance = " << fmt(s.matrix.tolerance) << "\n";
    if (!s.matrix.file.empty()) {
        out << "file = " << s.matrix.file << "\n"
            << "orientation = "
            << (s.matrix.orientation == Orientation::RowStochastic ? "row" : "column") << "\n";
    } else {
        // inline rows are stored column-stochastic whatever their original orientation
        out << "orientation = column\n";
        for (Eigen::Index i = 0; i < s.matrix.entries.rows(); ++i)
            out << "row = " << fmt_list(s.matrix.entries.row(i).transpose()) << "\n";
    }

    out << "\n[initial]\n"
        << "rho = " << fmt_list(s.initial_rho) << "\n"
        << "population_scale = " << fmt(s.population_scale) << "\n"
        << "m = " << fmt_list(s.initial_m) << "\n";

    const auto &p = s.policy;
    out << "\n[policy]\n"
        << "q = " << fmt(p.q) << "\n"
        << "mobility = " << name_of(p.mobility) << "\n"
        << "interaction = " << name_of(p.interaction) << "\n"
        << "t_bar = " << fmt(p.t_bar) << "\n";
    switch (p.delta_rule) {
    case DeltaRule::MinEntry: out << "delta = min_entry\n"; break;
    case DeltaRule::MinPositiveEntry: out << "delta = min_positive_entry\n"; break;
    case DeltaRule::Fixed: out << "delta = " << fmt(p.delta_value) << "\n"; break;
    }
    switch (p.k_sigma) {
    case KSigmaStrategy::IntervalLower: out << "k_sigma = interval_lower\n"; break;
    case KSigmaStrategy::IntervalUpper: out << "k_sigma = interval_upper\n"; break;
    case KSigmaStrategy::Explicit: out << "k_sigma = " << fmt(p.k_sigma_explicit) << "\n"; break;
    }
    out << "k_chi_factor = " << fmt(p.k_chi_factor) << "\n"
        << "k_mu_factor = " << fmt(p.k_mu_factor) << "\n"
        << "relaxed_scale = " << fmt(p.relaxed_scale) << "\n"
        << "k_global = " << fmt(s.k_global) << "\n";

    out << "\n[integration]\n"
        << "dt = " << fmt(s.integration.dt) << "\n"
        << "t_end = " << fmt(s.integration.t_end) << "\n"
        << "record_every = " << s.integration.record_every << "\n";

    out << "\n[mc]\n"
        << "agents = " << s.mc.agents << "\n"
        << "seed = " << s.mc.seed << "\n"
        << "noise = " << fmt(s.mc.noise) << "\n"
        << "replicas = " << s.mc.replicas << "\n"
        << "workers = " << s.mc.workers << "\n";

    out << "\n[output]\n"
        << "dir = " << s.output.dir << "\n";
    return out.str();
}

ControlledSystem make_system(const Scenario &s) {
    return ControlledSystem(s.transition(), s.model, s.policy, s.initial_state());
}

Trajectory simulate(const Scenario &s) {
    return integrate(make_system(s), s.initial_state(), s.integration);
}

} // namespace netkin
