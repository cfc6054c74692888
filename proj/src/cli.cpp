#include "netkin/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "netkin/csv.hpp"
#include "netkin/error.hpp"
#include "netkin/mc.hpp"

namespace netkin {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::NonStochastic:
    case ErrorCode::NegativeEntry:
    case ErrorCode::EmptyMatrix:
    case ErrorCode::OutOfRangeControl:
    case ErrorCode::Reducible:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::WrongVariant:
    case ErrorCode::InvalidExponent:
    case ErrorCode::NonpositivePenalization:
    case ErrorCode::ZeroChi:
    case ErrorCode::HeterogeneousParams:
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::UnknownPreset:
        return ExitValidation;
    default:
        return ExitRuntime;
    }
}

// ---------------------------------------------------------------------------
// analyses shared by the subcommands

R0Series r0_series(const Scenario &s, const Trajectory &traj) {
    const TransitionMatrix p = s.transition();
    R0Series out;
    out.controlled = s.policy.mobility != MobilityMode::Off || s.policy.interaction != InteractionMode::Off;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const StationaryDensity now{traj.states[k].rho, 0, 0.0};
        out.times.push_back(traj.times[k]);
        out.bounds.push_back(out.controlled
                                 ? r0_bounds_controlled(p, now, s.model, traj.controls[k].u_chi,
                                                        traj.controls[k].u_interaction)
                                 : r0_bounds_uncontrolled(p, now, s.model));
    }
    const double mass = s.initial_state().total_mass();
    if (out.controlled) {
        const ControlSignal &last = traj.controls.back();
        const StationaryDensity limit = stationary_density(controlled_matrix(p, last.u_chi), mass);
        out.asymptotic = r0_bounds_controlled(p, limit, s.model, last.u_chi, last.u_interaction);
    } else {
        out.asymptotic = r0_bounds_uncontrolled(p, stationary_density(p, mass), s.model);
    }
    return out;
}

double default_k_global(const MacroState &initial, const ModelParams &params, double q) {
    double spread = 0.0;
    for (int i = 0; i < initial.size(); ++i)
        spread += std::abs(params.nu2[i] - params.nu1[i]) * initial.mom[i];
    const double k = psi_prime(initial.total_moment(), q) * params.mu * spread;
    return k > 0.0 ? k : 1.0;
}

namespace {

double clamp01(double x) { return std::min(std::max(0.0, x), 1.0); }

double network_mean(const MacroState &s) {
    return s.total_mass() > 0.0 ? s.total_moment() / s.total_mass() : 0.0;
}

} // namespace

GlobalLocalComparison compare_global_local(const Scenario &s) {
    if (s.model.variant != ModelVariant::Exchange)
        fail(ErrorCode::WrongVariant, "compare-global-local needs the exchange model");
    const TransitionMatrix p = s.transition();
    const MacroState y0 = s.initial_state();
    ControlPolicy mobility_only = s.policy;
    mobility_only.interaction = InteractionMode::Off;
    auto mobility = std::make_shared<FeedbackController>(p, s.model, mobility_only, y0);

    GlobalLocalComparison out;
    out.k = s.k_global > 0.0 ? s.k_global : default_k_global(y0, s.model, s.policy.q);
    const double k = out.k;
    const double q = s.policy.q;
    const ModelParams params = s.model;

    ControlLaw global = [=](const MacroState &x) {
        ControlSignal u = mobility->evaluate(x);
        u.u_interaction = Vector::Constant(x.size(), clamp01(global_u_mu(x, params, k, q).u));
        return u;
    };
    ControlLaw local = [=](const MacroState &x) {
        ControlSignal u = mobility->evaluate(x);
        u.u_interaction = global_u_mu(x, params, k, q).per_node.unaryExpr(&clamp01);
        return u;
    };
    const Trajectory tg = integrate(ControlledSystem(p, params, global), y0, s.integration);
    const Trajectory tl = integrate(ControlledSystem(p, params, local), y0, s.integration);
    for (std::size_t i = 0; i < tg.size(); ++i) {
        const GlobalControl g = global_u_mu(tg.states[i], params, k, q);
        out.times.push_back(tg.times[i]);
        out.u_global.push_back(g.u);
        out.u_local.push_back(g.per_node);
        out.residual.push_back(std::abs(g.u - g.per_node.sum()));
        out.mean_global.push_back(network_mean(tg.states[i]));
        out.mean_local.push_back(network_mean(tl.states[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// command-line plumbing

namespace {

struct Options {
    std::string preset;
    std::string scenario;
    std::string matrix;
    bool row_stochastic = false;
    std::optional<double> dt, t_end, delta, k_global, noise;
    bool delta_positive_min = false;
    std::string k_sigma;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> agents;
    std::optional<int> replicas, workers;
    std::string out_dir;
    bool quiet = false;
};

Scenario resolve_scenario(const Options &o) {
    if (!o.preset.empty() && !o.scenario.empty())
        fail(ErrorCode::ValidationError, "give either --preset or --scenario, not both");
    if (o.preset.empty() && o.scenario.empty())
        fail(ErrorCode::ValidationError, "a scenario is required: --preset NAME or --scenario FILE");
    Scenario s = o.preset.empty() ? load_scenario(o.scenario) : preset(o.preset);
    if (o.dt) s.integration.dt = *o.dt;
    if (o.t_end) s.integration.t_end = *o.t_end;
    if (o.delta_positive_min && o.delta)
        fail(ErrorCode::ValidationError, "--delta and --delta-positive-min are exclusive");
    if (o.delta_positive_min) s.policy.delta_rule = DeltaRule::MinPositiveEntry;
    if (o.delta) {
        s.policy.delta_rule = DeltaRule::Fixed;
        s.policy.delta_value = *o.delta;
    }
    if (!o.k_sigma.empty()) {
        if (o.k_sigma == "interval_lower") s.policy.k_sigma = KSigmaStrategy::IntervalLower;
        else if (o.k_sigma == "interval_upper") s.policy.k_sigma = KSigmaStrategy::IntervalUpper;
        else {
            try {
                std::size_t used = 0;
                s.policy.k_sigma_explicit = std::stod(o.k_sigma, &used);
                if (used != o.k_sigma.size()) throw std::invalid_argument(o.k_sigma);
            } catch (const std::exception &) {
                fail(ErrorCode::ValidationError,
                     "--k-sigma-strategy: expected interval_lower, interval_upper or a number");
            }
            s.policy.k_sigma = KSigmaStrategy::Explicit;
        }
    }
    if (o.k_global) s.k_global = *o.k_global;
    if (o.seed) s.mc.seed = *o.seed;
    if (o.agents) s.mc.agents = *o.agents;
    if (o.replicas) s.mc.replicas = *o.replicas;
    if (o.workers) s.mc.workers = *o.workers;
    if (o.noise) s.mc.noise = *o.noise;
    if (!o.out_dir.empty()) s.output.dir = o.out_dir;
    validate(s);
    return s;
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream out;
    out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

void write_file(const fs::path &path, const std::string &text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
    f << text;
    f.close();
    if (!f) fail(ErrorCode::IoError, "failed writing " + path.string());
}

/// Outputs first, manifest last via rename, so a manifest only exists for
/// runs that completed.
class RunOutput {
  public:
    RunOutput(const Scenario &s, std::string command)
        : m_scenario(s), m_command(std::move(command)), m_dir(s.output.dir),
          m_started(std::chrono::steady_clock::now()) {
        std::error_code ec;
        fs::create_directories(m_dir, ec);
        if (ec) fail(ErrorCode::IoError, "cannot create output directory " + m_dir.string());
    }

    fs::path add(const std::string &file, const std::string &text) {
        const fs::path path = m_dir / file;
        write_file(path, text);
        m_files.push_back(path);
        return path;
    }

    void warn(const std::string &w) { m_warnings.push_back(w); }
    void note(const std::string &key, const std::string &value) { m_extra.emplace_back(key, value); }

    fs::path finish() {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - m_started).count();
        std::ostringstream m;
        m << "# netkin run manifest\n"
          << "software = netkin " << NETKIN_VERSION << "\n"
          << "command = " << m_command << "\n"
          << "finished_utc = " << timestamp() << "\n"
          << "wall_clock_s = " << format_number(seconds) << "\n";
        for (const auto &f : m_files) m << "output = " << f.filename().string() << "\n";
        for (const auto &w : m_warnings) m << "warning = " << w << "\n";
        for (const auto &[k, v] : m_extra) m << k << " = " << v << "\n";
        m << "\n# resolved scenario\n" << serialize(m_scenario);
        const fs::path final_path = m_dir / (stem() + ".manifest");
        const fs::path tmp = m_dir / (stem() + ".manifest.tmp");
        write_file(tmp, m.str());
        std::error_code ec;
        fs::rename(tmp, final_path, ec);
        if (ec) {
            fs::remove(tmp, ec);
            fail(ErrorCode::IoError, "cannot publish manifest " + final_path.string());
        }
        return final_path;
    }

    std::string stem() const {
        const std::string base = m_scenario.name.empty() ? "run" : m_scenario.name;
        return m_command == "simulate" ? base : base + "_" + m_command;
    }

  private:
    const Scenario &m_scenario;
    std::string m_command;
    fs::path m_dir;
    std::chrono::steady_clock::time_point m_started;
    std::vector<fs::path> m_files;
    std::vector<std::string> m_warnings;
    std::vector<std::pair<std::string, std::string>> m_extra;
};

std::string notes_text(unsigned notes) {
    std::string out;
    if (notes & NoteNegativeMobilityFeedback) out += "negative mobility feedback lifted to delta; ";
    if (notes & NoteCriticalFallback) out += "rho^c >= 1 on some node, k^sigma lower bound used; ";
    if (!out.empty()) out.erase(out.size() - 2);
    return out;
}

int cmd_validate(const Options &o, std::ostream &out) {
    Matrix raw;
    double tol = ingested_matrix_tolerance;
    if (!o.matrix.empty()) {
        raw = read_matrix_file(o.matrix, o.row_stochastic ? Orientation::RowStochastic
                                                           : Orientation::ColumnStochastic);
    } else {
        const Scenario s = resolve_scenario(o);
        raw = s.matrix.entries;
        tol = s.matrix.tolerance;
    }
    const TransitionMatrix p = TransitionMatrix::validate(raw, tol);
    double deviation = 0.0;
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
        deviation = std::max(deviation, std::abs(raw.col(j).sum() - 1.0));
    out << "status=ok n=" << p.size() << " irreducible=" << (p.irreducible() ? "true" : "false")
        << " metzler_condition=" << (check_metzler_condition(p) ? "true" : "false")
        << " max_column_deviation=" << format_number(deviation) << "\n";
    return ExitOk;
}

int cmd_stationary(const Options &o, std::ostream &out) {
    TransitionMatrix p = [&] {
        if (!o.matrix.empty())
            return TransitionMatrix::validate(
                read_matrix_file(o.matrix, o.row_stochastic ? Orientation::RowStochastic
                                                            : Orientation::ColumnStochastic),
                ingested_matrix_tolerance);
        return resolve_scenario(o).transition();
    }();
    const StationaryDensity sd = stationary_density(p, 1.0);
    for (int i = 0; i < p.size(); ++i)
        out << "rho_inf_" << i + 1 << "=" << format_number(sd.rho_inf[i]) << "\n";
    out << "iterations=" << sd.iterations << " residual=" << format_number(sd.residual) << "\n";
    return ExitOk;
}

void print_summary(std::ostream &out, const Trajectory &traj) {
    const MacroState &y = traj.final_state();
    const ControlSignal &u = traj.controls.back();
    const NodeMeans means = derived_means(y);
    out << "t=" << format_number(y.t) << "\n";
    out << "node,rho,m,uchi,uint\n";
    for (int i = 0; i < y.size(); ++i) {
        out << i + 1 << ',' << format_number(y.rho[i]) << ',';
        if (means.defined[i]) out << format_number(means.m[i]);
        out << ',' << format_number(u.u_chi[i]) << ',' << format_number(u.u_interaction[i]) << "\n";
    }
    out << "total_mass=" << format_number(y.total_mass())
        << " total_mom=" << format_number(y.total_moment())
        << " network_mean=" << format_number(network_mean(y))
        << " max_mass_drift=" << format_number(traj.max_mass_drift()) << "\n";
}

int cmd_simulate(const Options &o, std::ostream &out, std::ostream &err) {
    const Scenario s = resolve_scenario(o);
    const Trajectory traj = simulate(s);
    RunOutput run(s, "simulate");
    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    const auto path = run.add(run.stem() + ".csv", csv.str());
    for (const auto &w : traj.warnings) {
        run.warn(w);
        err << "warning: " << w << "\n";
    }
    if (traj.notes) run.note("control_notes", notes_text(traj.notes));
    run.note("max_mass_drift", format_number(traj.max_mass_drift()));
    const auto manifest = run.finish();
    if (!o.quiet) {
        print_summary(out, traj);
        if (traj.notes) out << "notes: " << notes_text(traj.notes) << "\n";
        out << "wrote " << path.string() << " and " << manifest.string() << "\n";
    }
    return ExitOk;
}

int cmd_simulate_mc(const Options &o, std::ostream &out) {
    const Scenario s = resolve_scenario(o);
    const ControlledSystem system = make_system(s);
    McConfig config;
    config.agents = s.mc.agents;
    config.seed = s.mc.seed;
    config.dt = s.integration.dt;
    config.t_end = s.integration.t_end;
    config.record_every = s.integration.record_every;
    config.noise.amplitude = s.mc.noise;
    const ControlLaw law = [&system](const MacroState &x) { return system.controls(x); };
    const auto reps = run_replicas(system.matrix(), s.model, law, s.initial_state(), config,
                                   s.mc.replicas, s.mc.workers);
    RunOutput run(s, "mc");
    std::ostringstream csv;
    write_mc_csv(csv, reps);
    const auto path = run.add(run.stem() + ".csv", csv.str());
    run.note("agents", std::to_string(s.mc.agents));
    run.note("replicas", std::to_string(s.mc.replicas));
    const auto manifest = run.finish();
    if (!o.quiet) {
        const auto &last = reps.front().samples.back().estimate;
        out << "t=" << format_number(last.state.t) << " agents=" << s.mc.agents
            << " replicas=" << s.mc.replicas << "\n";
        out << "node,rho,rho_se,mom,mom_se\n";
        for (int i = 0; i < last.state.size(); ++i)
            out << i + 1 << ',' << format_number(last.state.rho[i]) << ','
                << format_number(last.rho_se[i]) << ',' << format_number(last.state.mom[i]) << ','
                << format_number(last.mom_se[i]) << "\n";
        out << "wrote " << path.string() << " and " << manifest.string() << "\n";
    }
    return ExitOk;
}

int cmd_r0(const Options &o, std::ostream &out) {
    const Scenario s = resolve_scenario(o);
    if (s.model.variant != ModelVariant::InfectionHealing)
        fail(ErrorCode::WrongVariant, "r0 needs the infection-healing model");
    const Trajectory traj = simulate(s);
    const R0Series series = r0_series(s, traj);
    std::ostringstream csv;
    csv << "t,r0_lower,r0_upper\n";
    for (std::size_t k = 0; k < series.times.size(); ++k)
        csv << format_number(series.times[k]) << ',' << format_number(series.bounds[k].lower) << ','
            << format_number(series.bounds[k].upper) << "\n";
    csv << "inf," << format_number(series.asymptotic.lower) << ','
        << format_number(series.asymptotic.upper) << "\n";
    RunOutput run(s, "r0");
    const auto path = run.add(run.stem() + ".csv", csv.str());
    run.note("asymptotic_lower", format_number(series.asymptotic.lower));
    run.note("asymptotic_upper", format_number(series.asymptotic.upper));
    const auto manifest = run.finish();
    if (!o.quiet) {
        out << "controlled=" << (series.controlled ? "true" : "false")
            << " asymptotic_lower=" << format_number(series.asymptotic.lower)
            << " asymptotic_upper=" << format_number(series.asymptotic.upper) << "\n";
        out << "wrote " << path.string() << " and " << manifest.string() << "\n";
    }
    return ExitOk;
}

int cmd_compare(const Options &o, std::ostream &out) {
    const Scenario s = resolve_scenario(o);
    const GlobalLocalComparison c = compare_global_local(s);
    const int n = s.size();
    std::ostringstream csv;
    csv << "t,u_global";
    for (int i = 1; i <= n; ++i) csv << ",utilde_" << i;
    csv << ",identity_residual,mean_global,mean_local\n";
    double worst = 0.0;
    for (std::size_t k = 0; k < c.times.size(); ++k) {
        csv << format_number(c.times[k]) << ',' << format_number(c.u_global[k]);
        for (int i = 0; i < n; ++i) csv << ',' << format_number(c.u_local[k][i]);
        csv << ',' << format_number(c.residual[k]) << ',' << format_number(c.mean_global[k]) << ','
            << format_number(c.mean_local[k]) << "\n";
        worst = std::max(worst, c.residual[k]);
    }
    RunOutput run(s, "global_local");
    const auto path = run.add(run.stem() + ".csv", csv.str());
    run.note("k_global", format_number(c.k));
    run.note("max_identity_residual", format_number(worst));
    const auto manifest = run.finish();
    if (!o.quiet) {
        out << "k_global=" << format_number(c.k) << " max_identity_residual=" << format_number(worst)
            << " final_mean_global=" << format_number(c.mean_global.back())
            << " final_mean_local=" << format_number(c.mean_local.back()) << "\n";
        out << "wrote " << path.string() << " and " << manifest.string() << "\n";
    }
    return ExitOk;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Kinetic agent dynamics on graphs with feedback controls", "netkin"};
    app.set_version_flag("--version", std::string("netkin ") + NETKIN_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--preset", o.preset, "Built-in scenario (see preset-list)");
    app.add_option("--scenario", o.scenario, "Scenario file");
    app.add_option("--dt", o.dt, "Time step");
    app.add_option("--t-end", o.t_end, "Final time");
    app.add_option("--out", o.out_dir, "Output directory");
    app.add_option("--seed", o.seed, "Monte Carlo seed");
    app.add_option("--delta", o.delta, "Fixed floor of the mobility control");
    app.add_flag("--delta-positive-min", o.delta_positive_min,
                 "Mobility floor = smallest positive entry of P");
    app.add_option("--k-sigma-strategy", o.k_sigma, "interval_lower, interval_upper or a value");
    app.add_option("--k-global", o.k_global, "Penalization of the global interaction control");
    app.add_flag("--quiet", o.quiet, "Suppress the summary on stdout");

    auto *validate_cmd = app.add_subcommand("validate", "Check a transition matrix");
    validate_cmd->add_option("--matrix", o.matrix, "Matrix file (CSV)");
    validate_cmd->add_flag("--row-stochastic", o.row_stochastic, "Rows, not columns, sum to one");
    auto *stationary_cmd = app.add_subcommand("stationary", "Stationary mass distribution");
    stationary_cmd->add_option("--matrix", o.matrix, "Matrix file (CSV)");
    stationary_cmd->add_flag("--row-stochastic", o.row_stochastic, "Rows, not columns, sum to one");
    auto *simulate_cmd = app.add_subcommand("simulate", "Integrate the moment equations");
    auto *mc_cmd = app.add_subcommand("simulate-mc", "Monte Carlo particle simulation");
    mc_cmd->add_option("--agents", o.agents, "Number of agents");
    mc_cmd->add_option("--replicas", o.replicas, "Independent replicas");
    mc_cmd->add_option("--workers", o.workers, "Concurrent replicas");
    mc_cmd->add_option("--noise", o.noise, "Uniform noise amplitude c");
    auto *r0_cmd = app.add_subcommand("r0", "Reproduction number bracket over time");
    auto *compare_cmd =
        app.add_subcommand("compare-global-local", "Global versus per-node interaction control");
    auto *list_cmd = app.add_subcommand("preset-list", "List built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {
            // --help / --version
            out << (e.get_name() == "CallForVersion" ? std::string(e.what()) + "\n"
                                                     : app.help());
            return ExitOk;
        }
        err << "error code=UsageError message=\"" << e.what() << "\"\n";
        return ExitValidation;
    }

    try {
        if (*validate_cmd) return cmd_validate(o, out);
        if (*stationary_cmd) return cmd_stationary(o, out);
        if (*simulate_cmd) return cmd_simulate(o, out, err);
        if (*mc_cmd) return cmd_simulate_mc(o, out);
        if (*r0_cmd) return cmd_r0(o, out);
        if (*compare_cmd) return cmd_compare(o, out);
        if (*list_cmd) {
            for (const auto &name : preset_names()) out << name << "\n";
            return ExitOk;
        }
    } catch (const Error &e) {
        err << "error code=" << to_string(e.code()) << " message=\"" << e.what() << "\"\n";
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        err << "error code=Internal message=\"" << e.what() << "\"\n";
        return ExitRuntime;
    }
    return ExitRuntime;
}

} // namespace netkin
