#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "netkin/cli.hpp"
#include "support.hpp"

using namespace netkin;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "netkin");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

bool contains(const std::string &text, const std::string &what) {
    return text.find(what) != std::string::npos;
}

} // namespace

TEST_CASE("exit code mapping") {
    CHECK(exit_code_for(ErrorCode::NonStochastic) == 1);
    CHECK(exit_code_for(ErrorCode::ParseError) == 1);
    CHECK(exit_code_for(ErrorCode::UnknownPreset) == 1);
    CHECK(exit_code_for(ErrorCode::NegativeStateBlowup) == 2);
    CHECK(exit_code_for(ErrorCode::StepTooLarge) == 2);
    CHECK(exit_code_for(ErrorCode::IoError) == 2);
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code == 1);
    const Run r = cli({"simulate"});
    CHECK(r.code == 1);
    CHECK(contains(r.err, "error code=ValidationError"));
    const Run unknown = cli({"--preset", "nope", "simulate"});
    CHECK(unknown.code == 1);
    CHECK(contains(unknown.err, "code=UnknownPreset"));
    CHECK(cli({"--version", "preset-list"}).code == 0);
}

TEST_CASE("validate and stationary") {
    const std::string lombardy = std::string(NETKIN_DATA_DIR) + "/lombardy_matrix.csv";
    SUBCASE("Lombardy file") {
        const Run r = cli({"validate", "--matrix", lombardy});
        CHECK(r.code == 0);
        CHECK(contains(r.out, "status=ok n=12 irreducible=true"));
    }
    SUBCASE("preset") {
        const Run r = cli({"--preset", "test1_uncontrolled", "stationary"});
        CHECK(r.code == 0);
        CHECK(contains(r.out, "rho_inf_1=0.24359"));
    }
    SUBCASE("bad matrix") {
        TempDir dir("netkin_cli_validate");
        {
            std::ofstream f(dir.path / "bad.csv");
            f << "0.5, 0.5\n0.4, 0.5\n";
        }
        const Run r = cli({"validate", "--matrix", (dir.path / "bad.csv").string()});
        CHECK(r.code == 1);
        CHECK(contains(r.err, "code=NonStochastic"));
        // the same numbers are row-stochastic once the first row is fixed
        {
            std::ofstream f(dir.path / "rows.csv");
            f << "0.5, 0.5\n0.4, 0.6\n";
        }
        CHECK(cli({"validate", "--row-stochastic", "--matrix", (dir.path / "rows.csv").string()}).code == 0);
    }
    SUBCASE("missing file is a runtime error") {
        CHECK(cli({"validate", "--matrix", "/nonexistent.csv"}).code == 2);
    }
}

TEST_CASE("simulate writes the trajectory and a manifest") {
    TempDir dir("netkin_cli_simulate");
    const Run r = cli({"--preset", "test2_full_control", "--t-end", "2", "--out", dir.path.string(), "simulate"});
    REQUIRE(r.code == 0);
    const std::string csv = slurp(dir.path / "test2_full_control.csv");
    CHECK(csv.rfind("t,rho_1,", 0) == 0);
    CHECK(contains(csv, ",total_mass,total_mom\n"));
    const std::string manifest = slurp(dir.path / "test2_full_control.manifest");
    CHECK(contains(manifest, "output = test2_full_control.csv"));
    CHECK(contains(manifest, "t_end = 2\n"));
    CHECK_FALSE(fs::exists(dir.path / "test2_full_control.manifest.tmp"));
    // the manifest embeds a scenario that reproduces the run
    std::istringstream in(manifest.substr(manifest.find("[scenario]")));
    CHECK(parse_scenario(in).integration.t_end == 2.0);
}

TEST_CASE("a failed run leaves no manifest") {
    TempDir dir("netkin_cli_fail");
    const Run r = cli({"--preset", "test1_uncontrolled", "--dt", "100", "--t-end", "300", "--out",
                       dir.path.string(), "simulate"});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(dir.path / "test1_uncontrolled.manifest"));
}

TEST_CASE("Monte Carlo output is reproducible") {
    TempDir a("netkin_cli_mc_a"), b("netkin_cli_mc_b");
    const std::vector<std::string> common{"--preset", "test2_uncontrolled", "--t-end", "1", "--seed", "9"};
    auto run = [&](const fs::path &dir, const std::string &workers) {
        auto args = common;
        args.insert(args.end(), {"--out", dir.string(), "simulate-mc", "--agents", "500", "--replicas", "3",
                                 "--workers", workers});
        return cli(args);
    };
    REQUIRE(run(a.path, "1").code == 0);
    REQUIRE(run(b.path, "3").code == 0);
    const std::string csv = slurp(a.path / "test2_uncontrolled_mc.csv");
    CHECK(contains(csv, "rho_se_1"));
    CHECK(csv == slurp(b.path / "test2_uncontrolled_mc.csv"));
    CHECK(fs::exists(a.path / "test2_uncontrolled_mc.manifest"));
}

TEST_CASE("r0 and global versus local") {
    TempDir dir("netkin_cli_r0");
    SUBCASE("r0 series ends with the asymptotic bracket") {
        const Run r = cli({"--preset", "test2_uncontrolled", "--t-end", "5", "--out", dir.path.string(), "r0"});
        REQUIRE(r.code == 0);
        const std::string csv = slurp(dir.path / "test2_uncontrolled_r0.csv");
        CHECK(csv.rfind("t,r0_lower,r0_upper\n", 0) == 0);
        CHECK(contains(csv, "\ninf,"));
        CHECK(contains(r.out, "controlled=false"));
        CHECK(cli({"--preset", "test1_uncontrolled", "r0"}).code == 1);
    }
    SUBCASE("identity residual stays at rounding level") {
        const Run r = cli({"--preset", "test1_full", "--t-end", "5", "--out", dir.path.string(),
                           "compare-global-local"});
        REQUIRE(r.code == 0);
        const Scenario s = preset("test1_full");
        Scenario shorter = s;
        shorter.integration.t_end = 5.0;
        const GlobalLocalComparison c = compare_global_local(shorter);
        for (double res : c.residual) CHECK(res < 1e-13);
        CHECK(c.k == doctest::Approx(default_k_global(s.initial_state(), s.model, s.policy.q)));
        CHECK(fs::exists(dir.path / "test1_full_global_local.csv"));
    }
}

TEST_CASE("preset list") {
    const Run r = cli({"preset-list"});
    CHECK(r.code == 0);
    for (const auto &name : preset_names()) CHECK(contains(r.out, name + "\n"));
}
