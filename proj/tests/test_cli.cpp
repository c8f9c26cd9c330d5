#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "carlab/cli.hpp"
#include "carlab/csv.hpp"
#include "oracles.hpp"

using namespace carlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("carlab_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.is_open());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_holder(const fs::path& out) {
    RunConfig cfg;
    cfg.command = "holder";
    cfg.preset = "heat1d";
    cfg.nx = 60;
    cfg.nt = 100;
    cfg.eps_list = {1e-1, 1e-2, 1e-3};
    cfg.out_dir = out.string();
    return cfg;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate command emits manifest, summary and status 0") {
    const fs::path out = fresh_dir("validate");
    RunConfig cfg;
    cfg.command = "validate";
    cfg.preset = "coupled2";
    cfg.nx = 20;
    cfg.nt = 10;
    cfg.out_dir = out.string();
    CHECK(run(cfg) == kStatusOk);
    CHECK(fs::exists(out / "manifest.cfg"));
    CHECK(fs::exists(out / "summary.txt"));
    CHECK(slurp(out / "summary.txt").find("PASS assumptions") != std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical CSVs") {
    const fs::path out1 = fresh_dir("det1");
    const fs::path out2 = fresh_dir("det2");
    RunConfig a = small_holder(out1);
    RunConfig b = small_holder(out2);
    a.family = "random";
    b.family = "random";
    REQUIRE(run(a) == kStatusOk);
    REQUIRE(run(b) == kStatusOk);
    CHECK(slurp(out1 / "holder_records.csv") == slurp(out2 / "holder_records.csv"));
}

TEST_CASE("the manifest re-runs the experiment exactly") {
    const fs::path out1 = fresh_dir("manifest1");
    REQUIRE(run(small_holder(out1)) == kStatusOk);

    RunConfig replay;
    load_config_file(replay, out1 / "manifest.cfg");
    const fs::path out2 = fresh_dir("manifest2");
    replay.out_dir = out2.string();
    REQUIRE(run(replay) == kStatusOk);
    CHECK(slurp(out1 / "holder_records.csv") == slurp(out2 / "holder_records.csv"));
}

TEST_CASE("flags-over-file precedence is a plain field overwrite") {
    RunConfig cfg;
    const fs::path dir = fresh_dir("cfgfile");
    const fs::path file = dir / "exp.cfg";
    write_text_file(file, "command = lograte\nnx = 40\nalpha = 0.7\n# comment\n\n");
    load_config_file(cfg, file);
    CHECK(cfg.command == "lograte");
    CHECK(cfg.nx == 40);
    CHECK(cfg.alpha == 0.7);
    apply_config_entry(cfg, "alpha", "0.5");  // what a CLI flag does afterwards
    CHECK(cfg.alpha == 0.5);
}

TEST_CASE("config grammar errors carry the offending line") {
    RunConfig cfg;
    const fs::path dir = fresh_dir("cfgbad");
    const fs::path file = dir / "bad.cfg";
    write_text_file(file, "nx = 40\nnot a config line\n");
    CHECK_THROWS_WITH_AS(load_config_file(cfg, file), doctest::Contains(":2"), ConfigError);
    write_text_file(file, "unknown_key = 3\n");
    CHECK_THROWS_AS(load_config_file(cfg, file), ConfigError);
    write_text_file(file, "nx = forty\n");
    CHECK_THROWS_AS(load_config_file(cfg, file), ConfigError);
    CHECK_THROWS_AS(load_config_file(cfg, dir / "missing.cfg"), ConfigError);
}

TEST_CASE("config errors exit with status 1") {
    const fs::path out = fresh_dir("status1");
    RunConfig cfg;
    cfg.command = "no-such-command";
    cfg.out_dir = out.string();
    CHECK(run(cfg) == kStatusConfigError);
    cfg.command = "validate";
    cfg.preset = "no-such-preset";
    CHECK(run(cfg) == kStatusConfigError);
    cfg.preset = "heat1d";
    cfg.bc = "robin";  // robin_p left unset
    cfg.command = "forward";
    cfg.nx = 20;
    cfg.nt = 10;
    CHECK(run(cfg) == kStatusConfigError);
}

TEST_CASE("numerical failures exit with status 2") {
    const fs::path out = fresh_dir("status2");
    RunConfig cfg;
    cfg.command = "holder";
    cfg.preset = "paper_example";
    cfg.nx = 30;
    cfg.nt = 20;
    cfg.picard_max = 1;
    cfg.picard_tol = 1e-16;
    cfg.eps_list = {1e-1, 1e-2};
    cfg.out_dir = out.string();
    CHECK(run(cfg) == kStatusNumericalFailure);
    CHECK(slurp(out / "summary.txt").find("failure") != std::string::npos);
}

TEST_CASE("invariant violations exit with status 3") {
    // Truncation with delta = 0 amplifies the top grid modes of a full-band
    // snapshot beyond double range; the finiteness check must catch it.
    const fs::path out = fresh_dir("status3");
    const Grid g(oracle::kPi, 60, 1.0, 10);
    Rng rng(13);
    const GridFunction noisy = random_smooth_field(g, 1, rng);
    const fs::path input = out / "terminal.csv";
    write_text_file(input, grid_function_csv(noisy, g));

    RunConfig cfg;
    cfg.command = "reconstruct";
    cfg.preset = "heat1d";
    cfg.nx = g.nx;
    cfg.nt = g.nt;
    cfg.filter = "truncation";
    cfg.noise = 0.0;
    cfg.input = input.string();
    cfg.out_dir = out.string();
    CHECK(run(cfg) == kStatusInvariantViolation);
    CHECK(slurp(out / "summary.txt").find("FAIL") != std::string::npos);
}

TEST_CASE("truncation sweeps gate mode monotonicity, not the tikhonov trend") {
    const fs::path out = fresh_dir("trunc");
    RunConfig cfg;
    cfg.command = "reconstruct";
    cfg.preset = "heat1d";
    cfg.nx = 80;
    cfg.nt = 160;
    cfg.filter = "truncation";
    cfg.out_dir = out.string();
    CHECK(run(cfg) == kStatusOk);
    const std::string summary = slurp(out / "summary.txt");
    CHECK(summary.find("retained_modes_nonincreasing_in_delta") != std::string::npos);
    CHECK(summary.find("trend slope") != std::string::npos);
}

TEST_CASE("grid functions round-trip through CSV bit-exactly") {
    const Grid g(oracle::kPi, 25, 1.0, 4);
    Rng rng(77);
    const GridFunction u = random_smooth_field(g, 1, rng);
    const fs::path dir = fresh_dir("roundtrip");
    write_text_file(dir / "u.csv", grid_function_csv(u, g));
    const GridFunction v = read_grid_function_csv(dir / "u.csv", g, 1);
    for (int j = 0; j < g.nodes(); ++j) CHECK(u.at(j, 0) == v.at(j, 0));

    const Grid other(oracle::kPi, 30, 1.0, 4);
    CHECK_THROWS_AS(read_grid_function_csv(dir / "u.csv", other, 1), ConfigError);
}

TEST_CASE("environment variable supplies the default output directory") {
    const fs::path out = fresh_dir("envdir");
    setenv("CARLAB_OUT_DIR", out.c_str(), 1);
    RunConfig cfg;
    cfg.command = "validate";
    cfg.preset = "heat1d";
    cfg.nx = 20;
    cfg.nt = 10;
    CHECK(run(cfg) == kStatusOk);
    unsetenv("CARLAB_OUT_DIR");
    CHECK(fs::exists(out / "summary.txt"));
}

TEST_CASE("CSV headers pin the external column contracts") {
    const Grid g(oracle::kPi, 8, 1.0, 2);
    const GridFunction u(g.nodes(), 1);
    CHECK(grid_function_csv(u, g).rfind("x,component,value\n", 0) == 0);

    Trajectory traj;
    traj.grid = g;
    for (int m = 0; m <= g.nt; ++m) traj.slices.emplace_back(g.nodes(), 1);
    const std::string tcsv = trajectory_csv(traj);
    CHECK(tcsv.rfind("t,x,component,value\n", 0) == 0);
    // header + (nt+1) * nodes * components rows
    CHECK(std::count(tcsv.begin(), tcsv.end(), '\n') == 1 + (g.nt + 1) * g.nodes());

    SweepResult sweep;
    sweep.cells.push_back(CarlemanBudget{});
    CHECK(carleman_sweep_csv(sweep).rfind(
              "s,lambda,lhs_mantissa,lhs_exponent,rhs_interior,rhs_terminal,rhs_initial,"
              "c_star,bc_warning\n",
              0) == 0);

    CHECK(holder_records_csv(HolderResult{}).rfind("epsilon,E_T,E_t0,theta,ratio,residual\n",
                                                   0) == 0);
    CHECK(log_records_csv(LogResult{}, 0.5).rfind("epsilon,E_0,D,alpha,product,severity,excluded\n",
                                                  0) == 0);
    CHECK(trend_records_csv(TrendResult{}, 0.5).rfind("delta,l2_error,alpha\n", 0) == 0);
}

TEST_CASE("config text dump parses back to the same configuration") {
    RunConfig cfg = small_holder("somewhere");
    cfg.robin_p = 0.5;
    cfg.bc = "robin";
    const std::string text = config_text(cfg);

    RunConfig parsed;
    const fs::path dir = fresh_dir("dump");
    write_text_file(dir / "dump.cfg", text);
    load_config_file(parsed, dir / "dump.cfg");
    CHECK(parsed.command == cfg.command);
    CHECK(parsed.nx == cfg.nx);
    CHECK(parsed.eps_list == cfg.eps_list);
    CHECK(parsed.robin_p == cfg.robin_p);
    CHECK(parsed.seed == cfg.seed);
}

}  // TEST_SUITE
