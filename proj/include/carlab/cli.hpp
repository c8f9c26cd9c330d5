#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "carlab/carleman.hpp"
#include "carlab/csv.hpp"
#include "carlab/forward.hpp"
#include "carlab/model.hpp"
#include "carlab/norms.hpp"
#include "carlab/reconstruct.hpp"
#include "carlab/stability.hpp"
#include "carlab/util.hpp"
#include "carlab/version.hpp"

namespace carlab {

/// Exit statuses of a run.
///   0  all checks passed
///   1  configuration error
///   2  numerical failure inside a solver
///   3  a verified invariant failed
enum ExitStatus : int {
    kStatusOk = 0,
    kStatusConfigError = 1,
    kStatusNumericalFailure = 2,
    kStatusInvariantViolation = 3,
};

struct RunConfig {
    std::string command;  // validate | forward | carleman | holder | lograte | reconstruct
    std::string preset = "heat1d";
    std::string bc = "dirichlet";  // dirichlet | robin
    double robin_p = std::numeric_limits<double>::quiet_NaN();  // required for robin

    int nx = 200;
    int nt = 2000;
    double T = 1.0;
    double length = 3.14159265358979323846;

    std::string scheme = "cn";  // cn | be
    int picard_max = 50;
    double picard_tol = 1e-12;

    double t0 = 0.5;
    double lambda = 4.0;
    double alpha = 0.5;
    double noise = 0.0;  // single-shot reconstruct noise level
    int noise_mode = 3;
    int samples = 256;

    std::vector<double> s_list = {2, 4, 8, 16, 32};
    std::vector<double> lambda_list = {2, 4, 8};
    std::vector<double> eps_list;    // per-command default when empty
    std::vector<double> delta_list = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

    std::string filter = "tikhonov";  // tikhonov | truncation
    std::string family = "single";    // single | multi | random
    std::uint64_t seed = 12345;
    std::string out_dir;   // flag > CARLAB_OUT_DIR > "out"
    std::string input;     // reconstruct: terminal-snapshot CSV
};

namespace cli_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in list: " + text);
        try {
            size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad number in list: '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty list value");
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("field '" + key + "': bad number '" + v + "'");
    }
}

inline long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("field '" + key + "': bad integer '" + v + "'");
    }
}

inline std::string join_list(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace cli_detail

/// Applies one `key = value` assignment of the config grammar.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    using cli_detail::parse_double;
    using cli_detail::parse_int;
    using cli_detail::parse_list;
    if (key == "command") cfg.command = value;
    else if (key == "preset") cfg.preset = value;
    else if (key == "bc") cfg.bc = value;
    else if (key == "robin_p") cfg.robin_p = parse_double(key, value);
    else if (key == "nx") cfg.nx = static_cast<int>(parse_int(key, value));
    else if (key == "nt") cfg.nt = static_cast<int>(parse_int(key, value));
    else if (key == "T") cfg.T = parse_double(key, value);
    else if (key == "length") cfg.length = parse_double(key, value);
    else if (key == "scheme") cfg.scheme = value;
    else if (key == "picard_max") cfg.picard_max = static_cast<int>(parse_int(key, value));
    else if (key == "picard_tol") cfg.picard_tol = parse_double(key, value);
    else if (key == "t0") cfg.t0 = parse_double(key, value);
    else if (key == "lambda") cfg.lambda = parse_double(key, value);
    else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "noise") cfg.noise = parse_double(key, value);
    else if (key == "noise_mode") cfg.noise_mode = static_cast<int>(parse_int(key, value));
    else if (key == "samples") cfg.samples = static_cast<int>(parse_int(key, value));
    else if (key == "s_list") cfg.s_list = parse_list(value);
    else if (key == "lambda_list") cfg.lambda_list = parse_list(value);
    else if (key == "eps_list") cfg.eps_list = parse_list(value);
    else if (key == "delta_list") cfg.delta_list = parse_list(value);
    else if (key == "filter") cfg.filter = value;
    else if (key == "family") cfg.family = value;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "input") cfg.input = value;
    else throw ConfigError("unknown config field '" + key + "'");
}

/// Reads the `key = value` config grammar: one assignment per line, '#'
/// comments, blank lines ignored, lists comma-separated.
inline void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw ConfigError("cannot open config file: " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = cli_detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        const std::string key = cli_detail::trim(t.substr(0, eq));
        const std::string value = cli_detail::trim(t.substr(eq + 1));
        try {
            apply_config_entry(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

/// Canonical config dump; feeding it back through load_config_file re-runs
/// the experiment exactly.
inline std::string config_text(const RunConfig& cfg) {
    using cli_detail::join_list;
    std::ostringstream out;
    out << "command = " << cfg.command << '\n';
    out << "preset = " << cfg.preset << '\n';
    out << "bc = " << cfg.bc << '\n';
    if (std::isfinite(cfg.robin_p)) out << "robin_p = " << format_double(cfg.robin_p) << '\n';
    out << "nx = " << cfg.nx << '\n';
    out << "nt = " << cfg.nt << '\n';
    out << "T = " << format_double(cfg.T) << '\n';
    out << "length = " << format_double(cfg.length) << '\n';
    out << "scheme = " << cfg.scheme << '\n';
    out << "picard_max = " << cfg.picard_max << '\n';
    out << "picard_tol = " << format_double(cfg.picard_tol) << '\n';
    out << "t0 = " << format_double(cfg.t0) << '\n';
    out << "lambda = " << format_double(cfg.lambda) << '\n';
    out << "alpha = " << format_double(cfg.alpha) << '\n';
    out << "noise = " << format_double(cfg.noise) << '\n';
    out << "noise_mode = " << cfg.noise_mode << '\n';
    out << "samples = " << cfg.samples << '\n';
    out << "s_list = " << join_list(cfg.s_list) << '\n';
    out << "lambda_list = " << join_list(cfg.lambda_list) << '\n';
    if (!cfg.eps_list.empty()) out << "eps_list = " << join_list(cfg.eps_list) << '\n';
    out << "delta_list = " << join_list(cfg.delta_list) << '\n';
    out << "filter = " << cfg.filter << '\n';
    out << "family = " << cfg.family << '\n';
    out << "seed = " << cfg.seed << '\n';
    if (!cfg.out_dir.empty()) out << "out_dir = " << cfg.out_dir << '\n';
    if (!cfg.input.empty()) out << "input = " << cfg.input << '\n';
    return out.str();
}

namespace cli_detail {

inline std::filesystem::path resolve_out_dir(const RunConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    if (const char* env = std::getenv("CARLAB_OUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return "out";
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "cn" || s == "crank-nicolson") return Scheme::CrankNicolson;
    if (s == "be" || s == "backward-euler") return Scheme::BackwardEuler;
    throw ConfigError("scheme must be 'cn' or 'be', got '" + s + "'");
}

inline BoundaryKind parse_bc(const std::string& s) {
    if (s == "dirichlet") return BoundaryKind::Dirichlet;
    if (s == "robin") return BoundaryKind::Robin;
    throw ConfigError("bc must be 'dirichlet' or 'robin', got '" + s + "'");
}

inline PerturbationFamily parse_family(const std::string& s) {
    if (s == "single") return PerturbationFamily::SingleMode;
    if (s == "multi") return PerturbationFamily::MultiMode;
    if (s == "random") return PerturbationFamily::RandomSmooth;
    throw ConfigError("family must be single, multi or random, got '" + s + "'");
}

inline FilterKind parse_filter(const std::string& s) {
    if (s == "tikhonov") return FilterKind::Tikhonov;
    if (s == "truncation") return FilterKind::Truncation;
    throw ConfigError("filter must be tikhonov or truncation, got '" + s + "'");
}

struct CheckList {
    std::ostringstream lines;
    bool all_passed = true;

    void add(const std::string& name, bool ok, const std::string& detail = "") {
        lines << (ok ? "PASS " : "FAIL ") << name;
        if (!detail.empty()) lines << " (" << detail << ')';
        lines << '\n';
        if (!ok) all_passed = false;
    }
};

}  // namespace cli_detail

/// Builds the problem a config names, applying boundary overrides.
inline Problem problem_from_config(const RunConfig& cfg) {
    Problem prob = preset(cfg.preset);
    prob.bc.kind = cli_detail::parse_bc(cfg.bc);
    if (prob.bc.kind == BoundaryKind::Robin) {
        if (!std::isfinite(cfg.robin_p)) {
            throw ConfigError("bc = robin requires robin_p");
        }
        const double p = cfg.robin_p;
        prob.coeffs.robin_p = [p](double, double, double) { return p; };
    }
    return prob;
}

/// Executes a run: solves/measures per the command, writes the manifest, the
/// result CSVs and a human-readable summary into the output directory, and
/// returns the exit status. Identical configs (seed included) write
/// byte-identical CSVs.
inline int run(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    std::filesystem::path dir;
    try {
        dir = cli_detail::resolve_out_dir(cfg);
        std::filesystem::create_directories(dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "carlab: %s\n", e.what());
        return kStatusConfigError;
    }

    cli_detail::CheckList checks;
    std::ostringstream report;
    int status = kStatusOk;

    try {
        const Grid grid(cfg.length, cfg.nx, cfg.T, cfg.nt);
        SolveOptions solve;
        solve.scheme = cli_detail::parse_scheme(cfg.scheme);
        solve.picard_max = cfg.picard_max;
        solve.picard_tol = cfg.picard_tol;

        if (cfg.command == "validate") {
            const Problem prob = problem_from_config(cfg);
            const ValidationReport rep =
                validate(prob.coeffs, cfg.samples, cfg.seed, cfg.length, cfg.T);
            report << "symmetry defect (relative): " << format_double(rep.max_symmetry_defect)
                   << "\nellipticity margin: " << format_double(rep.min_ellipticity_margin)
                   << "\nsamples: " << rep.samples << '\n';
            if (!rep.detail.empty()) report << "detail: " << rep.detail << '\n';
            checks.add("assumptions", rep.passed);
            if (!prob.f.is_zero()) {
                const double ratio = measure_lipschitz_ratio(prob, grid, 100, cfg.seed);
                report << "max Lipschitz ratio over 100 pairs: " << format_double(ratio) << '\n';
                checks.add("lipschitz_ratio <= 1 + 1e-9", ratio <= 1.0 + 1e-9,
                           format_double(ratio));
            }
        } else if (cfg.command == "forward") {
            const Problem prob = problem_from_config(cfg);
            const GridFunction u0 = default_initial_data(prob.coeffs, prob.bc.kind, grid);
            const Trajectory traj = solve_forward(prob.coeffs, prob.bc, prob.f, u0, grid, solve);
            write_text_file(dir / "trajectory.csv", trajectory_csv(traj));
            report << "terminal L2 norm: " << format_double(l2_norm(traj.slices[grid.nt], grid))
                   << "\nterminal H1 norm: " << format_double(h1_norm(traj.slices[grid.nt], grid))
                   << '\n';
            checks.add("trajectory_finite", traj.finite());
            checks.add("boundary_compliance", !boundary_violation(traj, prob.coeffs));
        } else if (cfg.command == "carleman") {
            const Problem prob = problem_from_config(cfg);
            const GridFunction u0 = default_initial_data(prob.coeffs, prob.bc.kind, grid);
            const Trajectory traj = solve_forward(prob.coeffs, prob.bc, prob.f, u0, grid, solve);
            const SweepResult sweep = sweep_constant(traj, prob.coeffs, cfg.s_list, cfg.lambda_list);
            write_text_file(dir / "carleman_sweep.csv", carleman_sweep_csv(sweep));
            report << "sup c_star: " << format_double(sweep.sup_c_star) << " at (s, lambda) = ("
                   << format_double(sweep.argmax_s) << ", " << format_double(sweep.argmax_lambda)
                   << ")\n";
            bool finite_ok = true;
            bool nonneg_ok = true;
            bool bc_warned = false;
            for (const auto& c : sweep.cells) {
                finite_ok = finite_ok && std::isfinite(c.lhs) && std::isfinite(c.rhs_interior) &&
                            std::isfinite(c.rhs_terminal) && std::isfinite(c.rhs_initial) &&
                            std::isfinite(c.c_star);
                nonneg_ok = nonneg_ok && c.lhs >= 0 && c.rhs_interior >= 0 &&
                            c.rhs_terminal >= 0 && c.rhs_initial >= 0 && c.c_star >= 0;
                bc_warned = bc_warned || c.bc_warning;
            }
            for (size_t i = 0; i < sweep.nonincreasing_in_s.size(); ++i) {
                report << "c_star nonincreasing in s at lambda=" << format_double(cfg.lambda_list[i])
                       << ": " << (sweep.nonincreasing_in_s[i] ? "yes" : "no") << '\n';
            }
            if (bc_warned) report << "warning: boundary-condition violation flagged\n";
            checks.add("budgets_finite", finite_ok);
            checks.add("budgets_nonnegative", nonneg_ok);
        } else if (cfg.command == "holder") {
            HolderConfig hc;
            hc.problem = problem_from_config(cfg);
            hc.grid = grid;
            hc.t0 = cfg.t0;
            hc.lambda = cfg.lambda;
            hc.eps_list = cfg.eps_list.empty()
                              ? std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4}
                              : cfg.eps_list;
            hc.family = cli_detail::parse_family(cfg.family);
            hc.seed = cfg.seed;
            hc.solve = solve;
            const HolderResult res = holder_experiment(hc);
            write_text_file(dir / "holder_records.csv", holder_records_csv(res));
            report << "theta(t0=" << format_double(res.effective_t0)
                   << ", T=" << format_double(cfg.T) << ", lambda=" << format_double(cfg.lambda)
                   << ") = " << format_double(res.theta_value)
                   << "\nfitted slope: " << format_double(res.slope)
                   << "\ncalibrated C: " << format_double(res.fitted_C)
                   << "\nmeasured sup ||w||_{H^beta}: " << format_double(res.measured_M) << '\n';
            if (!res.failure.empty()) {
                report << "failure: " << res.failure << '\n';
                status = kStatusNumericalFailure;
            }
            checks.add("slope >= theta - 0.02", res.slope_consistent,
                       "slope=" + format_double(res.slope));
            checks.add("no_holder_violation", res.no_violation);
        } else if (cfg.command == "lograte") {
            LogConfig lc;
            lc.problem = problem_from_config(cfg);
            lc.grid = grid;
            lc.alpha = cfg.alpha;
            lc.eps_list = cfg.eps_list.empty()
                              ? std::vector<double>{1e-2, 1e-3, 1e-4, 1e-5, 1e-6}
                              : cfg.eps_list;
            lc.family = cli_detail::parse_family(cfg.family);
            lc.seed = cfg.seed;
            lc.solve = solve;
            const LogResult res = log_experiment(lc);
            write_text_file(dir / "lograte_records.csv", log_records_csv(res, cfg.alpha));
            report << "M1 proxy: " << format_double(res.M1) << '\n';
            for (const auto& r : res.records) {
                if (!r.warning.empty()) report << "eps=" << format_double(r.epsilon) << ": "
                                               << r.warning << '\n';
            }
            if (!res.failure.empty()) {
                report << "failure: " << res.failure << '\n';
                status = kStatusNumericalFailure;
            }
            checks.add("product_bounded_nonincreasing", res.bounded_nonincreasing);
        } else if (cfg.command == "reconstruct") {
            const Problem prob = problem_from_config(cfg);
            ReconstructOptions opts;
            opts.filter = cli_detail::parse_filter(cfg.filter);
            opts.alpha = cfg.alpha;
            if (!cfg.input.empty()) {
                opts.noise_level = cfg.noise;
                const GridFunction terminal =
                    read_grid_function_csv(cfg.input, grid, prob.coeffs.components);
                const GridFunction estimate =
                    reconstruct(terminal, prob.coeffs, grid, prob.bc.kind, opts);
                write_text_file(dir / "reconstruction.csv", grid_function_csv(estimate, grid));
                report << "estimate L2 norm: " << format_double(l2_norm(estimate, grid)) << '\n';
                checks.add("estimate_finite", estimate.finite());
            } else {
                const TrendResult res = reconstruct_trend(prob.coeffs, grid, opts, cfg.delta_list,
                                                          cfg.noise_mode, solve);
                write_text_file(dir / "reconstruct_records.csv",
                                trend_records_csv(res, cfg.alpha));
                report << "trend slope (log err vs log log(1/delta)): "
                       << format_double(res.slope) << '\n';
                if (opts.filter == FilterKind::Tikhonov) {
                    checks.add("trend_slope <= -alpha + 0.1", res.slope <= -cfg.alpha + 0.1,
                               "slope=" + format_double(res.slope));
                } else {
                    // The truncation filter steps when the noise mode crosses
                    // the keep-set, so the graceful-trend gate belongs to the
                    // tikhonov study; its own invariant is mode monotonicity.
                    const EigenDecomposition spectrum = operator_spectrum(prob.coeffs, grid);
                    std::vector<double> deltas = cfg.delta_list;
                    std::sort(deltas.begin(), deltas.end());
                    bool mono = true;
                    int prev = grid.nx * prob.coeffs.components + 1;
                    for (double delta : deltas) {
                        const int kept = truncation_retained_count(spectrum, cfg.T, delta);
                        if (kept > prev) mono = false;
                        prev = kept;
                    }
                    checks.add("retained_modes_nonincreasing_in_delta", mono);
                }
            }
        } else {
            throw ConfigError("unknown command '" + cfg.command +
                              "' (expected validate, forward, carleman, holder, lograte, "
                              "reconstruct)");
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "carlab: config error: %s\n", e.what());
        return kStatusConfigError;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "carlab: config error: %s\n", e.what());
        return kStatusConfigError;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "carlab: numerical failure: %s\n", e.what());
        return kStatusNumericalFailure;
    }

    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start);
    std::ostringstream manifest;
    manifest << "# carlab " << kVersion << " run manifest; pass back via --config to re-run\n"
             << config_text(cfg) << "# elapsed_seconds = " << format_double(elapsed.count())
             << '\n';
    std::ostringstream summary;
    summary << "carlab " << kVersion << " :: " << cfg.command << " :: preset " << cfg.preset
            << "\n\n" << report.str() << '\n' << checks.lines.str();
    if (status == kStatusOk && !checks.all_passed) status = kStatusInvariantViolation;
    summary << "\nstatus: " << status << '\n';
    try {
        write_text_file(dir / "manifest.cfg", manifest.str());
        write_text_file(dir / "summary.txt", summary.str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "carlab: %s\n", e.what());
        return kStatusConfigError;
    }
    std::fputs(summary.str().c_str(), stdout);
    return status;
}

}  // namespace carlab
