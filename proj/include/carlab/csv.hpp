#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "carlab/carleman.hpp"
#include "carlab/grid.hpp"
#include "carlab/reconstruct.hpp"
#include "carlab/stability.hpp"
#include "carlab/util.hpp"

namespace carlab {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);  // binary: no platform newline games
    if (!out.is_open()) throw ConfigError("cannot write file: " + path.string());
    out << text;
    if (!out.good()) throw ConfigError("write failed: " + path.string());
}

/// columns: x, component, value
inline std::string grid_function_csv(const GridFunction& u, const Grid& g) {
    std::ostringstream out;
    out << "x,component,value\n";
    for (int j = 0; j < g.nodes(); ++j) {
        for (int c = 0; c < u.components(); ++c) {
            out << format_double(g.x(j)) << ',' << c << ',' << format_double(u.at(j, c)) << '\n';
        }
    }
    return out.str();
}

/// columns: t, x, component, value
inline std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream out;
    out << "t,x,component,value\n";
    for (int m = 0; m <= traj.grid.nt; ++m) {
        const auto& s = traj.slices[m];
        for (int j = 0; j < traj.grid.nodes(); ++j) {
            for (int c = 0; c < s.components(); ++c) {
                out << format_double(traj.grid.t(m)) << ',' << format_double(traj.grid.x(j)) << ','
                    << c << ',' << format_double(s.at(j, c)) << '\n';
            }
        }
    }
    return out.str();
}

/// Reads a grid-function CSV produced by grid_function_csv back onto the
/// given grid; node positions must match the grid within 1e-9.
inline GridFunction read_grid_function_csv(const std::filesystem::path& path, const Grid& g,
                                           int components) {
    std::ifstream in(path);
    if (!in.is_open()) throw ConfigError("cannot read file: " + path.string());
    GridFunction u(g.nodes(), components);
    std::string line;
    std::getline(in, line);  // header
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string xs, cscol, vs;
        if (!std::getline(ls, xs, ',') || !std::getline(ls, cscol, ',') || !std::getline(ls, vs)) {
            throw ConfigError("malformed grid-function CSV row: " + line);
        }
        const double x = std::stod(xs);
        const int c = std::stoi(cscol);
        const double v = std::stod(vs);
        const int j = static_cast<int>(std::lround(x / g.h()));
        if (j < 0 || j >= g.nodes() || std::fabs(g.x(j) - x) > 1e-9 ||
            c < 0 || c >= components) {
            throw ConfigError("grid-function CSV does not match the requested grid: " + line);
        }
        u.at(j, c) = v;
        ++rows;
    }
    if (rows != g.nodes() * components) {
        throw ConfigError("grid-function CSV incomplete: " + path.string());
    }
    return u;
}

/// columns per the sweep contract: s, lambda, lhs_mantissa, lhs_exponent,
/// rhs_interior, rhs_terminal, rhs_initial, c_star, bc_warning
inline std::string carleman_sweep_csv(const SweepResult& sweep) {
    std::ostringstream out;
    out << "s,lambda,lhs_mantissa,lhs_exponent,rhs_interior,rhs_terminal,rhs_initial,c_star,"
           "bc_warning\n";
    for (const auto& c : sweep.cells) {
        out << format_double(c.s) << ',' << format_double(c.lambda) << ','
            << format_double(c.lhs) << ',' << format_double(c.log_scale) << ','
            << format_double(c.rhs_interior) << ',' << format_double(c.rhs_terminal) << ','
            << format_double(c.rhs_initial) << ',' << format_double(c.c_star) << ','
            << (c.bc_warning ? 1 : 0) << '\n';
    }
    out << "# summary,sup_c_star=" << format_double(sweep.sup_c_star)
        << ",argmax_s=" << format_double(sweep.argmax_s)
        << ",argmax_lambda=" << format_double(sweep.argmax_lambda) << '\n';
    return out.str();
}

inline std::string holder_records_csv(const HolderResult& res) {
    std::ostringstream out;
    out << "epsilon,E_T,E_t0,theta,ratio,residual\n";
    for (const auto& r : res.records) {
        out << format_double(r.epsilon) << ',' << format_double(r.E_T) << ','
            << format_double(r.E_t0) << ',' << format_double(res.theta_value) << ','
            << format_double(r.ratio) << ',' << format_double(r.residual) << '\n';
    }
    out << "# summary,slope=" << format_double(res.slope)
        << ",theta=" << format_double(res.theta_value)
        << ",C=" << format_double(res.fitted_C)
        << ",slope_consistent=" << (res.slope_consistent ? 1 : 0)
        << ",no_violation=" << (res.no_violation ? 1 : 0) << '\n';
    return out.str();
}

inline std::string log_records_csv(const LogResult& res, double alpha) {
    std::ostringstream out;
    out << "epsilon,E_0,D,alpha,product,severity,excluded\n";
    for (const auto& r : res.records) {
        out << format_double(r.epsilon) << ',' << format_double(r.E_0) << ','
            << format_double(r.D) << ',' << format_double(alpha) << ','
            << format_double(r.product) << ',' << format_double(r.severity) << ','
            << (r.excluded ? 1 : 0) << '\n';
    }
    out << "# summary,M1=" << format_double(res.M1)
        << ",bounded_nonincreasing=" << (res.bounded_nonincreasing ? 1 : 0) << '\n';
    return out.str();
}

inline std::string trend_records_csv(const TrendResult& res, double alpha) {
    std::ostringstream out;
    out << "delta,l2_error,alpha\n";
    for (const auto& r : res.records) {
        out << format_double(r.delta) << ',' << format_double(r.error) << ','
            << format_double(alpha) << '\n';
    }
    out << "# summary,slope=" << format_double(res.slope) << '\n';
    return out.str();
}

}  // namespace carlab
