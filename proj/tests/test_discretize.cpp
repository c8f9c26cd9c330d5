#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "carlab/grid.hpp"
#include "carlab/model.hpp"
#include "carlab/norms.hpp"
#include "carlab/operators.hpp"
#include "oracles.hpp"

using namespace carlab;

namespace {

Trajectory analytic_heat_trajectory(const Grid& g, double rate = 1.0, double mode = 1.0) {
    Trajectory traj;
    traj.grid = g;
    traj.bc = BoundaryKind::Dirichlet;
    for (int m = 0; m <= g.nt; ++m) {
        const double damp = std::exp(-rate * g.t(m));
        traj.slices.push_back(
            sample(g, 1, [&](double x, int) { return damp * std::sin(mode * x); }));
    }
    return traj;
}

}  // namespace

TEST_SUITE("discretize") {

TEST_CASE("grid invariants") {
    const Grid g(oracle::kPi, 3, 1.0, 2);
    CHECK(g.h() * (g.nx + 1) == doctest::Approx(oracle::kPi).epsilon(1e-15));
    CHECK(g.dt() * g.nt == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(Grid(oracle::kPi, 2, 1.0, 10), ConfigError);
    CHECK_THROWS_AS(Grid(oracle::kPi, 10, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(Grid(-1.0, 10, 1.0, 10), ConfigError);
}

TEST_CASE("heat1d interior stencil is (1, -2, 1)/h^2") {
    const Problem prob = preset("heat1d");
    const Grid g(oracle::kPi, 3, 1.0, 2);
    const DiscreteOperator op(prob.coeffs, 0.0, g, BoundaryKind::Dirichlet);
    const double ih2 = 1.0 / (g.h() * g.h());
    const auto& m = op.matrix();
    REQUIRE(m.size() == 3);
    CHECK(m.get(1, 0) == doctest::Approx(ih2));
    CHECK(m.get(1, 1) == doctest::Approx(-2.0 * ih2));
    CHECK(m.get(1, 2) == doctest::Approx(ih2));
    CHECK(m.get(0, 0) == doctest::Approx(-2.0 * ih2));
    CHECK(m.get(0, 1) == doctest::Approx(ih2));
}

TEST_CASE("Robin p = 0 annihilates constants (conormal null mode)") {
    Problem prob = preset("heat1d");
    prob.coeffs.robin_p = [](double, double, double) { return 0.0; };
    const Grid g(oracle::kPi, 20, 1.0, 2);
    const DiscreteOperator op(prob.coeffs, 0.0, g, BoundaryKind::Robin);
    const GridFunction ones = sample(g, 1, [](double, int) { return 1.0; });
    const GridFunction r = op.apply(ones);
    for (int j = 0; j < g.nodes(); ++j) CHECK(std::fabs(r.at(j, 0)) <= 1e-10);
}

TEST_CASE("coupled2 operator applied to (sin x, 0)") {
    // (A u)_l = sum_k a^{kl} u_k'' with a = [[2,1],[1,2]] gives
    // (-2 sin x, -sin x); the discrete defect is O(h^2).
    const Problem prob = preset("coupled2");
    const Grid g(oracle::kPi, 199, 1.0, 2);  // h = pi/200
    const DiscreteOperator op(prob.coeffs, 0.0, g, BoundaryKind::Dirichlet);
    const GridFunction u =
        sample(g, 2, [](double x, int c) { return c == 0 ? std::sin(x) : 0.0; });
    const GridFunction r = op.apply(u);
    double worst = 0.0;
    for (int j = 1; j <= g.nx; ++j) {
        worst = std::max(worst, std::fabs(r.at(j, 0) + 2.0 * std::sin(g.x(j))));
        worst = std::max(worst, std::fabs(r.at(j, 1) + std::sin(g.x(j))));
    }
    CHECK(worst <= 1e-4);  // expected ~ 3 h^2 / 12 = 6e-5
}

TEST_CASE("parabolic residual of the exact heat solution is O(dt^2 + h^2)") {
    const Problem prob = preset("heat1d");
    const Grid g(oracle::kPi, 200, 1.0, 2000);
    const Trajectory traj = analytic_heat_trajectory(g);
    const std::vector<GridFunction> res = apply_parabolic(traj, prob.coeffs, true);
    double worst = 0.0;
    for (const auto& r : res) {
        for (double v : r.data()) worst = std::max(worst, std::fabs(v));
    }
    CHECK(worst <= 1e-3);  // expected ~ h^2/12 = 2e-5
}

TEST_CASE("stationary null mode has zero residual under Robin p = 0") {
    Problem prob = preset("heat1d");
    prob.coeffs.robin_p = [](double, double, double) { return 0.0; };
    const Grid g(oracle::kPi, 30, 1.0, 4);
    Trajectory traj;
    traj.grid = g;
    traj.bc = BoundaryKind::Robin;
    for (int m = 0; m <= g.nt; ++m) {
        traj.slices.push_back(sample(g, 1, [](double, int) { return 2.5; }));
    }
    const std::vector<GridFunction> res = apply_parabolic(traj, prob.coeffs, true);
    for (const auto& r : res) {
        for (double v : r.data()) CHECK(std::fabs(v) <= 1e-11);
    }
}

TEST_CASE("P minus P0 equals the drift and reaction terms exactly") {
    CoefficientSet cs;
    cs.components = 1;
    cs.dim = 1;
    cs.sigma = 1.0;
    cs.time_independent = true;
    cs.diffusion = [](int, int, int, int, double, double, double) { return 1.0; };
    cs.drift = [](int, int, int, double, double, double) { return 0.3; };
    cs.reaction = [](int, int, double, double, double) { return -0.2; };

    const Grid g(oracle::kPi, 40, 1.0, 6);
    Rng rng(314);
    Trajectory traj;
    traj.grid = g;
    traj.bc = BoundaryKind::Dirichlet;
    for (int m = 0; m <= g.nt; ++m) traj.slices.push_back(random_dirichlet_field(g, 1, rng));

    const auto full = apply_parabolic(traj, cs, true);
    const auto principal = apply_parabolic(traj, cs, false);
    const double h = g.h();
    for (int m = 0; m <= g.nt; ++m) {
        for (int j = 1; j <= g.nx; ++j) {
            const double drift =
                0.3 * (traj.slices[m].at(j + 1, 0) - traj.slices[m].at(j - 1, 0)) / (2 * h);
            const double lower = drift - 0.2 * traj.slices[m].at(j, 0);
            const double got = principal[m].at(j, 0) - full[m].at(j, 0);
            CHECK(got == doctest::Approx(lower).epsilon(1e-12));
        }
    }
}

TEST_CASE("norm oracles on sin x") {
    const Grid g(oracle::kPi, 2000, 1.0, 2);
    const GridFunction u = sample(g, 1, [](double x, int) { return std::sin(x); });
    CHECK(l2_norm(u, g) == doctest::Approx(std::sqrt(oracle::kPi / 2)).epsilon(1e-6));
    CHECK(h1_norm_sq(u, g) == doctest::Approx(oracle::kPi).epsilon(1e-5));

    // Single sine mode: H^0.5 equals (1 + mu_1)^{1/4} times the L2 norm.
    const double mu1 = dirichlet_laplacian_eigenvalue(g, 1);
    const double hb = hbeta_norm(u, g, 0.5);
    CHECK(hb == doctest::Approx(std::pow(1.0 + mu1, 0.25) * l2_norm(u, g)).epsilon(1e-10));
    CHECK(hb > l2_norm(u, g));
    CHECK(hb < h1_norm(u, g));
}

TEST_CASE("spectral norm endpoints coincide with L2 and H1 on Dirichlet fields") {
    const Grid g(oracle::kPi, 50, 1.0, 2);
    Rng rng(555);
    for (int trial = 0; trial < 6; ++trial) {
        const GridFunction u = random_dirichlet_field(g, 1, rng);
        const double l2 = l2_norm(u, g);
        const double h1 = h1_norm(u, g);
        CHECK(hbeta_norm(u, g, 0.0) == doctest::Approx(l2).epsilon(1e-8));
        CHECK(hbeta_norm(u, g, 1.0) == doctest::Approx(h1).epsilon(1e-8));
    }
}

TEST_CASE("hbeta rejects beta outside [0, 1]") {
    const Grid g(oracle::kPi, 10, 1.0, 2);
    const GridFunction u(g.nodes(), 1);
    CHECK_THROWS_AS(hbeta_norm(u, g, -0.1), std::domain_error);
    CHECK_THROWS_AS(hbeta_norm(u, g, 1.1), std::domain_error);
}

TEST_CASE("trace estimate on the zero field and on cos x") {
    const Grid g(oracle::kPi, 400, 1.0, 2);
    const GridFunction zero(g.nodes(), 1);
    const TraceCheck z = trace_check(zero, g, 0.5);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    CHECK(z.holds);

    // cos x: boundary values are +1 and -1, so the lhs is exactly 2.
    const GridFunction u = sample(g, 1, [](double x, int) { return std::cos(x); });
    const TraceCheck c = trace_check(u, g, 0.5);
    CHECK(c.lhs == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c.holds);

    CHECK_THROWS_AS(trace_check(u, g, 0.0), std::domain_error);
    CHECK_THROWS_AS(trace_check(u, g, 1.0), std::domain_error);
    CHECK_THROWS_AS(trace_check(u, g, -0.2), std::domain_error);
}

TEST_CASE("trace estimate holds on seeded smooth fields") {
    const Grid g(oracle::kPi, 200, 1.0, 2);
    Rng rng(4242);
    int passes = 0;
    for (int i = 0; i < 100; ++i) {
        const GridFunction u = random_smooth_field(g, 1, rng);
        for (double eps : {0.1, 0.5, 0.9}) {
            if (!trace_check(u, g, eps).holds) goto next;
        }
        ++passes;
    next:;
    }
    CHECK(passes == 100);
}

TEST_CASE("frozen trace constant dominates a fresh calibration run") {
    const Grid g(oracle::kPi, 150, 1.0, 2);
    CHECK(calibrate_trace_constant(g, 100, 31415) < kTraceConstant);
}

TEST_CASE("summation by parts: the diffusion part is dissipative at rate sigma") {
    Rng rng(808);
    for (const char* name : {"heat1d", "coupled2"}) {
        const Problem prob = preset(name);
        const Grid g(oracle::kPi, 64, 1.0, 2);
        const DiscreteOperator op(prob.coeffs, 0.0, g, BoundaryKind::Dirichlet,
                                  OperatorParts::DiffusionOnly);
        for (int trial = 0; trial < 5; ++trial) {
            const GridFunction u = random_dirichlet_field(g, prob.coeffs.components, rng);
            const GridFunction au = op.apply(u);
            double ip = 0.0;
            for (int j = 1; j <= g.nx; ++j) {
                for (int c = 0; c < u.components(); ++c) ip += au.at(j, c) * u.at(j, c);
            }
            ip *= g.h();
            const double grad = gradient_seminorm_sq(u, g);
            CHECK(ip <= -prob.coeffs.sigma * grad + 1e-10 * (1.0 + grad));
        }
    }
}

TEST_CASE("Robin assembly requires the boundary coefficient") {
    const Problem prob = preset("heat1d");  // robin_p unset
    const Grid g(oracle::kPi, 10, 1.0, 2);
    CHECK_THROWS_AS(DiscreteOperator(prob.coeffs, 0.0, g, BoundaryKind::Robin), ConfigError);
}

}  // TEST_SUITE
