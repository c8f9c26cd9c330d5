#include <doctest.h>

#include <cmath>

#include "carlab/carleman.hpp"
#include "carlab/forward.hpp"
#include "carlab/model.hpp"
#include "oracles.hpp"

using namespace carlab;

namespace {

Trajectory analytic_heat_trajectory(const Grid& g) {
    Trajectory traj;
    traj.grid = g;
    traj.bc = BoundaryKind::Dirichlet;
    for (int m = 0; m <= g.nt; ++m) {
        const double damp = std::exp(-g.t(m));
        traj.slices.push_back(sample(g, 1, [&](double x, int) { return damp * std::sin(x); }));
    }
    return traj;
}

Trajectory zero_trajectory(const Grid& g) {
    Trajectory traj;
    traj.grid = g;
    traj.bc = BoundaryKind::Dirichlet;
    for (int m = 0; m <= g.nt; ++m) traj.slices.emplace_back(g.nodes(), 1);
    return traj;
}

}  // namespace

TEST_SUITE("carleman") {

TEST_CASE("weight evaluation") {
    SUBCASE("t = 0 gives phi = 1, mu = 0 for any lambda") {
        for (double lambda : {0.5, 1.0, 7.0}) {
            const WeightEval w = weight(0.0, CarlemanWeight(3.0, lambda));
            CHECK(w.phi == 1.0);
            CHECK(w.mu == 0.0);
            CHECK(w.factor == doctest::Approx(std::exp(6.0)).epsilon(1e-14));
            CHECK_FALSE(w.scaled);
        }
    }
    SUBCASE("lambda = 1 at t = ln 2 doubles phi") {
        const WeightEval w = weight(std::log(2.0), CarlemanWeight(1.0, 1.0));
        CHECK(w.phi == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(w.mu == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("lambda = 5, s = 10, t = 1 engages scaled mode") {
        const WeightEval w = weight(1.0, CarlemanWeight(10.0, 5.0));
        CHECK(w.phi == doctest::Approx(std::exp(5.0)).epsilon(1e-14));  // ~148.413
        CHECK(w.log_factor == doctest::Approx(20.0 * std::exp(5.0)).epsilon(1e-14));
        CHECK(w.scaled);
        CHECK(std::isinf(w.factor));
    }
    SUBCASE("parameters must be positive") {
        CHECK_THROWS_AS(CarlemanWeight(0.0, 1.0), ConfigError);
        CHECK_THROWS_AS(CarlemanWeight(1.0, -2.0), ConfigError);
    }
}

TEST_CASE("lhs vanishes on the zero trajectory") {
    const Grid g(oracle::kPi, 20, 1.0, 10);
    const LhsBreakdown lhs = lhs_car(zero_trajectory(g), CarlemanWeight(2.0, 2.0));
    CHECK(lhs.dt_part == 0.0);
    CHECK(lhs.grad_part == 0.0);
    CHECK(lhs.zero_part == 0.0);
    CHECK(lhs.total == 0.0);
}

TEST_CASE("lhs matches an adaptive quadrature of the closed-form integrand") {
    // z = e^{-t} sin x at (s, lambda) = (1, 1): the integrand reduces to
    // (pi/2) e^{-2t} (e^{-t} + 1 + e^t) e^{2 e^t}.
    const Grid g(oracle::kPi, 200, 1.0, 500);
    const CarlemanWeight w(1.0, 1.0);
    const LhsBreakdown lhs = lhs_car(analytic_heat_trajectory(g), w);
    const double discrete = lhs.total * std::exp(lhs.log_scale);
    const double expect = oracle::integrate(
        [](double t) {
            return 0.5 * oracle::kPi * std::exp(-2.0 * t) *
                   (std::exp(-t) + 1.0 + std::exp(t)) * std::exp(2.0 * std::exp(t));
        },
        0.0, 1.0);
    CHECK(discrete == doctest::Approx(expect).epsilon(1e-4));
}

TEST_CASE("lhs decomposes exactly into its three parts and scales quadratically") {
    const Grid g(oracle::kPi, 60, 1.0, 40);
    const Trajectory z = analytic_heat_trajectory(g);
    const CarlemanWeight w(2.0, 3.0);
    const LhsBreakdown lhs = lhs_car(z, w);
    CHECK(lhs.total == lhs.dt_part + lhs.grad_part + lhs.zero_part);

    Trajectory doubled = z;
    for (auto& s : doubled.slices) s *= 2.0;
    const LhsBreakdown lhs2 = lhs_car(doubled, w);
    CHECK(lhs2.total == 4.0 * lhs.total);
    CHECK(lhs2.dt_part == 4.0 * lhs.dt_part);
    CHECK(lhs2.grad_part == 4.0 * lhs.grad_part);
    CHECK(lhs2.zero_part == 4.0 * lhs.zero_part);
}

TEST_CASE("budget homogeneity holds for the rhs as well") {
    const Problem prob = preset("heat1d");
    const Grid g(oracle::kPi, 40, 1.0, 30);
    const GridFunction u0 = sample(g, 1, [](double x, int) { return std::sin(x); });
    const Trajectory z = solve_forward(prob.coeffs, prob.bc, prob.f, u0, g);
    Trajectory z2 = z;
    for (auto& s : z2.slices) s *= 3.0;

    const CarlemanWeight w(2.0, 2.0);
    const CarlemanBudget a = evaluate_budget(z, prob.coeffs, w);
    const CarlemanBudget b = evaluate_budget(z2, prob.coeffs, w);
    CHECK(b.lhs == doctest::Approx(9.0 * a.lhs).epsilon(1e-13));
    CHECK(b.rhs_interior == doctest::Approx(9.0 * a.rhs_interior).epsilon(1e-12));
    CHECK(b.rhs_terminal == doctest::Approx(9.0 * a.rhs_terminal).epsilon(1e-13));
    CHECK(b.rhs_initial == doctest::Approx(9.0 * a.rhs_initial).epsilon(1e-13));
    CHECK(b.c_star == doctest::Approx(a.c_star).epsilon(1e-12));
}

TEST_CASE("terminal and initial slice terms match their closed forms") {
    const Grid g(oracle::kPi, 200, 1.0, 200);
    const Problem prob = preset("heat1d");
    const CarlemanWeight w(1.0, 1.0);
    const CarlemanBudget b = rhs_car(analytic_heat_trajectory(g), prob.coeffs, w);
    // terminal: (s l phi(T) + 1) * (pi/2) e^{-2} at mantissa scale
    const double phiT = std::exp(1.0);
    const double expect_T = (phiT + 1.0) * 0.5 * oracle::kPi * std::exp(-2.0);
    CHECK(b.rhs_terminal == doctest::Approx(expect_T).epsilon(1e-4));
    // initial: (s l + 1) * (pi/2) * e^{2s(1 - phi(T))}
    const double expect_0 = 2.0 * 0.5 * oracle::kPi * std::exp(2.0 * (1.0 - phiT));
    CHECK(b.rhs_initial == doctest::Approx(expect_0).epsilon(1e-4));
    CHECK(b.lhs == 0.0);  // rhs_car leaves the lhs to the caller
}

TEST_CASE("solver trajectories make the interior residual term negligible") {
    const Problem prob = preset("heat1d");
    const Grid g(oracle::kPi, 100, 1.0, 200);
    const GridFunction u0 = sample(g, 1, [](double x, int) { return std::sin(x); });
    const Trajectory z = solve_forward(prob.coeffs, prob.bc, prob.f, u0, g);
    const CarlemanBudget b = evaluate_budget(z, prob.coeffs, CarlemanWeight(2.0, 2.0));
    CHECK(b.rhs_interior <= 1e-9 * b.rhs_terminal);
    CHECK_FALSE(b.bc_warning);
}

TEST_CASE("zero trajectory gets c_star = 0 by convention") {
    const Problem prob = preset("heat1d");
    const Grid g(oracle::kPi, 20, 1.0, 10);
    const CarlemanBudget b = evaluate_budget(zero_trajectory(g), prob.coeffs,
                                             CarlemanWeight(2.0, 2.0));
    CHECK(b.c_star == 0.0);
}

TEST_CASE("sweep over (s, lambda) stays finite and flags nothing on solver data") {
    const Problem prob = preset("heat1d");
    const Grid g(oracle::kPi, 100, 1.0, 200);
    const GridFunction u0 = sample(g, 1, [](double x, int) { return std::sin(x); });
    const Trajectory z = solve_forward(prob.coeffs, prob.bc, prob.f, u0, g);
    const SweepResult sweep = sweep_constant(z, prob.coeffs, {2, 4, 8, 16}, {2, 4});
    REQUIRE(sweep.cells.size() == 8);
    REQUIRE(sweep.nonincreasing_in_s.size() == 2);
    for (const auto& c : sweep.cells) {
        CHECK(std::isfinite(c.c_star));
        CHECK(c.c_star >= 0.0);
        CHECK(c.c_star <= sweep.sup_c_star);
        CHECK_FALSE(c.bc_warning);
    }
    CHECK(sweep.sup_c_star > 0.0);
    CHECK(std::isfinite(sweep.sup_c_star));
    CHECK_THROWS_AS(sweep_constant(z, prob.coeffs, {}, {2}), ConfigError);
}

TEST_CASE("boundary violations are detected but do not stop the verifier") {
    const Grid g(oracle::kPi, 60, 1.0, 40);
    const Problem prob = preset("heat1d");

    SUBCASE("Dirichlet trajectory with nonzero boundary values") {
        Trajectory bad;
        bad.grid = g;
        bad.bc = BoundaryKind::Dirichlet;
        for (int m = 0; m <= g.nt; ++m) {
            bad.slices.push_back(sample(g, 1, [](double x, int) { return std::cos(x); }));
        }
        const CarlemanBudget b = evaluate_budget(bad, prob.coeffs, CarlemanWeight(2.0, 2.0));
        CHECK(b.bc_warning);
        CHECK(std::isfinite(b.c_star));
    }
    SUBCASE("Robin-tagged trajectory violating the conormal condition") {
        Problem robin = preset("heat1d");
        robin.coeffs.robin_p = [](double, double, double) { return 0.5; };
        Trajectory bad;
        bad.grid = g;
        bad.bc = BoundaryKind::Robin;
        for (int m = 0; m <= g.nt; ++m) {
            bad.slices.push_back(sample(g, 1, [](double x, int) { return std::sin(x); }));
        }
        const CarlemanBudget b = evaluate_budget(bad, robin.coeffs, CarlemanWeight(2.0, 2.0));
        CHECK(b.bc_warning);
    }
}

TEST_CASE("extreme weights stay finite through the scaled evaluation") {
    const Problem prob = preset("heat1d");
    const Grid g(oracle::kPi, 60, 1.0, 100);
    const GridFunction u0 = sample(g, 1, [](double x, int) { return std::sin(x); });
    const Trajectory z = solve_forward(prob.coeffs, prob.bc, prob.f, u0, g);
    const CarlemanBudget b = evaluate_budget(z, prob.coeffs, CarlemanWeight(32.0, 8.0));
    CHECK(b.weight_scaled);
    CHECK(std::isfinite(b.lhs));
    CHECK(std::isfinite(b.rhs_terminal));
    CHECK(std::isfinite(b.c_star));
    CHECK(b.log_scale == doctest::Approx(64.0 * std::exp(8.0)).epsilon(1e-14));
}

TEST_CASE("scaled budgets match a naive unscaled evaluation at small weights") {
    // Independent route: plain loops, unscaled e^{2 s phi}, fresh stencil
    // code. Only viable while the exponents fit in doubles, which is the
    // point - it pins down the mantissa/exponent bookkeeping.
    const Problem prob = preset("heat1d");
    const Grid g(oracle::kPi, 40, 1.0, 60);
    Rng rng(2025);
    Trajectory z;
    z.grid = g;
    z.bc = BoundaryKind::Dirichlet;
    {
        const GridFunction shape = random_dirichlet_field(g, 1, rng);
        for (int m = 0; m <= g.nt; ++m) {
            GridFunction s = shape;
            s *= std::cos(1.7 * g.t(m)) + 1.5;
            z.slices.push_back(std::move(s));
        }
    }
    const double s = 0.5;
    const double lambda = 1.0;
    const double h = g.h();
    const double dt = g.dt();

    auto slice_l2 = [&](const GridFunction& u) {
        double acc = 0.5 * u.at(0, 0) * u.at(0, 0) + 0.5 * u.at(g.nx + 1, 0) * u.at(g.nx + 1, 0);
        for (int j = 1; j <= g.nx; ++j) acc += u.at(j, 0) * u.at(j, 0);
        return h * acc;
    };
    auto slice_grad = [&](const GridFunction& u) {
        double acc = 0.0;
        for (int j = 0; j <= g.nx; ++j) {
            const double d = (u.at(j + 1, 0) - u.at(j, 0)) / h;
            acc += d * d;
        }
        return h * acc;
    };
    auto slice_dt = [&](int m) {
        GridFunction d(g.nodes(), 1);
        for (int j = 0; j < g.nodes(); ++j) {
            double v;
            if (m == 0) {
                v = (-3 * z.slices[0].at(j, 0) + 4 * z.slices[1].at(j, 0) -
                     z.slices[2].at(j, 0)) / (2 * dt);
            } else if (m == g.nt) {
                v = (3 * z.slices[m].at(j, 0) - 4 * z.slices[m - 1].at(j, 0) +
                     z.slices[m - 2].at(j, 0)) / (2 * dt);
            } else {
                v = (z.slices[m + 1].at(j, 0) - z.slices[m - 1].at(j, 0)) / (2 * dt);
            }
            d.at(j, 0) = v;
        }
        return d;
    };

    double naive_lhs = 0.0;
    for (int m = 0; m <= g.nt; ++m) {
        const double tw = (m == 0 || m == g.nt) ? 0.5 * dt : dt;
        const double phi = std::exp(lambda * g.t(m));
        const double wgt = std::exp(2.0 * s * phi);
        naive_lhs += tw * wgt * (slice_l2(slice_dt(m)) / (s * phi) +
                                 lambda * slice_grad(z.slices[m]) +
                                 s * lambda * lambda * phi * slice_l2(z.slices[m]));
    }
    const double phi_T = std::exp(lambda * 1.0);
    const double naive_terminal =
        (s * lambda * phi_T * slice_l2(z.slices[g.nt]) + slice_grad(z.slices[g.nt])) *
        std::exp(2.0 * s * phi_T);
    const double naive_initial =
        (s * lambda * slice_l2(z.slices[0]) + slice_grad(z.slices[0])) * std::exp(2.0 * s);

    const CarlemanWeight w(s, lambda);
    const CarlemanBudget b = evaluate_budget(z, prob.coeffs, w);
    const double scale = std::exp(b.log_scale);
    CHECK(b.lhs * scale == doctest::Approx(naive_lhs).epsilon(1e-12));
    CHECK(b.rhs_terminal * scale == doctest::Approx(naive_terminal).epsilon(1e-12));
    CHECK(b.rhs_initial * scale == doctest::Approx(naive_initial).epsilon(1e-12));
}

TEST_CASE("J1 identity check") {
    const CarlemanWeight w(1.0, 1.0);
    SUBCASE("zero trajectory has zero defect") {
        const Grid g(oracle::kPi, 20, 1.0, 10);
        const J1Check c = j1_identity_check(zero_trajectory(g), w);
        CHECK(c.defect == 0.0);
    }
    SUBCASE("defect is pure time-discretization error and shrinks at order two") {
        const Grid g1(oracle::kPi, 100, 1.0, 2000);
        const Grid g2(oracle::kPi, 100, 1.0, 4000);
        const J1Check c1 = j1_identity_check(analytic_heat_trajectory(g1), w);
        const J1Check c2 = j1_identity_check(analytic_heat_trajectory(g2), w);
        CHECK(c1.defect <= 1e-3);
        CHECK(c1.defect / c2.defect >= 3.5);
    }
}

}  // TEST_SUITE
