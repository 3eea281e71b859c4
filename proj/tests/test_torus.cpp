#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "twistlab/torus.hpp"

using namespace twistlab;

TEST(TorusSpec, Validation) {
    EXPECT_THROW((TorusSpec{1.0, 0.0, 1}.validate()), ValidationError);
    EXPECT_THROW((TorusSpec{4.0, 1.0, 1}.validate()), ValidationError);
    EXPECT_NO_THROW((TorusSpec{4.0, 0.5, 1}.validate()));
}

TEST(TorusEnergy, ConstantTermMatchesIndependentQuadrature) {
    // (3/2) int |x|^-2 over the solid and thickened tori, rho = 4 (mpmath 2-D quadrature).
    EXPECT_NEAR(torus_constant_term({4.0, 0.0, 1}, 257, 256), 7.40220330081701896413, 1e-9);
    EXPECT_NEAR(torus_constant_term({4.0, 0.5, 1}, 257, 256), 5.55165247561276422309, 1e-9);
}

TEST(TorusEnergy, ConstantAngleHasNoDirichletTerm) {
    auto f = ToroidalField::sample({4.0, 0.0, 1}, 65, 64, [](double, double) { return two_pi; });
    auto rep = torus_twist_energy(f);
    EXPECT_EQ(rep.term("dirichlet"), 0.0);
    EXPECT_NEAR(rep.value, torus_constant_term({4.0, 0.0, 1}, 65, 64), 1e-14);
}

TEST(TorusSolve, SolidTorusOnlyTrivialSolution) {
    TorusSolveOptions opt;
    opt.initial = InitialGuess::zero;
    for (auto [rho, k] : {std::pair{4.0, 1}, std::pair{2.0, -2}}) {
        auto s = solve_torus_bvp({rho, 0.0, k}, 65, 64, opt);
        double sup = 0.0;
        for (double v : s.field.g) sup = std::max(sup, std::abs(v - two_pi * k));
        EXPECT_LT(sup, 1e-6);
        EXPECT_GT(s.iterations, 0u);
        auto u = torus_uniqueness_check(s.field);
        EXPECT_LT(std::abs(u.outer_flux), 1e-8);
        EXPECT_LT(u.dirichlet, 1e-8);
    }
}

TEST(TorusSolve, ThickenedZeroData) {
    auto s = solve_torus_bvp({4.0, 0.5, 0}, 65, 64);
    for (double v : s.field.g) EXPECT_LE(std::abs(v), 1e-8);
    auto u = torus_uniqueness_check(s.field);
    EXPECT_LE(u.dirichlet, 1e-10);
    EXPECT_LE(std::abs(u.outer_flux), 1e-10);
}

TEST(TorusSolve, ThickenedIdentitiesAndMaxPrinciple) {
    auto s = solve_torus_bvp({4.0, 0.5, 1}, 129, 128);
    EXPECT_LE(s.residual, 1e-10);
    auto u = torus_uniqueness_check(s.field);
    EXPECT_LE(u.flux_balance, 1e-6);
    EXPECT_LE(u.energy_flux_gap, 1e-6);
    EXPECT_LE(u.max_principle_excess, 0.0);
    auto rep = torus_twist_energy(s.field);
    EXPECT_GT(rep.value, torus_constant_term(s.field.spec, s.field.n_s, s.field.n_psi));
    ASSERT_TRUE(rep.cross_check.has_value());
    EXPECT_NEAR(*rep.cross_check, rep.value, 1e-2 * rep.value);
}

TEST(TorusSolve, LargeRhoApproachesPlanarLog) {
    auto s = solve_torus_bvp({1000.0, 0.5, 1}, 129, 128);
    for (std::size_t i = 0; i < s.field.n_s; ++i)
        for (std::size_t j = 0; j < s.field.n_psi; ++j)
            EXPECT_NEAR(s.field.at(i, j), two_pi * std::log(s.field.s(i) / 0.5) / std::log(2.0), 1e-2);
    const double planar = pi * std::pow(two_pi, 3) / std::log(2.0);
    EXPECT_NEAR(torus_twist_energy(s.field).term("dirichlet") / 1000.0, planar, 1e-2 * planar);
}

TEST(TorusSolve, SecondOrderRefinement) {
    auto c = solve_torus_bvp({4.0, 0.5, 1}, 33, 32).field;
    auto m = solve_torus_bvp({4.0, 0.5, 1}, 65, 64).field;
    auto f = solve_torus_bvp({4.0, 0.5, 1}, 129, 128).field;
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < c.n_s; ++i)
        for (std::size_t j = 0; j < c.n_psi; ++j) e1 = std::max(e1, std::abs(c.at(i, j) - m.at(2 * i, 2 * j)));
    for (std::size_t i = 0; i < m.n_s; ++i)
        for (std::size_t j = 0; j < m.n_psi; ++j) e2 = std::max(e2, std::abs(m.at(i, j) - f.at(2 * i, 2 * j)));
    EXPECT_GE(std::log2(e1 / e2), 1.8);
}

TEST(TorusSolve, NonConvergenceReportsHistory) {
    TorusSolveOptions opt;
    opt.max_iterations = 2;
    try {
        solve_torus_bvp({4.0, 0.5, 1}, 65, 64, opt);
        FAIL();
    } catch (const SolverError& err) {
        EXPECT_NE(std::string(err.what()).find("residuals"), std::string::npos);
    }
}

TEST(CurlCondition, ConstantAndLinearAngles) {
    auto c = ToroidalField::sample({4.0, 0.5, 1}, 65, 64, [](double, double) { return 1.0; });
    EXPECT_LT(curl_condition_residual(c).max_residual, 1e-20);
    auto l = ToroidalField::sample({4.0, 0.5, 1}, 65, 64, [](double mu, double x3) { return 0.7 * (4.0 + mu) + 0.3 * x3; });
    EXPECT_LT(curl_condition_residual(l).max_residual, 1e-8);
}

TEST(Potential, LinearAngleClosedForm) {
    auto l = ToroidalField::sample({4.0, 0.5, 1}, 65, 64, [](double mu, double x3) { return 0.7 * (4.0 + mu) + 0.3 * x3; });
    auto p = torus_potential_f(l);
    for (std::size_t i = 0; i < l.n_s; ++i) {
        for (std::size_t j = 0; j < l.n_psi; ++j) {
            const double xi = l.xi(i, j), z = l.x3(i, j);
            EXPECT_NEAR(p.f[l.index(i, j)], -0.29 * xi * xi / (xi * xi + z * z), 1e-8);
        }
    }
    auto c = ToroidalField::sample({4.0, 0.5, 1}, 65, 64, [](double, double) { return 2.0; });
    for (double v : torus_potential_f(c).f) EXPECT_LT(std::abs(v), 1e-20);
}

TEST(TorusMap, UnitDeterminant) {
    auto s = solve_torus_bvp({4.0, 0.5, 2}, 65, 64);
    auto d = torus_det_check(s.field);
    EXPECT_LE(d.skew_pairing, 1e-12);
    EXPECT_LE(d.det, 1e-12);
    EXPECT_LE(d.grad_norm, 1e-12);
}

TEST(TorusIo, RoundTrip) {
    auto s = solve_torus_bvp({4.0, 0.5, 1}, 17, 16);
    std::stringstream ss;
    write_toroidal_csv(ss, s.field);
    auto back = read_toroidal_csv(ss);
    EXPECT_EQ(back.spec.rho, 4.0);
    EXPECT_EQ(back.g, s.field.g);
}
