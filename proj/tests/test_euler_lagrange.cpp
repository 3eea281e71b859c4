#include <gtest/gtest.h>

#include <cmath>

#include "twistlab/energy.hpp"
#include "twistlab/euler_lagrange.hpp"

using namespace twistlab;

namespace {
const double e = std::exp(1.0);
}

TEST(ElResidual, TwistDefectDecaysLinearStalls) {
    std::vector<double> twist, linear;
    for (std::size_t n : {65, 129, 257}) {
        AnnulusGrid g(1.0, e, n, n - 1);
        twist.push_back(el_residual(make_twist_2d(g, 1).map).path_defect);
        linear.push_back(el_residual(map_from_profile(g, linear_profile(1.0, e, 1, n))).path_defect);
    }
    EXPECT_GE(std::log2(twist[1] / twist[2]), 1.8);
    EXPECT_GE(linear[2] / linear[0], 0.5);
}

TEST(ElResidual, IdentityIsAnExactSolution) {
    auto r = el_residual(identity_map(AnnulusGrid(1.0, 2.0, 33, 32)));
    EXPECT_LT(r.path_defect, 1e-8);
    EXPECT_LT(r.max_curl, 1e-8);
}

TEST(ElResidual, PressurePathsAgreeWithinDefect) {
    auto r = el_residual(make_twist_2d(AnnulusGrid(1.0, e, 129, 128), 1).map);
    EXPECT_LE(r.interior_path_gap, r.path_defect * r.interior_area);
}

TEST(ElResidual, NeedsSevenRadialNodes) {
    EXPECT_THROW(el_residual(identity_map(AnnulusGrid(1.0, 2.0, 5, 8))), InvalidArgument);
}

TEST(LoopOde, PlanarLogProfile) {
    auto s = solve_loop_ode(1.0, 2.0, 2, 1, 1025);
    // 2 pi ln(1.5) / ln 2
    EXPECT_NEAR(s.profile.g[512], 3.67542778978219677800, 1e-10);
    for (std::size_t i = 0; i < s.profile.size(); ++i)
        EXPECT_NEAR(s.profile.g[i], loop_angle_closed_form(1.0, 2.0, 2, 1, s.profile.r(i)), 1e-10);
}

TEST(LoopOde, FourDimensionalPowerProfile) {
    auto s = solve_loop_ode(1.0, 2.0, 4, 1, 1025);
    EXPECT_NEAR(s.profile.g[512], 4.65421133865154553846, 1e-10);
    for (std::size_t i = 0; i < s.profile.size(); ++i) {
        EXPECT_NEAR(s.profile.g[i], loop_angle_closed_form(1.0, 2.0, 4, 1, s.profile.r(i)), 1e-10);
        EXPECT_NEAR(std::pow(s.profile.r(i), 3) * s.gdot[i], s.c, 1e-12 * std::abs(s.c));
    }
}

TEST(LoopOde, OddDimensionHasNoNontrivialSolution) {
    EXPECT_THROW(solve_loop_ode(1.0, 2.0, 3, 1, 65), NoSolutionError);
    auto s = solve_loop_ode(1.0, 2.0, 5, 0, 65);
    for (double v : s.profile.g) EXPECT_EQ(v, 0.0);
}

TEST(LoopOde, EnergyMinimalAgainstPerturbations) {
    auto best = solve_loop_ode(1.0, 2.0, 2, 1, 257).profile;
    const double E0 = loop_energy(best);
    for (double eta : {0.1, -0.01}) {
        auto q = best;
        for (std::size_t i = 0; i < q.size(); ++i) q.g[i] += eta * std::sin(pi * (q.r(i) - 1.0));
        EXPECT_GT(loop_energy(q), E0);
    }
}

TEST(TwistAlgebra, ClosedFormsHold) {
    for (int n : {2, 4, 6}) {
        auto r = check_twist_el_algebra(solve_loop_ode(1.0, 2.0, n, 1, 257).profile);
        EXPECT_LT(r.max_residual, 1e-10) << "n=" << n;
    }
}

TEST(TwistAlgebra, RotatedFrame) {
    const double c = std::cos(0.3), s = std::sin(0.3);
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(4, 4);
    R(0, 0) = c;
    R(0, 2) = -s;
    R(2, 0) = s;
    R(2, 2) = c;
    auto r = check_twist_el_algebra(solve_loop_ode(1.0, 2.0, 4, 2, 257).profile, R);
    EXPECT_LT(r.max_residual, 1e-10);
}

TEST(GradientField, EqualRatesOnly) {
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(4, 4);
    auto eq = gradient_field_condition(4, {1.0, 1.0}, R);
    auto ne = gradient_field_condition(4, {1.0, 2.0}, R);
    EXPECT_TRUE(eq.condition);
    EXPECT_TRUE(eq.spot_agrees);
    EXPECT_FALSE(ne.condition);
    EXPECT_TRUE(ne.spot_agrees);
    EXPECT_THROW(gradient_field_condition(Eigen::MatrixXd::Identity(4, 4)), ValidationError);
}
