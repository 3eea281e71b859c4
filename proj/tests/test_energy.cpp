#include <gtest/gtest.h>

#include <cmath>

#include "twistlab/energy.hpp"

using namespace twistlab;

namespace {
const double e = std::exp(1.0);
}

TEST(ClosedForm, FrozenValues) {
    // 2 pi ln(b/a) + 4 pi^3 k^2 / ln(b/a), evaluated at 30 digits.
    EXPECT_NEAR(energy_F_twist_closed_form(1.0, e, 0), 6.28318530717958647693, 1e-12);
    EXPECT_NEAR(energy_F_twist_closed_form(1.0, e, 1), 130.308292028378867179, 1e-11);
    EXPECT_NEAR(energy_F_twist_closed_form(1.0, e, 2), 502.383612191976709285, 1e-10);
    EXPECT_NEAR(energy_F_twist_closed_form(1.0, e, 3), 1122.50914579797311279, 1e-10);
    EXPECT_NEAR(energy_F_twist_closed_form(1.0, 2.0, 1), 183.285578593005850850, 1e-10);
}

TEST(EnergyF, TwistsMatchClosedForm) {
    AnnulusGrid g(1.0, e, 257, 256);
    for (int k : {0, 1, -1, 2, -2, 3}) {
        auto rep = energy_F(make_twist_2d(g, k).map);
        const double cf = energy_F_twist_closed_form(1.0, e, k);
        EXPECT_LT(std::abs(rep.value - cf) / cf, 1e-6) << "k=" << k;
        EXPECT_NEAR(rep.terms_sum(), rep.value, 1e-9 * rep.value);
        ASSERT_TRUE(rep.decomposition_residual.has_value());
        EXPECT_LT(*rep.decomposition_residual, 1e-8);
        ASSERT_TRUE(rep.cross_check.has_value());
        EXPECT_LT(std::abs(*rep.cross_check - cf) / cf, 5e-3);
    }
}

TEST(EnergyF, ConvergesAtOrderTwoOrBetter) {
    std::vector<double> err;
    for (std::size_t n : {65, 129, 257})
        err.push_back(std::abs(energy_F(make_twist_2d(AnnulusGrid(1.0, e, n, n - 1), 2).map).value -
                               energy_F_twist_closed_form(1.0, e, 2)));
    EXPECT_GE(std::log2(err[0] / err[1]), 2.0);
    EXPECT_GE(std::log2(err[1] / err[2]), 2.0);
}

TEST(EnergyF, IdentityHasOnlyTheLogTerm) {
    auto rep = energy_F(identity_map(AnnulusGrid(1.0, 3.0, 65, 64)));
    EXPECT_NEAR(rep.value, two_pi * std::log(3.0), 1e-5);
    EXPECT_NEAR(rep.term("radial_cross"), 0.0, 1e-12);
    EXPECT_THROW(rep.term("nope"), InvalidArgument);
}

TEST(EnergyF, LowerBoundHoldsOnFlowMaps) {
    AnnulusGrid g(1.0, 2.0, 65, 64);
    StreamSpec s;
    s.steps = 50;
    auto u = compose(make_flow_map(g, s).map, make_twist_2d(g, 1).map);
    EXPECT_GE(energy_F(u).value, energy_F_lower_bound(u) * (1.0 - 1e-9));
}

TEST(SphereMeasure, KnownValues) {
    EXPECT_NEAR(sphere_measure(2), two_pi, 1e-14);
    EXPECT_NEAR(sphere_measure(3), 4.0 * pi, 1e-13);
    EXPECT_NEAR(sphere_measure(4), 2.0 * pi * pi, 1e-13);
}

TEST(LoopEnergy, PlanarTwist) {
    // (omega_2 / 2) int (2 pi / r)^2 r dr on [1, e] = 4 pi^3
    EXPECT_NEAR(loop_energy(twist_profile_2d(1.0, e, 1, 1025)), 124.025106721199280702, 1e-6);
}

TEST(EnergyW, TwistProfileEqualsClosedForm) {
    for (int k : {0, 1, 2}) {
        EXPECT_NEAR(energy_W_twist(twist_profile_2d(1.0, e, k, 2049)), energy_F_twist_closed_form(1.0, e, k),
                    1e-6 * energy_F_twist_closed_form(1.0, e, k));
    }
}

TEST(EnergyW, DualityWithInverseTwist) {
    AnnulusGrid g(1.0, e, 257, 256);
    for (int k = -3; k <= 3; ++k) {
        const double W = energy_W(make_twist_2d(g, k).map).value;
        const double F = energy_F(make_twist_2d(g, -k).map).value;
        EXPECT_NEAR(W, F, 1e-6) << "k=" << k;
    }
}

TEST(InnerDistortion, TwistOneClosedForm) {
    auto K = inner_distortion(make_twist_2d(AnnulusGrid(1.0, e, 257, 256), 1).map);
    EXPECT_EQ(K.clamped, 0u);
    for (double v : K.K.values()) EXPECT_NEAR(v, 20.7392088021787172377, 1e-6);
}

TEST(InnerDistortion, AtLeastOneOnFlowMaps) {
    AnnulusGrid g(1.0, 2.0, 65, 64);
    StreamSpec s;
    s.steps = 50;
    auto K = inner_distortion(make_flow_map(g, s).map);
    EXPECT_GE(K.K.min(), 1.0 - 1e-12);
}

TEST(EnergyH, UnitWeightReducesToF) {
    AnnulusGrid g(1.0, 2.0, 65, 64);
    StreamSpec s;
    s.steps = 50;
    auto u = compose(make_flow_map(g, s).map, make_twist_2d(g, -1).map);
    EXPECT_NEAR(energy_H(u, WeightSpec::constant_one()).value, energy_F(u).value, 1e-9 * energy_F(u).value);
}

TEST(EnergyH, WarnsWhenHypothesisFails) {
    AnnulusGrid g(1.0, 2.0, 33, 32);
    auto rep = energy_H(identity_map(g), WeightSpec::linear());
    EXPECT_FALSE(WeightSpec::linear().hypothesis_holds(1.0, 2.0));
    EXPECT_FALSE(rep.warnings.empty());
    EXPECT_TRUE(WeightSpec::constant_one().hypothesis_holds(1.0, 2.0));
}
