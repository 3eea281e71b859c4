#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "twistlab/symmetrise.hpp"
#include "twistlab/topology.hpp"

using namespace twistlab;

namespace {
struct Case {
    double eps;
    int m;
    int k;
};

// Coarse flow-composed family shared by the property tests.
const std::vector<PlanarMap>& family() {
    static const std::vector<PlanarMap> maps = [] {
        AnnulusGrid g(1.0, 2.0, 65, 64);
        std::vector<PlanarMap> out;
        for (Case c : {Case{0.05, 1, -2}, Case{0.1, 2, 1}, Case{0.1, 3, 0}, Case{0.05, 2, 2}}) {
            StreamSpec s;
            s.epsilon = c.eps;
            s.m = c.m;
            s.steps = 50;
            out.push_back(compose(make_flow_map(g, s).map, make_twist_2d(g, c.k).map));
        }
        return out;
    }();
    return maps;
}
} // namespace

TEST(Symmetrise, TwistIsFixedPoint) {
    AnnulusGrid g(1.0, std::exp(1.0), 65, 64);
    for (int k : {-2, 0, 3}) {
        auto t = make_twist_2d(g, k);
        auto s = symmetrise(t.map);
        EXPECT_EQ(s.profile.k, k);
        for (std::size_t i = 0; i < s.profile.size(); ++i) EXPECT_NEAR(s.profile.g[i], t.profile.g[i], 1e-12);
    }
}

TEST(Symmetrise, PreservesDegreeAndLowersEnergy) {
    EnergyOptions opt;
    opt.refinement_estimate = false;
    for (const auto& u : family()) {
        auto s = symmetrise(u);
        EXPECT_EQ(degree(s.map).k, degree(u).k);
        EXPECT_LE(energy_F(s.map, opt).value, energy_F(u, opt).value * (1.0 + 1e-4));
    }
}

TEST(Symmetrise, IsIdempotent) {
    for (const auto& u : family()) {
        auto once = symmetrise(u);
        auto twice = symmetrise(once.map);
        for (std::size_t i = 0; i < once.profile.size(); ++i) EXPECT_NEAR(twice.profile.g[i], once.profile.g[i], 1e-10);
    }
}

TEST(Symmetrise, EnergyAboveClassMinimum) {
    for (const auto& u : family()) {
        const int k = degree(u).k;
        EXPECT_GE(energy_F(u).value, energy_F_twist_closed_form(1.0, 2.0, k) * (1.0 - 1e-3));
    }
}

TEST(Identities, AngularTurnIsTwoPi) {
    for (const auto& u : family()) EXPECT_LT(check_angular_identity(u).max_interior, 1e-10);
}

TEST(Identities, DistributionInvariance) {
    for (const auto& u : family())
        for (double p : {2.0, -1.0, -2.0}) EXPECT_LT(check_distribution_invariance(u, RadialFunction::power(p)).residual, 1e-3);
}

TEST(Identities, RingIdentity) {
    for (const auto& u : family()) {
        const MapFields f = map_fields(u);
        for (double p : {2.0, -1.0, -2.0})
            for (std::size_t i : {16, 32, 48}) EXPECT_LT(check_ring_identity(f, RadialFunction::power(p), i).residual, 1e-3);
    }
}

TEST(Identities, RingBoundWithUnitWeight) {
    for (const auto& u : family()) {
        const MapFields f = map_fields(u);
        for (std::size_t i = 1; i < 64; ++i)
            EXPECT_GE(check_jensen_ring_bound(f, WeightSpec::constant_one(), i).margin, -1e-3);
    }
}

TEST(Identities, RingBoundIsExactOnTwists) {
    auto u = make_twist_2d(AnnulusGrid(1.0, 2.0, 65, 64), 2).map;
    for (const auto& w : {WeightSpec::constant_one(), WeightSpec::linear()})
        EXPECT_NEAR(check_jensen_ring_bound(u, w, 20).margin, 0.0, 1e-9);
}

TEST(Coarea, ChainOnTheFamily) {
    for (const auto& u : family()) {
        auto d = coarea_diagnostics(u, 16);
        for (std::size_t l = 0; l < d.levels.size(); ++l) EXPECT_GE(d.level_lengths[l], two_pi * d.levels[l] * 0.99);
        EXPECT_NEAR(d.inverse_square, d.log_term, 1e-3 * d.log_term);
        EXPECT_TRUE(d.holder_link);
        EXPECT_TRUE(d.monotone_distribution);
    }
}

TEST(Coarea, IdentityDistributionFunction) {
    AnnulusGrid g(1.0, 2.0, 65, 64);
    auto u = identity_map(g);
    ScalarField modulus = ScalarField::sample(g, [](double r, double) { return r; });
    EXPECT_NEAR(distribution_function(modulus, 1.5), pi * (4.0 - 2.25), 2.0 * two_pi * 2.0 * g.h_r());
    (void)u;
}
