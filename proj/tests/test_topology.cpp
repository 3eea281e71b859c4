#include <gtest/gtest.h>

#include <cmath>

#include "twistlab/topology.hpp"

using namespace twistlab;

TEST(Degree, TwistsForAllSmallK) {
    AnnulusGrid g(1.0, std::exp(1.0), 257, 256);
    for (int k = -8; k <= 8; ++k) {
        auto d = degree(make_twist_2d(g, k).map);
        EXPECT_EQ(d.k, k);
        EXPECT_LT(d.confidence, 1e-6);
        EXPECT_NEAR(d.quadrature, k, 1e-12 + 2e-4 * std::abs(k * k * k));
    }
}

TEST(Degree, IdentityIsZero) { EXPECT_EQ(degree(identity_map(AnnulusGrid(1.0, 2.0, 17, 16))).k, 0); }

TEST(Degree, InvertedTwistNegates) {
    AnnulusGrid g(1.0, 2.0, 65, 64);
    for (int k : {1, 2, -3}) {
        auto p = invert_twist(make_twist_2d(g, k).profile);
        EXPECT_EQ(degree(map_from_profile(g, p)).k, -k);
    }
}

TEST(Degree, InvariantUnderFlowComposition) {
    AnnulusGrid g(1.0, 2.0, 65, 64);
    for (int m : {1, 3}) {
        StreamSpec s;
        s.m = m;
        s.steps = 50;
        auto flow = make_flow_map(g, s).map;
        for (int k : {-2, 0, 2}) {
            auto d = degree(compose(flow, make_twist_2d(g, k).map));
            EXPECT_EQ(d.k, k);
            EXPECT_LT(d.confidence, 1e-3);
        }
    }
}

TEST(Degree, SameClass) {
    AnnulusGrid g(1.0, 2.0, 33, 32);
    EXPECT_TRUE(same_class(make_twist_2d(g, 1).map, map_from_profile(g, linear_profile(1.0, 2.0, 1, 33))));
    EXPECT_FALSE(same_class(make_twist_2d(g, 1).map, make_twist_2d(g, 2).map));
}

TEST(LoopParity, ModTwo) {
    EXPECT_EQ(loop_parity(make_twist_profile_even_n(1.0, 2.0, 4, 3, 9)), 1);
    EXPECT_EQ(loop_parity(make_twist_profile_even_n(1.0, 2.0, 4, -2, 9)), 0);
    EXPECT_THROW(loop_parity(twist_profile_2d(1.0, 2.0, 1, 9)), InvalidArgument);
}
