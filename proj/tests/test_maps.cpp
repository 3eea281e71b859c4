#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "twistlab/maps.hpp"

using namespace twistlab;

namespace {
const double e = std::exp(1.0);

double max_distance(const PlanarMap& u, const PlanarMap& v) {
    double m = 0.0;
    for (std::size_t n = 0; n < u.u1.values().size(); ++n)
        m = std::max(m, std::hypot(u.u1.values()[n] - v.u1.values()[n], u.u2.values()[n] - v.u2.values()[n]));
    return m;
}
} // namespace

TEST(TwistProfile, PlanarClosedForm) {
    auto p = twist_profile_2d(1.0, e, 2, 5);
    EXPECT_EQ(p.g.front(), 0.0);
    EXPECT_EQ(p.g.back(), 4.0 * pi);
    const double r = p.r(2);
    EXPECT_NEAR(p.g[2], 4.0 * pi * std::log(r), 1e-14);
}

TEST(TwistProfile, EvenDimensionValue) {
    auto p = make_twist_profile_even_n(1.0, 2.0, 4, 1, 5);
    // 2 pi (1 - 1/1.5^2) / (1 - 1/4)
    EXPECT_NEAR(p.g[2], 4.65421133865154553846, 1e-13);
    EXPECT_THROW(make_twist_profile_even_n(1.0, 2.0, 3, 1, 5), DimensionError);
    EXPECT_THROW(make_twist_profile_even_n(1.0, 2.0, 2, 1, 5), DimensionError);
}

TEST(TwistMap, BoundaryAndRangeHold) {
    AnnulusGrid g(1.0, e, 33, 32);
    for (int k = -3; k <= 3; ++k) EXPECT_NO_THROW(make_twist_2d(g, k).map.validate());
}

TEST(PlanarMap, ValidationNamesTheInvariant) {
    AnnulusGrid g(1.0, 2.0, 9, 8);
    auto u = identity_map(g);
    u.u1.at(8, 3) += 1e-3;
    try {
        u.validate();
        FAIL();
    } catch (const ValidationError& err) {
        EXPECT_NE(std::string(err.what()).find("boundary trace invariant"), std::string::npos);
    }
    auto v = identity_map(g);
    v.u1.at(4, 0) = 3.0;
    try {
        v.validate();
        FAIL();
    } catch (const ValidationError& err) {
        EXPECT_NE(std::string(err.what()).find("range invariant"), std::string::npos);
    }
}

TEST(TwistMap, DetDriftConvergesAtOrderTwo) {
    std::vector<double> d;
    for (std::size_t n : {33, 65, 129}) d.push_back(det_drift(make_twist_2d(AnnulusGrid(1.0, e, n, n - 1), 1).map));
    EXPECT_GE(std::log2(d[0] / d[1]), 1.8);
    EXPECT_GE(std::log2(d[1] / d[2]), 1.8);
}

TEST(Compose, TwistsAdd) {
    AnnulusGrid g(1.0, e, 65, 64);
    for (int k : {1, -2})
        for (int j : {1, 3})
            EXPECT_LT(max_distance(compose(make_twist_2d(g, k).map, make_twist_2d(g, j).map), make_twist_2d(g, k + j).map),
                      1e-10);
}

TEST(FlowMap, ZeroAmplitudeIsIdentity) {
    AnnulusGrid g(1.0, 2.0, 17, 16);
    StreamSpec s;
    s.epsilon = 0.0;
    auto fm = make_flow_map(g, s);
    EXPECT_LT(max_distance(fm.map, identity_map(g)), 1e-14);
}

TEST(FlowMap, AdmissibleAndNearlyIncompressible) {
    AnnulusGrid g(1.0, 2.0, 65, 64);
    StreamSpec s;
    s.steps = 50;
    auto fm = make_flow_map(g, s);
    EXPECT_NO_THROW(fm.map.validate());
    EXPECT_LT(fm.det_drift, 1e-2);
}

TEST(FlowMap, DeviationIsLinearInAmplitude) {
    AnnulusGrid g(1.0, 2.0, 33, 32);
    auto dev = [&](double eps) {
        StreamSpec s;
        s.epsilon = eps;
        s.steps = 50;
        return max_distance(make_flow_map(g, s).map, identity_map(g));
    };
    EXPECT_NEAR(dev(0.02) / dev(0.01), 2.0, 2e-2);
}

TEST(FlowMap, InvalidSpecRejected) {
    AnnulusGrid g(1.0, 2.0, 9, 8);
    StreamSpec s;
    s.m = 0;
    EXPECT_THROW(make_flow_map(g, s), InvalidArgument);
}

TEST(LiftPhase, DegenerateMapThrows) {
    AnnulusGrid g(1.0, 2.0, 9, 8);
    auto u = identity_map(g);
    u.u1.at(4, 2) = 0.0;
    u.u2.at(4, 2) = 0.0;
    EXPECT_THROW(lift_phase(u), DegeneracyError);
}

TEST(LiftPhase, UnderResolvedTwistThrows) {
    AnnulusGrid g(1.0, 2.0, 5, 8);
    EXPECT_THROW(lift_phase(make_twist_2d(g, 3).map), ResolutionError);
}

TEST(MapIo, RoundTrip) {
    AnnulusGrid g(1.0, 2.0, 9, 8);
    auto u = make_twist_2d(g, 1).map;
    std::stringstream ss;
    write_map_csv(ss, u);
    auto v = read_map_csv(ss);
    EXPECT_EQ(max_distance(u, v), 0.0);

    auto p = twist_profile_2d(1.0, 2.0, -1, 9);
    std::stringstream ps;
    write_profile_csv(ps, p);
    auto q = read_profile_csv(ps);
    EXPECT_EQ(q.k, -1);
    EXPECT_EQ(q.g, p.g);
}

TEST(Loops, CanonicalJIsSkewAndSquaresToMinusIdentity) {
    for (int n : {2, 4, 6}) {
        auto J = canonical_J(n);
        EXPECT_LT((J + J.transpose()).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_LT((J * J + Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-15);
    }
}
