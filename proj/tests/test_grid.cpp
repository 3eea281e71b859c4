#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "twistlab/grid.hpp"

using namespace twistlab;

namespace {
const double e = std::exp(1.0);
}

TEST(AnnulusGrid, RejectsBadParameters) {
    EXPECT_THROW(AnnulusGrid(2.0, 1.0, 9, 8), InvalidArgument);
    EXPECT_THROW(AnnulusGrid(0.0, 1.0, 9, 8), InvalidArgument);
    EXPECT_THROW(AnnulusGrid(1.0, 2.0, 2, 8), InvalidArgument);
    EXPECT_THROW(AnnulusGrid(1.0, 2.0, 9, 7), InvalidArgument);
}

TEST(AnnulusGrid, NodesAndCoarsening) {
    AnnulusGrid g(1.0, 3.0, 9, 16);
    EXPECT_DOUBLE_EQ(g.r(0), 1.0);
    EXPECT_EQ(g.r(8), 3.0);
    EXPECT_DOUBLE_EQ(g.h_r(), 0.25);
    EXPECT_DOUBLE_EQ(g.theta(4), pi / 2.0);
    auto c = g.coarsened();
    EXPECT_EQ(c.n_r(), 5u);
    EXPECT_EQ(c.n_t(), 8u);
    EXPECT_THROW(AnnulusGrid(1.0, 3.0, 10, 16).coarsened(), InvalidArgument);
}

TEST(Quadrature, ExactForConstants) {
    AnnulusGrid g(1.0, 2.0, 17, 16);
    EXPECT_NEAR(integrate(ScalarField(g, 1.0)), 3.0 * pi, 1e-13);
}

TEST(Quadrature, InverseSquareOracle) {
    AnnulusGrid g(1.0, e, 257, 256);
    auto f = ScalarField::sample(g, [](double r, double) { return 1.0 / (r * r); });
    EXPECT_NEAR(integrate(f), two_pi, 1e-8);
}

TEST(Quadrature, ConvergesAtOrderTwoOrBetter) {
    std::vector<double> err;
    for (std::size_t n : {17, 33, 65}) {
        AnnulusGrid g(1.0, 2.0, n, n - 1);
        auto f = ScalarField::sample(g, [](double r, double t) { return std::cos(t) * std::cos(t) / (r * r) + r; });
        // pi ln 2 + 2 pi (8 - 1) / 3
        err.push_back(std::abs(integrate(f) - (pi * std::log(2.0) + 14.0 * pi / 3.0)));
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 2.0);
    EXPECT_GE(std::log2(err[1] / err[2]), 2.0);
}

TEST(Differentiation, FourthOrderIsExactOnQuartics) {
    std::vector<double> f(11);
    const double h = 0.1;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double x = i * h;
        f[i] = x * x * x * x - 2.0 * x;
    }
    auto d = differentiate_uniform(f, h, DerivativeOrder::fourth);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double x = i * h;
        EXPECT_NEAR(d[i], 4.0 * x * x * x - 2.0, 1e-11);
    }
}

TEST(Differentiation, PeriodicSine) {
    const std::size_t n = 64;
    std::vector<double> f(n);
    const double h = two_pi / n;
    for (std::size_t j = 0; j < n; ++j) f[j] = std::sin(3.0 * j * h);
    auto d = differentiate_periodic(f, h, DerivativeOrder::fourth);
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) err = std::max(err, std::abs(d[j] - 3.0 * std::cos(3.0 * j * h)));
    EXPECT_LT(err, 2e-3);
}

TEST(GradPolar, ExactOnLinearAndAngularConstants) {
    AnnulusGrid g(1.0, 2.0, 17, 16);
    auto gl = grad_polar(ScalarField::sample(g, [](double r, double) { return 2.0 * r - 1.0; }));
    for (double v : gl.d_r.values()) EXPECT_NEAR(v, 2.0, 1e-12);
    EXPECT_LT(gl.d_t.max_abs(), 1e-12);
}

TEST(Interpolate, BilinearAndRangeChecks) {
    AnnulusGrid g(1.0, 2.0, 17, 16);
    auto f = ScalarField::sample(g, [](double r, double) { return 3.0 * r; });
    EXPECT_NEAR(interpolate(f, 1.3, 0.7), 3.9, 1e-12);
    EXPECT_NEAR(interpolate(f, 2.0 + 1e-12, 0.1), 6.0, 1e-9);
    EXPECT_THROW(interpolate(f, 2.5, 0.0), RangeError);
}

TEST(LevelSet, CircleLengthConverges) {
    std::vector<double> err;
    for (std::size_t n : {33, 65, 129}) {
        AnnulusGrid g(1.0, 2.0, n, n - 1);
        err.push_back(std::abs(level_set_length(ScalarField::sample(g, [](double r, double) { return r; }), 1.37) -
                               two_pi * 1.37));
    }
    EXPECT_GT(err[0], err[1]);
    EXPECT_GT(err[1], err[2]);
    EXPECT_LT(err[2], 1e-3);
}

TEST(LevelSet, OutsideRangeThrows) {
    AnnulusGrid g(1.0, 2.0, 9, 8);
    auto f = ScalarField::sample(g, [](double r, double) { return r; });
    EXPECT_THROW(level_set_length(f, 0.5), EmptyContourError);
    EXPECT_THROW(level_set_length(f, 2.5), EmptyContourError);
}

TEST(ScalarField, NonFiniteNamesNode) {
    AnnulusGrid g(1.0, 2.0, 9, 8);
    ScalarField f(g, 1.0);
    f.at(3, 5) = std::numeric_limits<double>::quiet_NaN();
    try {
        f.require_finite("u1");
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& err) {
        std::string msg = err.what();
        EXPECT_NE(msg.find("u1"), std::string::npos);
        EXPECT_NE(msg.find("3"), std::string::npos);
    }
}

TEST(FieldIo, CsvRoundTripIsExact) {
    AnnulusGrid g(1.0, e, 9, 8);
    auto f = ScalarField::sample(g, [](double r, double t) { return std::sin(r * t) / 3.0; });
    std::stringstream ss;
    write_field_csv(ss, f);
    auto back = read_field_csv(ss);
    EXPECT_TRUE(back.grid() == g);
    for (std::size_t n = 0; n < f.values().size(); ++n) EXPECT_EQ(back.values()[n], f.values()[n]);
}

TEST(FieldIo, BinaryRoundTripIsExact) {
    AnnulusGrid g(0.5, 1.5, 9, 8);
    auto f = ScalarField::sample(g, [](double r, double t) { return r * std::cos(t) + 1e-17; });
    std::stringstream ss;
    write_field_binary(ss, f);
    auto back = read_field_binary(ss);
    for (std::size_t n = 0; n < f.values().size(); ++n) EXPECT_EQ(back.values()[n], f.values()[n]);
}

TEST(FieldIo, CsvMissingNodeIsRejected) {
    AnnulusGrid g(1.0, 2.0, 9, 8);
    std::stringstream ss;
    write_field_csv(ss, ScalarField(g, 1.0));
    std::string text = ss.str();
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    std::stringstream cut(text);
    EXPECT_THROW(read_field_csv(cut), IoError);
}

TEST(NumberFormat, RoundTrips) {
    for (double v : {0.1, pi, -1e-300, 123456789.0}) EXPECT_EQ(parse_double(format_double(v)), v);
    EXPECT_THROW(parse_double("1.0x"), IoError);
}
