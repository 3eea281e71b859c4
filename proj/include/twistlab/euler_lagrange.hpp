#pragma once

// Euler-Lagrange residuals for F: the reduced field G whose gradient
// character decides criticality, the loop ODE for twist angles, the
// eigenvalue condition, and closed-form checks of the twist identities.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "twistlab/error.hpp"
#include "twistlab/grid.hpp"
#include "twistlab/maps.hpp"
#include "twistlab/taylor.hpp"

namespace twistlab {

struct ELResidual {
    ScalarField g1;       ///< Cartesian components of G
    ScalarField g2;
    ScalarField curl;     ///< d_x G_2 - d_y G_1
    ScalarField pressure; ///< radial-then-angular path integral of G, zero at node (0, 0)
    ScalarField pressure_alt; ///< angular-then-radial path integral
    double max_curl = 0.0;        ///< over interior nodes
    double path_defect = 0.0;     ///< max |circulation| / area over interior cells
    double path_defect_all = 0.0; ///< same over every cell
    double pressure_path_gap = 0.0;  ///< max |pressure - pressure_alt|
    double interior_path_gap = 0.0;  ///< same two path orders, from node (2, 0) within the interior rings
    double interior_area = 0.0;      ///< area of the interior rings
    double max_field = 0.0;
};

namespace detail {
inline ScalarField d_r(const ScalarField& f) { return grad_polar(f).d_r; }
inline ScalarField d_t(const ScalarField& f) { return grad_polar(f).d_t; }
} // namespace detail

/// G = (grad u)^t / |u|^2 [ Lap u + |grad u|^2/|u|^2 u - 2/|u|^2 grad u (grad u)^t u ],
/// with second derivatives composed from second-order first differences.
/// G is unaffected by the one-sided end stencils from node 2 inward, so
/// circulations use cells with corners in 2 .. n_r - 3 and the curl, which
/// differences G once more, uses nodes 3 .. n_r - 4.
inline ELResidual el_residual(const PlanarMap& u) {
    const auto& g = u.grid();
    if (g.n_r() < 7) throw InvalidArgument("EL residual needs at least 7 radial nodes");
    u.u1.require_finite("u1");
    u.u2.require_finite("u2");
    auto p1 = grad_polar(u.u1);
    auto p2 = grad_polar(u.u2);
    auto u1rr = detail::d_r(p1.d_r);
    auto u2rr = detail::d_r(p2.d_r);
    auto u1tt = detail::d_t(p1.d_t);
    auto u2tt = detail::d_t(p2.d_t);

    ELResidual out{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
    ScalarField gr(g);
    ScalarField rgt(g);
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        const double r = g.r(i);
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            const double c = std::cos(g.theta(j));
            const double s = std::sin(g.theta(j));
            const std::array<double, 2> uv{u.u1.at(i, j), u.u2.at(i, j)};
            const std::array<double, 2> ur{p1.d_r.at(i, j), p2.d_r.at(i, j)};
            const std::array<double, 2> ut{p1.d_t.at(i, j), p2.d_t.at(i, j)};
            const std::array<double, 2> lap{u1rr.at(i, j) + ur[0] / r + u1tt.at(i, j) / (r * r),
                                            u2rr.at(i, j) + ur[1] / r + u2tt.at(i, j) / (r * r)};
            // M(a, b) = d_b u_a.
            double M[2][2];
            for (int a = 0; a < 2; ++a) {
                M[a][0] = c * ur[a] - s * ut[a] / r;
                M[a][1] = s * ur[a] + c * ut[a] / r;
            }
            const double m2 = uv[0] * uv[0] + uv[1] * uv[1];
            const double grad_sq = M[0][0] * M[0][0] + M[0][1] * M[0][1] + M[1][0] * M[1][0] + M[1][1] * M[1][1];
            std::array<double, 2> w{};
            for (int b = 0; b < 2; ++b) w[b] = M[0][b] * uv[0] + M[1][b] * uv[1];
            std::array<double, 2> V{};
            for (int a = 0; a < 2; ++a) {
                V[a] = lap[a] + grad_sq / m2 * uv[a] - 2.0 / m2 * (M[a][0] * w[0] + M[a][1] * w[1]);
            }
            const double G1 = (M[0][0] * V[0] + M[1][0] * V[1]) / m2;
            const double G2 = (M[0][1] * V[0] + M[1][1] * V[1]) / m2;
            if (!std::isfinite(G1) || !std::isfinite(G2)) {
                throw NonFiniteError("EL field is not finite at node (i=" + std::to_string(i) + ", j=" +
                                     std::to_string(j) + ")");
            }
            out.g1.at(i, j) = G1;
            out.g2.at(i, j) = G2;
            gr.at(i, j) = c * G1 + s * G2;
            rgt.at(i, j) = r * (-s * G1 + c * G2);
            out.max_field = std::max(out.max_field, std::hypot(G1, G2));
        }
    }

    // curl = (1/r) [ d_r (r G_theta) - d_theta G_r ].
    auto drg = detail::d_r(rgt);
    auto dtg = detail::d_t(gr);
    const std::size_t lo = 2;
    const std::size_t hi = g.n_r() - 3;
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            out.curl.at(i, j) = (drg.at(i, j) - dtg.at(i, j)) / g.r(i);
            if (i > lo && i < hi) out.max_curl = std::max(out.max_curl, std::abs(out.curl.at(i, j)));
        }
    }

    // Trapezoid edge integrals; a cell's circulation is the sum of its four edges.
    auto radial_edge = [&](std::size_t i, std::size_t j) { return 0.5 * g.h_r() * (gr.at(i, j) + gr.at(i + 1, j)); };
    auto angular_edge = [&](std::size_t i, std::size_t j) {
        std::size_t jp = g.wrap(static_cast<std::ptrdiff_t>(j) + 1);
        return 0.5 * g.h_t() * (rgt.at(i, j) + rgt.at(i, jp));
    };
    for (std::size_t i = 0; i + 1 < g.n_r(); ++i) {
        const double area = 0.5 * (g.r(i + 1) * g.r(i + 1) - g.r(i) * g.r(i)) * g.h_t();
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            std::size_t jp = g.wrap(static_cast<std::ptrdiff_t>(j) + 1);
            double circ = radial_edge(i, j) + angular_edge(i + 1, j) - radial_edge(i, jp) - angular_edge(i, j);
            double density = std::abs(circ) / area;
            out.path_defect_all = std::max(out.path_defect_all, density);
            if (i >= lo && i + 1 <= hi) out.path_defect = std::max(out.path_defect, density);
        }
    }

    // Pressure: p(0,0) = 0, radially along theta_0 then around each ring, and
    // the reverse order for the path-independence check.
    for (std::size_t i = 1; i < g.n_r(); ++i) out.pressure.at(i, 0) = out.pressure.at(i - 1, 0) + radial_edge(i - 1, 0);
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 1; j < g.n_t(); ++j)
            out.pressure.at(i, j) = out.pressure.at(i, j - 1) + angular_edge(i, j - 1);
    for (std::size_t j = 1; j < g.n_t(); ++j)
        out.pressure_alt.at(0, j) = out.pressure_alt.at(0, j - 1) + angular_edge(0, j - 1);
    for (std::size_t j = 0; j < g.n_t(); ++j)
        for (std::size_t i = 1; i < g.n_r(); ++i)
            out.pressure_alt.at(i, j) = out.pressure_alt.at(i - 1, j) + radial_edge(i - 1, j);
    for (std::size_t n = 0; n < g.size(); ++n) {
        out.pressure_path_gap =
            std::max(out.pressure_path_gap, std::abs(out.pressure.values()[n] - out.pressure_alt.values()[n]));
    }

    const std::size_t m = hi - lo + 1;
    std::vector<double> p(m * g.n_t(), 0.0);
    std::vector<double> q(m * g.n_t(), 0.0);
    auto at = [&](std::vector<double>& v, std::size_t i, std::size_t j) -> double& { return v[(i - lo) * g.n_t() + j]; };
    for (std::size_t i = lo + 1; i <= hi; ++i) at(p, i, 0) = at(p, i - 1, 0) + radial_edge(i - 1, 0);
    for (std::size_t i = lo; i <= hi; ++i)
        for (std::size_t j = 1; j < g.n_t(); ++j) at(p, i, j) = at(p, i, j - 1) + angular_edge(i, j - 1);
    for (std::size_t j = 1; j < g.n_t(); ++j) at(q, lo, j) = at(q, lo, j - 1) + angular_edge(lo, j - 1);
    for (std::size_t j = 0; j < g.n_t(); ++j)
        for (std::size_t i = lo + 1; i <= hi; ++i) at(q, i, j) = at(q, i - 1, j) + radial_edge(i - 1, j);
    for (std::size_t n = 0; n < p.size(); ++n) out.interior_path_gap = std::max(out.interior_path_gap, std::abs(p[n] - q[n]));
    out.interior_area = pi * (g.r(hi) * g.r(hi) - g.r(lo) * g.r(lo));
    return out;
}

// ---------------------------------------------------------------------------
// Loop ODE

/// beta(r) = ln(1/r) for n = 2 and r^(2-n)/(n-2) for n >= 3.
template <class T>
T beta(int n, const T& r) {
    using std::log;
    using std::pow;
    if (n == 2) return -log(r);
    return pow(r, 2.0 - n) / T(static_cast<double>(n - 2));
}

/// Twist angle 2 pi k (beta(r) - beta(a)) / (beta(b) - beta(a)).
inline double loop_angle_closed_form(double a, double b, int n, int k, double r) {
    return two_pi * k * (beta(n, r) - beta(n, a)) / (beta(n, b) - beta(n, a));
}

struct LoopSolution {
    TwistProfile profile;
    double c = 0.0;            ///< r^(n-1) gdot
    std::vector<double> gdot;  ///< c / r^(n-1) at the nodes
};

/// Solves (r^(n-1) gdot)' = 0, g(a) = 0, g(b) = 2 pi k by quadrature of
/// r^(1-n) (8-point Gauss-Legendre on every node interval).
inline LoopSolution solve_loop_ode(double a, double b, int n, int k, std::size_t n_nodes) {
    if (n < 2) throw DimensionError("loop ODE needs n >= 2");
    check_radii(a, b);
    check_nodes(n_nodes);
    if (n % 2 == 1 && k != 0) {
        throw NoSolutionError("odd dimension n=" + std::to_string(n) +
                              " admits only the trivial twist; no solution for k=" + std::to_string(k));
    }
    LoopSolution sol;
    sol.profile = TwistProfile{a, b, k, n, std::vector<double>(n_nodes, 0.0)};
    sol.gdot.assign(n_nodes, 0.0);
    if (k == 0) return sol;

    static constexpr std::array<double, 8> x{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                             -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                             0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> w{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                             0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                             0.2223810344533745, 0.1012285362903763};
    const auto& p = sol.profile;
    std::vector<double> I(n_nodes, 0.0);
    for (std::size_t i = 1; i < n_nodes; ++i) {
        const double r0 = p.r(i - 1);
        const double r1 = p.r(i);
        const double mid = 0.5 * (r0 + r1);
        const double half = 0.5 * (r1 - r0);
        double s = 0.0;
        for (std::size_t q = 0; q < x.size(); ++q) s += w[q] * std::pow(mid + half * x[q], 1.0 - n);
        I[i] = I[i - 1] + half * s;
    }
    sol.c = two_pi * k / I.back();
    for (std::size_t i = 0; i < n_nodes; ++i) {
        sol.profile.g[i] = sol.c * I[i];
        sol.gdot[i] = sol.c / std::pow(p.r(i), n - 1.0);
    }
    sol.profile.g.front() = 0.0;
    sol.profile.g.back() = two_pi * k;
    return sol;
}

// ---------------------------------------------------------------------------
// Gradient-field condition

struct GradientFieldResult {
    bool condition = false; ///< -A^2 is a multiple of I (all eigenvalue moduli equal)
    double spread = 0.0;    ///< max |A^2 - (tr A^2 / n) I|
    double curl_spot = 0.0; ///< max finite-difference curl of (n-1) B^2 x / (n |x|^2n)
    bool spot_agrees = true;
};

/// Skew matrix R diag(lambda_p J_2) R^t; odd n gets a trailing zero row/column.
inline Eigen::MatrixXd skew_from_blocks(int n, const std::vector<double>& lambdas, const Eigen::MatrixXd& R) {
    if (n < 2) throw DimensionError("need n >= 2");
    if (static_cast<int>(lambdas.size()) != n / 2) throw InvalidArgument("need n/2 block scales");
    if (R.rows() != n || R.cols() != n) throw InvalidArgument("frame R has the wrong size");
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (int p = 0; p < n / 2; ++p) {
        S(2 * p, 2 * p + 1) = -lambdas[p];
        S(2 * p + 1, 2 * p) = lambdas[p];
    }
    return R * S * R.transpose();
}

/// Decides whether (n-1) B^2 x / (n |x|^2n) is a gradient (B = A here, the
/// frame being absorbed): true iff -A^2 = c I, i.e. A = 0 for odd n.
inline GradientFieldResult gradient_field_condition(const Eigen::MatrixXd& A, double tol = 1e-12) {
    const auto n = static_cast<int>(A.rows());
    if (A.cols() != n || n < 1) throw InvalidArgument("matrix must be square");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    const double skew = (A + A.transpose()).cwiseAbs().maxCoeff();
    if (skew > tol * scale) throw ValidationError("matrix is not skew-symmetric (|A + A^t| = " + format_double(skew) + ")");
    Eigen::MatrixXd A2 = A * A;
    GradientFieldResult res;
    res.spread = (A2 - (A2.trace() / n) * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    res.condition = res.spread <= tol * scale * scale;

    // Finite-difference spot check of the curl at fixed sample points.
    auto field = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        double r2 = x.squaredNorm();
        return (n - 1.0) * (A2 * x) / (n * std::pow(r2, n));
    };
    const double h = 1e-5;
    double worst = 0.0;
    double mag = 0.0;
    for (int s = 0; s < 6; ++s) {
        Eigen::VectorXd x(n);
        for (int c = 0; c < n; ++c) x(c) = std::cos(0.7 + 1.3 * s + 2.1 * c + 0.37 * s * c);
        x *= 1.3 / x.norm();
        mag = std::max(mag, field(x).norm() / x.norm());
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                Eigen::VectorXd ei = Eigen::VectorXd::Unit(n, i) * h;
                Eigen::VectorXd ej = Eigen::VectorXd::Unit(n, j) * h;
                double dFj_di = (field(x + ei)(j) - field(x - ei)(j)) / (2.0 * h);
                double dFi_dj = (field(x + ej)(i) - field(x - ej)(i)) / (2.0 * h);
                worst = std::max(worst, std::abs(dFj_di - dFi_dj));
            }
        }
    }
    res.curl_spot = worst;
    const bool spot_gradient = worst <= 1e-6 * std::max(mag, 1e-300) + 1e-12;
    res.spot_agrees = spot_gradient == res.condition;
    return res;
}

inline GradientFieldResult gradient_field_condition(int n, const std::vector<double>& lambdas,
                                                    const Eigen::MatrixXd& R) {
    return gradient_field_condition(skew_from_blocks(n, lambdas, R));
}

// ---------------------------------------------------------------------------
// Twist identities

struct TwistAlgebraResult {
    double transpose_gradient = 0.0; ///< (grad u)^t = Q^t + r^(2-n) theta (x) A Q theta
    double gradient_norm = 0.0;      ///< |grad u|^2 = n + |A Q theta|^2 / r^(2(n-2))
    double laplacian = 0.0;          ///< Lap u = [2 A Q / r^(n-1) + A^2 Q / r^(2n-3)] theta
    double el_field = 0.0;           ///< G = Q^t [(A^2 + |A w|^2 I)/r^(2n-2) + (n-2)/r^2 I] w / r
    double profile_mismatch = 0.0;   ///< max |g_i - closed form|
    double max_residual = 0.0;
};

namespace detail {
/// Deterministic unit directions in R^n.
inline std::vector<Eigen::VectorXd> sample_directions(int n, int count) {
    std::vector<Eigen::VectorXd> out;
    for (int s = 0; s < count; ++s) {
        Eigen::VectorXd v(n);
        if (n == 2) {
            double t = two_pi * (s + 0.3) / count;
            v << std::cos(t), std::sin(t);
        } else {
            for (int c = 0; c < n; ++c) v(c) = std::cos(0.4 + 1.7 * s + 2.3 * c + 0.61 * s * c);
            v.normalize();
        }
        out.push_back(v);
    }
    return out;
}
} // namespace detail

/// Compares Taylor-mode derivatives of u = exp(-(beta(r)-beta(a)) A) x against
/// the closed forms of the twist identities, with Q built from explicit plane
/// rotations in the frame R. Residuals are relative to 1 + |closed form|.
inline TwistAlgebraResult check_twist_el_algebra(const TwistProfile& profile, const Eigen::MatrixXd& frame = {}) {
    const int n = profile.n;
    if (n < 2 || n % 2 != 0) throw DimensionError("twist identities need even n >= 2");
    check_radii(profile.a, profile.b);
    const Eigen::MatrixXd R = frame.size() == 0 ? Eigen::MatrixXd::Identity(n, n) : frame;
    if (R.rows() != n || R.cols() != n) throw InvalidArgument("frame R has the wrong size");
    const double a = profile.a;
    const double b = profile.b;
    const double lambda = two_pi * profile.k / (beta(n, b) - beta(n, a));
    const Eigen::MatrixXd A = lambda * R * canonical_J(n) * R.transpose();

    TwistAlgebraResult res;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        res.profile_mismatch = std::max(res.profile_mismatch,
                                        std::abs(profile.g[i] - loop_angle_closed_form(a, b, n, profile.k, profile.r(i))));
    }

    auto closed_Q = [&](double r) {
        const double gg = lambda * (beta(n, r) - beta(n, a));
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
        for (int p = 0; p < n; p += 2) {
            E(p, p) = std::cos(gg);
            E(p, p + 1) = std::sin(gg);
            E(p + 1, p) = -std::sin(gg);
            E(p + 1, p + 1) = std::cos(gg);
        }
        return Eigen::MatrixXd(R * E * R.transpose());
    };

    auto rel = [](double diff, double scale) { return std::abs(diff) / (1.0 + std::abs(scale)); };
    const auto dirs = detail::sample_directions(n, n == 2 ? 12 : 16);
    for (int ri = 0; ri < 7; ++ri) {
        const double r = a + (b - a) * (ri + 0.5) / 7.0;
        const Eigen::MatrixXd Q = closed_Q(r);
        for (const auto& theta : dirs) {
            const Eigen::VectorXd x = r * theta;
            // Taylor-mode: column b of grad u and the b-th second derivative.
            Eigen::MatrixXd grad(n, n);
            Eigen::VectorXd lap = Eigen::VectorXd::Zero(n);
            Eigen::VectorXd uval(n);
            for (int bdir = 0; bdir < n; ++bdir) {
                std::vector<Taylor2> xs(n);
                for (int c = 0; c < n; ++c) xs[c] = Taylor2(x(c), c == bdir ? 1.0 : 0.0, 0.0);
                Taylor2 rr(0.0);
                for (int c = 0; c < n; ++c) rr += xs[c] * xs[c];
                Taylor2 rad = sqrt(rr);
                Taylor2 coef = -(beta(n, rad) - Taylor2(beta(n, a)));
                SquareMatrix<Taylor2> M(n);
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q) M(p, q) = coef * Taylor2(A(p, q));
                SquareMatrix<Taylor2> E = expm(M);
                for (int p = 0; p < n; ++p) {
                    Taylor2 up(0.0);
                    for (int q = 0; q < n; ++q) up += E(p, q) * xs[q];
                    grad(p, bdir) = up.d;
                    lap(p) += up.dd;
                    uval(p) = up.v;
                }
            }
            const Eigen::VectorXd w = Q * theta;
            const Eigen::VectorXd Aw = A * w;
            const double rp = std::pow(r, 2.0 - n);
            const Eigen::MatrixXd gt_closed = Q.transpose() + rp * theta * Aw.transpose();
            res.transpose_gradient = std::max(res.transpose_gradient,
                                              (grad.transpose() - gt_closed).cwiseAbs().maxCoeff() /
                                                  (1.0 + gt_closed.cwiseAbs().maxCoeff()));
            const double gn_closed = n + Aw.squaredNorm() / std::pow(r, 2.0 * (n - 2));
            res.gradient_norm = std::max(res.gradient_norm, rel(grad.squaredNorm() - gn_closed, gn_closed));
            const Eigen::VectorXd lap_closed =
                (2.0 * A * Q / std::pow(r, n - 1.0) + A * A * Q / std::pow(r, 2.0 * n - 3.0)) * theta;
            res.laplacian = std::max(res.laplacian, (lap - lap_closed).cwiseAbs().maxCoeff() /
                                                        (1.0 + lap_closed.cwiseAbs().maxCoeff()));
            // Reduced EL field from the Taylor-mode derivatives.
            const double m2 = uval.squaredNorm();
            const Eigen::VectorXd V =
                lap + grad.squaredNorm() / m2 * uval - 2.0 / m2 * grad * (grad.transpose() * uval);
            const Eigen::VectorXd G = grad.transpose() * V / m2;
            const Eigen::VectorXd G_closed =
                Q.transpose() *
                ((A * A + Aw.squaredNorm() * Eigen::MatrixXd::Identity(n, n)) / std::pow(r, 2.0 * n - 2.0) +
                 (n - 2.0) / (r * r) * Eigen::MatrixXd::Identity(n, n)) *
                w / r;
            res.el_field = std::max(res.el_field,
                                    (G - G_closed).cwiseAbs().maxCoeff() / (1.0 + G_closed.cwiseAbs().maxCoeff()));
        }
    }
    res.max_residual = std::max({res.transpose_gradient, res.gradient_norm, res.laplacian, res.el_field});
    return res;
}

} // namespace twistlab
