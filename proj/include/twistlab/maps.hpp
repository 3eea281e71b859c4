#pragma once

// Discrete self-maps of the annulus: exact twists, Hamiltonian flow maps and
// composition, plus the polar (modulus, phase offset) view of a map.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "twistlab/error.hpp"
#include "twistlab/grid.hpp"

namespace twistlab {

/// Cartesian components (u1, u2) of a map sampled at the grid nodes.
struct PlanarMap {
    ScalarField u1;
    ScalarField u2;

    explicit PlanarMap(const AnnulusGrid& g) : u1(g), u2(g) {}
    PlanarMap(ScalarField c1, ScalarField c2) : u1(std::move(c1)), u2(std::move(c2)) {
        if (!(u1.grid() == u2.grid())) throw InvalidArgument("map components live on different grids");
    }

    const AnnulusGrid& grid() const { return u1.grid(); }
    double modulus(std::size_t i, std::size_t j) const { return std::hypot(u1.at(i, j), u2.at(i, j)); }

    /// Throws ValidationError naming the first violated invariant.
    void validate(double eps_bc = 1e-10, double eps_range = 1e-6) const {
        const auto& g = grid();
        u1.require_finite("u1");
        u2.require_finite("u2");
        for (std::size_t i : {std::size_t{0}, g.n_r() - 1}) {
            for (std::size_t j = 0; j < g.n_t(); ++j) {
                double d = std::hypot(u1.at(i, j) - g.x(i, j), u2.at(i, j) - g.y(i, j));
                if (d > eps_bc) {
                    throw ValidationError("boundary trace invariant violated: |u - x| = " + format_double(d) +
                                          " at node (i=" + std::to_string(i) + ", j=" + std::to_string(j) + ")");
                }
            }
        }
        for (std::size_t i = 0; i < g.n_r(); ++i) {
            for (std::size_t j = 0; j < g.n_t(); ++j) {
                double m = modulus(i, j);
                if (m < g.a() - eps_range || m > g.b() + eps_range) {
                    throw ValidationError("range invariant violated: |u| = " + format_double(m) +
                                          " at node (i=" + std::to_string(i) + ", j=" + std::to_string(j) + ")");
                }
            }
        }
    }
};

inline PlanarMap identity_map(const AnnulusGrid& g) {
    return PlanarMap(ScalarField::sample(g, [](double r, double t) { return r * std::cos(t); }),
                     ScalarField::sample(g, [](double r, double t) { return r * std::sin(t); }));
}

/// Radial samples of a twist angle on n_nodes uniform radii in [a, b].
struct TwistProfile {
    double a = 1.0;
    double b = 2.0;
    int k = 0;
    int n = 2;
    std::vector<double> g;

    std::size_t size() const { return g.size(); }
    double h() const { return (b - a) / static_cast<double>(g.size() - 1); }
    double r(std::size_t i) const { return i + 1 == g.size() ? b : a + static_cast<double>(i) * h(); }
    std::vector<double> radii() const {
        std::vector<double> out(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = r(i);
        return out;
    }
};

inline void check_radii(double a, double b) {
    if (!(a > 0.0) || !(b > a) || !std::isfinite(b)) throw InvalidArgument("radii must satisfy 0 < a < b");
}

inline void check_nodes(std::size_t n_nodes) {
    if (n_nodes < 3) throw InvalidArgument("profiles need at least 3 radial nodes");
}

/// Planar twist angle 2 pi k log(r/a) / log(b/a).
inline double twist_angle_2d(double a, double b, int k, double r) {
    return two_pi * k * std::log(r / a) / std::log(b / a);
}

/// Twist angle in even dimension n >= 4: 2 pi k ((r/a)^(2-n) - 1) / ((b/a)^(2-n) - 1).
inline double twist_angle_even_n(double a, double b, int n, int k, double r) {
    double p = 2.0 - n;
    return two_pi * k * (std::pow(r / a, p) - 1.0) / (std::pow(b / a, p) - 1.0);
}

inline TwistProfile twist_profile_2d(double a, double b, int k, std::size_t n_nodes) {
    check_radii(a, b);
    check_nodes(n_nodes);
    TwistProfile p{a, b, k, 2, std::vector<double>(n_nodes)};
    for (std::size_t i = 0; i < n_nodes; ++i) p.g[i] = twist_angle_2d(a, b, k, p.r(i));
    p.g.front() = 0.0;
    p.g.back() = two_pi * k;
    return p;
}

inline TwistProfile make_twist_profile_even_n(double a, double b, int n, int k, std::size_t n_nodes) {
    if (n < 4 || n % 2 != 0) {
        throw DimensionError("closed-form twist profiles need even n >= 4 (got n=" + std::to_string(n) +
                             "); odd n admits only the trivial twist");
    }
    check_radii(a, b);
    check_nodes(n_nodes);
    TwistProfile p{a, b, k, n, std::vector<double>(n_nodes)};
    for (std::size_t i = 0; i < n_nodes; ++i) p.g[i] = twist_angle_even_n(a, b, n, k, p.r(i));
    p.g.front() = 0.0;
    p.g.back() = two_pi * k;
    return p;
}

/// Any linear-in-r profile with the same endpoints (not an extremal).
inline TwistProfile linear_profile(double a, double b, int k, std::size_t n_nodes, int n = 2) {
    check_radii(a, b);
    check_nodes(n_nodes);
    TwistProfile p{a, b, k, n, std::vector<double>(n_nodes)};
    for (std::size_t i = 0; i < n_nodes; ++i) p.g[i] = two_pi * k * (p.r(i) - a) / (b - a);
    p.g.front() = 0.0;
    p.g.back() = two_pi * k;
    return p;
}

inline TwistProfile invert_twist(const TwistProfile& p) {
    TwistProfile q = p;
    q.k = -p.k;
    for (double& v : q.g) v = -v;
    return q;
}

/// u(r, theta) = r (cos(theta + g(r)), sin(theta + g(r))). The profile must be
/// sampled on the grid radii.
inline PlanarMap map_from_profile(const AnnulusGrid& grid, const TwistProfile& p) {
    if (p.a != grid.a() || p.b != grid.b() || p.size() != grid.n_r()) {
        throw InvalidArgument("profile radii do not match the grid");
    }
    PlanarMap u(grid);
    for (std::size_t i = 0; i < grid.n_r(); ++i) {
        for (std::size_t j = 0; j < grid.n_t(); ++j) {
            double phi = grid.theta(j) + p.g[i];
            u.u1.at(i, j) = grid.r(i) * std::cos(phi);
            u.u2.at(i, j) = grid.r(i) * std::sin(phi);
        }
    }
    return u;
}

struct TwistMap {
    PlanarMap map;
    TwistProfile profile;
};

inline TwistMap make_twist_2d(const AnnulusGrid& grid, int k) {
    TwistProfile p = twist_profile_2d(grid.a(), grid.b(), k, grid.n_r());
    PlanarMap u = map_from_profile(grid, p);
    return {std::move(u), std::move(p)};
}

/// Canonical block-diagonal J with 2x2 blocks [[0,-1],[1,0]]; zero last row
/// and column when n is odd.
inline Eigen::MatrixXd canonical_J(int n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int p = 0; p + 1 < n; p += 2) {
        J(p, p + 1) = -1.0;
        J(p + 1, p) = 1.0;
    }
    return J;
}

/// Twist loop Q(r) = R exp(-g(r) J) R^t in even dimension.
struct LoopSpec {
    int n = 2;
    Eigen::MatrixXd R;
    TwistProfile profile;

    void validate() const {
        if (n < 2 || n % 2 != 0) throw DimensionError("loops need even n >= 2");
        if (R.rows() != n || R.cols() != n) throw InvalidArgument("frame R has the wrong size");
        double e = (R.transpose() * R - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
        if (e > 1e-12) throw ValidationError("frame R is not orthogonal (|R^t R - I| = " + format_double(e) + ")");
        if (R.determinant() < 0.0) throw ValidationError("frame R is not a rotation");
        if (profile.n != n) throw InvalidArgument("profile dimension does not match loop dimension");
    }

    Eigen::MatrixXd A() const { return R * canonical_J(n) * R.transpose(); }
};

// ---------------------------------------------------------------------------
// Flow maps

enum class Bump { sine, sine_squared };

/// Stream function psi = eps * s(r) * cos(m theta).
struct StreamSpec {
    double epsilon = 0.1;
    int m = 2;
    double T = 1.0;
    std::size_t steps = 200;
    Bump bump = Bump::sine_squared;

    void validate() const {
        if (!std::isfinite(epsilon)) throw InvalidArgument("stream amplitude must be finite");
        if (m < 1) throw InvalidArgument("angular mode m must be >= 1");
        if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidArgument("flow time must be non-negative");
        if (steps < 1) throw InvalidArgument("flow needs at least one step");
    }
};

struct FlowMapResult {
    PlanarMap map;
    double det_drift = 0.0; ///< max node |det grad u - 1|
};

namespace detail {
struct Polar {
    double r;
    double t;
};

inline Polar stream_velocity(const StreamSpec& s, double a, double b, Polar p) {
    const double L = b - a;
    const double x = pi * (p.r - a) / L;
    double bump = 0.0;
    double dbump = 0.0;
    if (s.bump == Bump::sine) {
        bump = std::sin(x);
        dbump = (pi / L) * std::cos(x);
    } else {
        bump = std::sin(x) * std::sin(x);
        dbump = (pi / L) * std::sin(2.0 * x);
    }
    const double c = std::cos(s.m * p.t);
    const double sn = std::sin(s.m * p.t);
    // x' = perp grad psi: r' = -psi_theta / r, theta' = psi_r / r.
    return {s.epsilon * s.m * bump * sn / p.r, s.epsilon * dbump * c / p.r};
}
} // namespace detail

/// det grad u = (u1_r u2_theta - u2_r u1_theta) / r from Cartesian components.
inline ScalarField jacobian_determinant(const PlanarMap& u, DerivativeOrder order = DerivativeOrder::second) {
    const auto& g = u.grid();
    auto d1 = grad_polar(u.u1, order);
    auto d2 = grad_polar(u.u2, order);
    ScalarField det(g);
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_t(); ++j)
            det.at(i, j) = (d1.d_r.at(i, j) * d2.d_t.at(i, j) - d2.d_r.at(i, j) * d1.d_t.at(i, j)) / g.r(i);
    return det;
}

inline double det_drift(const PlanarMap& u, DerivativeOrder order = DerivativeOrder::second) {
    auto det = jacobian_determinant(u, order);
    double m = 0.0;
    for (double v : det.values()) m = std::max(m, std::abs(v - 1.0));
    return m;
}

/// Time-T map of the Hamiltonian flow of the stream function, RK4 in polar
/// coordinates from every node.
inline FlowMapResult make_flow_map(const AnnulusGrid& grid, const StreamSpec& spec) {
    spec.validate();
    const double a = grid.a();
    const double b = grid.b();
    const double dt = spec.T / static_cast<double>(spec.steps);
    const double tol = 1e-9 * (b - a);
    PlanarMap u(grid);
    for (std::size_t i = 0; i < grid.n_r(); ++i) {
        for (std::size_t j = 0; j < grid.n_t(); ++j) {
            detail::Polar p{grid.r(i), grid.theta(j)};
            if (spec.epsilon != 0.0) {
                for (std::size_t s = 0; s < spec.steps; ++s) {
                    auto k1 = detail::stream_velocity(spec, a, b, p);
                    auto k2 = detail::stream_velocity(spec, a, b, {p.r + 0.5 * dt * k1.r, p.t + 0.5 * dt * k1.t});
                    auto k3 = detail::stream_velocity(spec, a, b, {p.r + 0.5 * dt * k2.r, p.t + 0.5 * dt * k2.t});
                    auto k4 = detail::stream_velocity(spec, a, b, {p.r + dt * k3.r, p.t + dt * k3.t});
                    p.r += dt / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
                    p.t += dt / 6.0 * (k1.t + 2.0 * k2.t + 2.0 * k3.t + k4.t);
                    if (!(p.r >= a - tol && p.r <= b + tol)) {
                        throw ResolutionError("flow trajectory from node (i=" + std::to_string(i) + ", j=" +
                                              std::to_string(j) + ") left the annulus; increase the step count");
                    }
                }
            }
            u.u1.at(i, j) = p.r * std::cos(p.t);
            u.u2.at(i, j) = p.r * std::sin(p.t);
        }
    }
    double drift = det_drift(u);
    return {std::move(u), drift};
}

// ---------------------------------------------------------------------------
// Polar view

/// |u| and the lifted phase offset delta = arg u - theta, continuous on the
/// annulus and normalised so that delta = 0 on the inner circle.
struct PolarForm {
    ScalarField modulus;
    ScalarField phase;
};

/// Representative of x modulo 2 pi in [-pi, pi].
inline double wrap_angle(double x) { return std::remainder(x, two_pi); }

/// Lifts arg u - theta along every radial line starting from the inner circle.
/// Consecutive samples must turn by less than max_jump.
inline PolarForm lift_phase(const PlanarMap& u, double eps = 1e-12, double max_jump = 0.75 * pi) {
    const auto& g = u.grid();
    u.u1.require_finite("u1");
    u.u2.require_finite("u2");
    PolarForm out{ScalarField(g), ScalarField(g)};
    for (std::size_t j = 0; j < g.n_t(); ++j) {
        double prev_arg = 0.0;
        for (std::size_t i = 0; i < g.n_r(); ++i) {
            double x = u.u1.at(i, j);
            double y = u.u2.at(i, j);
            double m = std::hypot(x, y);
            if (m < eps) {
                throw DegeneracyError("|u| = " + format_double(m) + " below " + format_double(eps) +
                                      " at node (i=" + std::to_string(i) + ", j=" + std::to_string(j) + ")");
            }
            out.modulus.at(i, j) = m;
            double arg = std::atan2(y, x);
            if (i == 0) {
                out.phase.at(i, j) = wrap_angle(arg - g.theta(j));
            } else {
                double step = wrap_angle(arg - prev_arg);
                if (std::abs(step) > max_jump) {
                    throw ResolutionError("phase jumps by " + format_double(step) + " between radial nodes " +
                                          std::to_string(i - 1) + " and " + std::to_string(i) + " on line j=" +
                                          std::to_string(j) + "; refine the radial grid");
                }
                out.phase.at(i, j) = out.phase.at(i - 1, j) + step;
            }
            prev_arg = arg;
        }
    }
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            std::size_t jp = g.wrap(static_cast<std::ptrdiff_t>(j) + 1);
            double d = out.phase.at(i, jp) - out.phase.at(i, j);
            if (std::abs(d) > max_jump) {
                throw ResolutionError("phase offset jumps by " + format_double(d) + " between angular nodes " +
                                      std::to_string(j) + " and " + std::to_string(jp) + " at radius i=" +
                                      std::to_string(i) + "; refine the angular grid");
            }
        }
    }
    return out;
}

/// outer o inner at the nodes of inner's grid, by bilinear interpolation of
/// outer's modulus and phase offset at (|inner|, arg inner).
inline PlanarMap compose(const PlanarMap& outer, const PlanarMap& inner) {
    PolarForm po = lift_phase(outer);
    const auto& g = inner.grid();
    const double slack = 1e-9 * (outer.grid().b() - outer.grid().a());
    PlanarMap out(g);
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            double x = inner.u1.at(i, j);
            double y = inner.u2.at(i, j);
            double rp = std::hypot(x, y);
            double tp = std::atan2(y, x);
            double m = interpolate(po.modulus, rp, tp, slack);
            double d = interpolate(po.phase, rp, tp, slack);
            out.u1.at(i, j) = m * std::cos(tp + d);
            out.u2.at(i, j) = m * std::sin(tp + d);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

inline void write_map_csv(std::ostream& out, const PlanarMap& u) {
    std::array<const ScalarField*, 2> f{&u.u1, &u.u2};
    write_fields_csv(out, f);
}

inline PlanarMap read_map_csv(std::istream& in) {
    auto f = read_fields_csv(in, 2);
    return PlanarMap(std::move(f[0]), std::move(f[1]));
}

inline void write_profile_csv(std::ostream& out, const TwistProfile& p) {
    out << "# a=" << format_double(p.a) << " b=" << format_double(p.b) << " k=" << p.k << " n=" << p.n << '\n';
    for (std::size_t i = 0; i < p.size(); ++i) out << format_double(p.r(i)) << ',' << format_double(p.g[i]) << '\n';
}

inline TwistProfile read_profile_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty profile file");
    auto kv = parse_header(line);
    TwistProfile p;
    p.a = parse_double(header_value(kv, "a"));
    p.b = parse_double(header_value(kv, "b"));
    p.k = std::stoi(header_value(kv, "k"));
    p.n = std::stoi(header_value(kv, "n"));
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cols = split_csv(line);
        if (cols.size() != 2) throw IoError("expected r,g: " + line);
        p.g.push_back(parse_double(cols[1]));
    }
    check_radii(p.a, p.b);
    check_nodes(p.size());
    return p;
}

} // namespace twistlab
