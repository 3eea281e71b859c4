#pragma once

// Symmetrisation of an admissible map into a twist, and the integral
// identities and coarea bounds behind the energy comparison.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "twistlab/energy.hpp"
#include "twistlab/error.hpp"
#include "twistlab/grid.hpp"
#include "twistlab/maps.hpp"

namespace twistlab {

/// A real function of |u| with its derivative.
struct RadialFunction {
    std::string name;
    std::function<double(double)> f;
    std::function<double(double)> df;

    double operator()(double t) const { return f(t); }

    /// t^p.
    static RadialFunction power(double p) {
        std::string name = p == 0.0 ? "1" : p == 1.0 ? "t" : "t^" + format_double(p);
        return {name, [p](double t) { return std::pow(t, p); },
                [p](double t) { return p == 0.0 ? 0.0 : p * std::pow(t, p - 1.0); }};
    }
};

struct SymmetriseResult {
    PlanarMap map;
    TwistProfile profile;
};

/// g(r) = (1/2pi) int_a^r int_0^2pi (u x u_r)/|u|^2 dtheta dr. Since
/// (u x u_r)/|u|^2 is the radial derivative of the lifted phase, the inner
/// radial integral is the phase increment and no radial quadrature is needed.
inline SymmetriseResult symmetrise(const PlanarMap& u, double eps = 1e-8) {
    const auto& g = u.grid();
    PolarForm pf = lift_phase(u, eps);
    TwistProfile p{g.a(), g.b(), 0, 2, std::vector<double>(g.n_r(), 0.0)};
    for (std::size_t i = 1; i < g.n_r(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.n_t(); ++j) s += pf.phase.at(i, j) - pf.phase.at(0, j);
        p.g[i] = s / static_cast<double>(g.n_t());
    }
    p.k = static_cast<int>(std::lround(p.g.back() / two_pi));
    PlanarMap v = map_from_profile(g, p);
    return {std::move(v), std::move(p)};
}

struct AngularIdentity {
    std::vector<double> residual;        ///< per radius: |int (u x u_theta)/|u|^2 dtheta - 2pi|
    std::vector<double> quadrature_residual; ///< same, by trapezoid of second-order differences
    double max_interior = 0.0;
    double max_quadrature_interior = 0.0;
};

/// Checks int_0^2pi (u x u_theta)/|u|^2 dtheta = 2pi on every circle. The
/// primary value sums exact angle increments between neighbouring nodes.
inline AngularIdentity check_angular_identity(const PlanarMap& u) {
    const auto& g = u.grid();
    auto d1 = grad_polar(u.u1);
    auto d2 = grad_polar(u.u2);
    AngularIdentity out;
    out.residual.resize(g.n_r());
    out.quadrature_residual.resize(g.n_r());
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        double turn = 0.0;
        double quad = 0.0;
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            std::size_t jp = g.wrap(static_cast<std::ptrdiff_t>(j) + 1);
            double x0 = u.u1.at(i, j), y0 = u.u2.at(i, j);
            double x1 = u.u1.at(i, jp), y1 = u.u2.at(i, jp);
            turn += std::atan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1);
            quad += (x0 * d2.d_t.at(i, j) - y0 * d1.d_t.at(i, j)) / (x0 * x0 + y0 * y0);
        }
        out.residual[i] = std::abs(turn - two_pi);
        out.quadrature_residual[i] = std::abs(quad * g.h_t() - two_pi);
        if (i > 0 && i + 1 < g.n_r()) {
            out.max_interior = std::max(out.max_interior, out.residual[i]);
            out.max_quadrature_interior = std::max(out.max_quadrature_interior, out.quadrature_residual[i]);
        }
    }
    return out;
}

struct IdentityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0; ///< |lhs - rhs| scaled by max(1, |lhs|, |rhs|)
};

/// [int_0^2pi Phi(|u|)^2 (u x u_theta) dtheta]_a^r against
/// 2 int_{a<|x|<r} ( |u| Phi(|u|) Phi'(|u|) + Phi(|u|)^2 ) dx, with r = r_i.
/// Takes fields precomputed by map_fields.
inline IdentityCheck check_ring_identity(const MapFields& f, const RadialFunction& phi, std::size_t i_r) {
    const auto& g = f.modulus.grid();
    if (i_r >= g.n_r()) throw InvalidArgument("ring index outside grid");
    auto ring = [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            double P = phi(f.modulus.at(i, j));
            s += P * P * f.cross_t.at(i, j);
        }
        return s * g.h_t();
    };
    auto dens = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        double m = f.modulus.at(i, j);
        double P = phi(m);
        return 2.0 * (m * P * phi.df(m) + P * P);
    });
    IdentityCheck c;
    c.lhs = ring(i_r) - ring(0);
    c.rhs = integrate_inner(dens, i_r);
    c.residual = std::abs(c.lhs - c.rhs) / std::max({1.0, std::abs(c.lhs), std::abs(c.rhs)});
    return c;
}

inline IdentityCheck check_ring_identity(const PlanarMap& u, const RadialFunction& phi, std::size_t i_r,
                                         double eps = 1e-8) {
    return check_ring_identity(map_fields(u, eps), phi, i_r);
}

struct JensenCheck {
    double lhs = 0.0;
    double bound = 0.0; ///< 2 pi Gamma(r)^2
    double margin = 0.0;
    bool hypothesis_holds = true;
};

/// int_0^2pi Gamma(|u|)^2 (u x u_theta)^2 / |u|^4 dtheta >= 2 pi Gamma(r)^2 at r = r_i.
/// Takes fields precomputed by map_fields.
inline JensenCheck check_jensen_ring_bound(const MapFields& f, const WeightSpec& gamma, std::size_t i_r) {
    const auto& g = f.modulus.grid();
    if (i_r >= g.n_r()) throw InvalidArgument("ring index outside grid");
    double s = 0.0;
    for (std::size_t j = 0; j < g.n_t(); ++j) {
        double m = f.modulus.at(i_r, j);
        double G = gamma.gamma(m);
        double c = f.cross_t.at(i_r, j) / (m * m);
        s += G * G * c * c;
    }
    JensenCheck out;
    out.lhs = s * g.h_t();
    double G = gamma.gamma(g.r(i_r));
    out.bound = two_pi * G * G;
    out.margin = out.lhs - out.bound;
    out.hypothesis_holds = gamma.hypothesis_holds(g.a(), g.b());
    return out;
}

inline JensenCheck check_jensen_ring_bound(const PlanarMap& u, const WeightSpec& gamma, std::size_t i_r,
                                           double eps = 1e-8) {
    return check_jensen_ring_bound(map_fields(u, eps), gamma, i_r);
}

/// Relative gap between int Phi(|u|) dx and int Phi(|x|) dx.
inline IdentityCheck check_distribution_invariance(const PlanarMap& u, const RadialFunction& phi) {
    const auto& g = u.grid();
    auto lhs = detail::nodewise(g, [&](std::size_t i, std::size_t j) { return phi(u.modulus(i, j)); });
    auto rhs = ScalarField::sample(g, [&](double r, double) { return phi(r); });
    IdentityCheck c;
    c.lhs = integrate(lhs);
    c.rhs = integrate(rhs);
    c.residual = std::abs(c.lhs - c.rhs) / std::max(std::abs(c.rhs), 1e-300);
    return c;
}

/// Area of {|u| >= t}: whole cells when all corners agree, otherwise
/// r-weighted midpoint sampling of the bilinear interpolant inside the cell.
inline double distribution_function(const ScalarField& modulus, double t, std::size_t sub = 16) {
    const auto& g = modulus.grid();
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < g.n_r(); ++i) {
        const double r0 = g.r(i);
        const double r1 = g.r(i + 1);
        const double cell = 0.5 * (r1 * r1 - r0 * r0) * g.h_t();
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            std::size_t jp = g.wrap(static_cast<std::ptrdiff_t>(j) + 1);
            const double v00 = modulus.at(i, j), v10 = modulus.at(i + 1, j);
            const double v01 = modulus.at(i, jp), v11 = modulus.at(i + 1, jp);
            const double lo = std::min({v00, v10, v01, v11});
            const double hi = std::max({v00, v10, v01, v11});
            if (lo >= t) {
                area += cell;
                continue;
            }
            if (hi < t) continue;
            double in = 0.0;
            double all = 0.0;
            for (std::size_t p = 0; p < sub; ++p) {
                const double fr = (static_cast<double>(p) + 0.5) / static_cast<double>(sub);
                const double rm = r0 + fr * (r1 - r0);
                for (std::size_t q = 0; q < sub; ++q) {
                    const double ft = (static_cast<double>(q) + 0.5) / static_cast<double>(sub);
                    const double v = (1 - fr) * ((1 - ft) * v00 + ft * v01) + fr * ((1 - ft) * v10 + ft * v11);
                    all += rm;
                    if (v >= t) in += rm;
                }
            }
            area += cell * in / all;
        }
    }
    return area;
}

struct CoareaDiagnostics {
    std::vector<double> levels;
    std::vector<double> level_lengths;
    std::vector<double> distribution;          ///< alpha_u(t)
    std::vector<double> distribution_identity; ///< pi (b^2 - t^2)
    std::vector<bool> isoperimetric_ok;        ///< length >= 2 pi t (1 - rel_tol)
    double grad_modulus_l1 = 0.0;  ///< int |grad|u|| / |u|^2
    double grad_modulus_l2 = 0.0;  ///< int |grad|u||^2 / |u|^2
    double inverse_square = 0.0;   ///< int 1 / |u|^2
    double coarea_rhs = 0.0;       ///< int H^1({|u|=t}) / t^2 dt over the sampled levels
    double log_term = 0.0;         ///< 2 pi ln(b/a)
    double max_distribution_gap = 0.0;
    bool isoperimetric_link = true;
    bool distribution_link = true;
    bool holder_link = true;
    bool monotone_distribution = true;
};

/// Samples levels t_l = a + (l + 1/2)(b - a)/n_levels and checks the chain
/// length >= 2 pi t, int 1/|u|^2 = 2 pi ln(b/a), (2 pi ln(b/a))^2 <= int |grad|u||^2/|u|^2 * int 1/|u|^2.
inline CoareaDiagnostics coarea_diagnostics(const PlanarMap& u, std::size_t n_levels, double rel_tol = 1e-2,
                                            double integral_tol = 1e-3, double eps = 1e-8) {
    if (n_levels < 1) throw InvalidArgument("need at least one level");
    const auto& g = u.grid();
    MapFields f = map_fields(u, eps);
    CoareaDiagnostics d;
    const double a = g.a();
    const double b = g.b();
    const double dt = (b - a) / static_cast<double>(n_levels);
    for (std::size_t l = 0; l < n_levels; ++l) {
        double t = a + (static_cast<double>(l) + 0.5) * dt;
        d.levels.push_back(t);
        double len = level_set_length(f.modulus, t);
        d.level_lengths.push_back(len);
        bool ok = len >= two_pi * t * (1.0 - rel_tol);
        d.isoperimetric_ok.push_back(ok);
        d.isoperimetric_link = d.isoperimetric_link && ok;
        d.coarea_rhs += len / (t * t) * dt;
        double alpha = distribution_function(f.modulus, t);
        double alpha_id = pi * (b * b - t * t);
        if (!d.distribution.empty() && alpha > d.distribution.back()) d.monotone_distribution = false;
        d.distribution.push_back(alpha);
        d.distribution_identity.push_back(alpha_id);
        d.max_distribution_gap = std::max(d.max_distribution_gap, std::abs(alpha - alpha_id));
    }
    auto l1 = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        double m = f.modulus.at(i, j);
        return std::sqrt(f.grad_modulus_sq.at(i, j)) / (m * m);
    });
    auto l2 = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        double m = f.modulus.at(i, j);
        return f.grad_modulus_sq.at(i, j) / (m * m);
    });
    auto inv = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        double m = f.modulus.at(i, j);
        return 1.0 / (m * m);
    });
    d.grad_modulus_l1 = integrate(l1);
    d.grad_modulus_l2 = integrate(l2);
    d.inverse_square = integrate(inv);
    d.log_term = two_pi * std::log(b / a);
    d.distribution_link = std::abs(d.inverse_square - d.log_term) <= integral_tol * d.log_term;
    d.holder_link = d.log_term * d.log_term <= d.grad_modulus_l2 * d.inverse_square * (1.0 + integral_tol);
    return d;
}

} // namespace twistlab
