#pragma once

// Energy functionals on discrete planar maps and on twist profiles.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twistlab/error.hpp"
#include "twistlab/grid.hpp"
#include "twistlab/maps.hpp"

namespace twistlab {

struct GridInfo {
    double a = 0.0;
    double b = 0.0;
    std::size_t n_r = 0;
    std::size_t n_t = 0;

    static GridInfo of(const AnnulusGrid& g) { return {g.a(), g.b(), g.n_r(), g.n_t()}; }
};

struct EnergyReport {
    std::string name;
    double value = 0.0;
    std::vector<std::pair<std::string, double>> terms;
    GridInfo grid;
    std::optional<double> refinement_estimate; ///< Richardson estimate of the error in value
    std::optional<double> cross_check;         ///< same quantity by an independent stencil
    std::optional<double> decomposition_residual;
    std::vector<std::string> warnings;

    double term(const std::string& key) const {
        for (const auto& [k, v] : terms)
            if (k == key) return v;
        throw InvalidArgument("no energy term '" + key + "'");
    }
    double terms_sum() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.second;
        return s;
    }
};

/// Node-wise quantities built from |u| = A and the phase offset delta:
/// u x u_r = A^2 delta_r, u x u_theta = A^2 (1 + delta_theta), etc.
struct MapFields {
    ScalarField modulus;
    ScalarField grad_modulus_sq; ///< |grad |u||^2
    ScalarField cross_r;         ///< u x u_r
    ScalarField cross_t;         ///< u x u_theta
    ScalarField grad_sq;         ///< |grad u|^2
    ScalarField det;             ///< det grad u
};

inline MapFields map_fields(const PlanarMap& u, double eps = 1e-8,
                            DerivativeOrder order = DerivativeOrder::fourth) {
    const auto& g = u.grid();
    if (order == DerivativeOrder::fourth && g.n_r() < 5) order = DerivativeOrder::second;
    PolarForm pf = lift_phase(u, eps);
    auto dA = grad_polar(pf.modulus, order);
    auto dd = grad_polar(pf.phase, order);
    MapFields f{pf.modulus, ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        const double r = g.r(i);
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            const double A = pf.modulus.at(i, j);
            const double Ar = dA.d_r.at(i, j);
            const double At = dA.d_t.at(i, j);
            const double dr = dd.d_r.at(i, j);
            const double dt = 1.0 + dd.d_t.at(i, j);
            f.grad_modulus_sq.at(i, j) = Ar * Ar + At * At / (r * r);
            f.cross_r.at(i, j) = A * A * dr;
            f.cross_t.at(i, j) = A * A * dt;
            f.grad_sq.at(i, j) = Ar * Ar + A * A * dr * dr + (At * At + A * A * dt * dt) / (r * r);
            f.det.at(i, j) = A * (Ar * dt - dr * At) / r;
        }
    }
    return f;
}

struct EnergyOptions {
    double eps = 1e-8;             ///< smallest admissible |u|
    bool refinement_estimate = true;
};

namespace detail {
template <class F>
ScalarField nodewise(const AnnulusGrid& g, F&& f) {
    ScalarField out(g);
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_t(); ++j) out.at(i, j) = f(i, j);
    return out;
}

inline bool coarsenable(const AnnulusGrid& g) {
    return g.n_r() % 2 == 1 && g.n_t() % 2 == 0 && (g.n_r() + 1) / 2 >= 5 && g.n_t() / 2 >= 8;
}

inline PlanarMap restrict_map(const PlanarMap& u) {
    auto c = u.grid().coarsened();
    return PlanarMap(u.u1.restricted_to(c), u.u2.restricted_to(c));
}

// Second-order Cartesian route: |u_r|^2 + |u_theta|^2 / r^2 and the pointwise
// residual of the three-term split computed from the same derivatives.
struct CartesianCheck {
    double energy = 0.0;
    double split_residual = 0.0;
};

inline CartesianCheck cartesian_check(const PlanarMap& u) {
    const auto& g = u.grid();
    auto d1 = grad_polar(u.u1);
    auto d2 = grad_polar(u.u2);
    double worst = 0.0;
    auto dens = nodewise(g, [&](std::size_t i, std::size_t j) {
        const double r = g.r(i);
        const double x = u.u1.at(i, j);
        const double y = u.u2.at(i, j);
        const double m2 = x * x + y * y;
        const double xr = d1.d_r.at(i, j), yr = d2.d_r.at(i, j);
        const double xt = d1.d_t.at(i, j), yt = d2.d_t.at(i, j);
        const double full = xr * xr + yr * yr + (xt * xt + yt * yt) / (r * r);
        const double mr = (x * xr + y * yr);
        const double mt = (x * xt + y * yt);
        const double cr = x * yr - y * xr;
        const double ct = x * yt - y * xt;
        const double split = (mr * mr + mt * mt / (r * r)) / m2 + cr * cr / m2 + ct * ct / (r * r * m2);
        worst = std::max(worst, std::abs(full - split) / std::max(1.0, full));
        return 0.5 * full / m2;
    });
    return {integrate(dens), worst};
}
} // namespace detail

/// F[u] = 1/2 int |grad u|^2 / |u|^2, split into the |grad|u||, (u x u_r) and
/// (u x u_theta) contributions.
inline EnergyReport energy_F(const PlanarMap& u, const EnergyOptions& opt = {}) {
    const auto& g = u.grid();
    MapFields f = map_fields(u, opt.eps);
    auto t_mod = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        double m = f.modulus.at(i, j);
        return 0.5 * f.grad_modulus_sq.at(i, j) / (m * m);
    });
    auto t_r = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        double m2 = f.modulus.at(i, j) * f.modulus.at(i, j);
        return 0.5 * f.cross_r.at(i, j) * f.cross_r.at(i, j) / (m2 * m2);
    });
    auto t_t = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        double m2 = f.modulus.at(i, j) * f.modulus.at(i, j);
        double r = g.r(i);
        return 0.5 * f.cross_t.at(i, j) * f.cross_t.at(i, j) / (r * r * m2 * m2);
    });
    EnergyReport rep;
    rep.name = "F";
    rep.grid = GridInfo::of(g);
    rep.terms = {{"grad_modulus", integrate(t_mod)}, {"radial_cross", integrate(t_r)}, {"angular_cross", integrate(t_t)}};
    rep.value = rep.terms_sum();
    auto cc = detail::cartesian_check(u);
    rep.cross_check = cc.energy;
    rep.decomposition_residual = cc.split_residual;
    if (opt.refinement_estimate && detail::coarsenable(g)) {
        EnergyOptions inner = opt;
        inner.refinement_estimate = false;
        double coarse = energy_F(detail::restrict_map(u), inner).value;
        rep.refinement_estimate = (rep.value - coarse) / 15.0;
    }
    return rep;
}

/// 2 pi ln(b/a) + 4 pi^3 k^2 / ln(b/a).
inline double energy_F_twist_closed_form(double a, double b, int k) {
    check_radii(a, b);
    const double L = std::log(b / a);
    return two_pi * L + 4.0 * pi * pi * pi * k * k / L;
}

/// Surface measure of the unit (n-1)-sphere.
inline double sphere_measure(int n) { return 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n); }

/// Radial derivative of a profile (fourth order when at least 5 nodes).
inline std::vector<double> profile_derivative(const TwistProfile& p) {
    check_nodes(p.size());
    auto order = p.size() >= 5 ? DerivativeOrder::fourth : DerivativeOrder::second;
    return differentiate_uniform(p.g, p.h(), order);
}

/// Loop part of F on a twist: (omega_n / 2) int gdot^2 r^(n-1) dr, which is
/// pi int gdot^2 r dr in the plane.
inline double loop_energy(const TwistProfile& p) {
    auto gd = profile_derivative(p);
    const double w = 0.5 * sphere_measure(p.n);
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) f[i] = w * gd[i] * gd[i] * std::pow(p.r(i), p.n - 1);
    return integrate_uniform(f, p.h());
}

/// (n/2) int_X |x|^-2 dx, the twist-independent part of F.
inline double radial_log_term(double a, double b, int n) {
    const double w = 0.5 * n * sphere_measure(n);
    if (n == 2) return w * std::log(b / a);
    return w * (std::pow(b, n - 2) - std::pow(a, n - 2)) / (n - 2);
}

/// W on a twist from its reduced radial integrand:
/// omega_n n^(-n/2) int (n r^-2 + gdot^2)^(n/2) r^(n-1) dr.
inline double energy_W_twist(const TwistProfile& p) {
    auto gd = profile_derivative(p);
    const double n = p.n;
    const double c = sphere_measure(p.n) * std::pow(n, -0.5 * n);
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double r = p.r(i);
        f[i] = c * std::pow(n / (r * r) + gd[i] * gd[i], 0.5 * n) * std::pow(r, n - 1.0);
    }
    return integrate_uniform(f, p.h());
}

struct InnerDistortion {
    ScalarField K;
    std::size_t clamped = 0; ///< nodes with det <= 0, where K is set to 1
};

/// K_I = |grad u|^2 / (2 det grad u) node-wise.
inline InnerDistortion inner_distortion(const PlanarMap& u, double eps = 1e-8) {
    MapFields f = map_fields(u, eps);
    InnerDistortion out{ScalarField(u.grid()), 0};
    for (std::size_t n = 0; n < u.grid().size(); ++n) {
        const double det = f.det.values()[n];
        if (det <= 0.0) {
            out.K.values()[n] = 1.0;
            ++out.clamped;
        } else {
            out.K.values()[n] = 0.5 * f.grad_sq.values()[n] / det;
        }
    }
    return out;
}

/// W[u] = int K_I / |x|^2.
inline EnergyReport energy_W(const PlanarMap& u, const EnergyOptions& opt = {}) {
    const auto& g = u.grid();
    auto kd = inner_distortion(u, opt.eps);
    auto dens = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        const double r = g.r(i);
        return kd.K.at(i, j) / (r * r);
    });
    EnergyReport rep;
    rep.name = "W";
    rep.grid = GridInfo::of(g);
    rep.terms = {{"distortion", integrate(dens)}};
    rep.value = rep.terms_sum();
    if (kd.clamped > 0) {
        rep.warnings.push_back(std::to_string(kd.clamped) + " nodes with det <= 0 clamped to K_I = 1");
    }
    if (opt.refinement_estimate && detail::coarsenable(g)) {
        EnergyOptions inner = opt;
        inner.refinement_estimate = false;
        double coarse = energy_W(detail::restrict_map(u), inner).value;
        rep.refinement_estimate = (rep.value - coarse) / 15.0;
    }
    return rep;
}

/// Weight Gamma on [a, b]; the weighted energy uses Phi(t) = Gamma(t)^2 / t^2.
struct WeightSpec {
    std::string name;
    std::function<double(double)> gamma;

    double phi(double t) const {
        double G = gamma(t);
        return G * G / (t * t);
    }

    static WeightSpec constant_one() {
        return {"1", [](double) { return 1.0; }};
    }
    static WeightSpec linear() {
        return {"t", [](double t) { return t; }};
    }

    /// Samples Gamma'(t)/t on [a, b] and reports whether it is non-decreasing.
    bool hypothesis_holds(double a, double b, std::size_t samples = 257) const {
        const double h = (b - a) / static_cast<double>(samples - 1);
        const double d = 1e-5 * (b - a);
        double prev = -INFINITY;
        for (std::size_t s = 0; s < samples; ++s) {
            double t = a + static_cast<double>(s) * h;
            double q = (gamma(t + d) - gamma(t - d)) / (2.0 * d) / t;
            if (q < prev - 1e-8 * std::max(1.0, std::abs(prev))) return false;
            prev = q;
        }
        return true;
    }
};

/// H[u] = 1/2 int Phi(|u|) [ |grad|u||^2 + (u x u_theta)^2 / (r^2 |u|^2) ] + (u x u_r)^2 / |u|^4.
inline EnergyReport energy_H(const PlanarMap& u, const WeightSpec& w, const EnergyOptions& opt = {}) {
    const auto& g = u.grid();
    MapFields f = map_fields(u, opt.eps);
    auto t_mod = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        const double m = f.modulus.at(i, j);
        return 0.5 * w.phi(m) * f.grad_modulus_sq.at(i, j);
    });
    auto t_t = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        const double m = f.modulus.at(i, j);
        const double r = g.r(i);
        return 0.5 * w.phi(m) * f.cross_t.at(i, j) * f.cross_t.at(i, j) / (r * r * m * m);
    });
    auto t_r = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        const double m2 = f.modulus.at(i, j) * f.modulus.at(i, j);
        return 0.5 * f.cross_r.at(i, j) * f.cross_r.at(i, j) / (m2 * m2);
    });
    EnergyReport rep;
    rep.name = "H[" + w.name + "]";
    rep.grid = GridInfo::of(g);
    rep.terms = {{"weighted_modulus", integrate(t_mod)}, {"radial_cross", integrate(t_r)},
                 {"weighted_angular", integrate(t_t)}};
    rep.value = rep.terms_sum();
    if (!w.hypothesis_holds(g.a(), g.b())) {
        rep.warnings.push_back("Gamma'(t)/t is not increasing on [a, b]; the comparison with twists is not guaranteed");
    }
    return rep;
}

/// pi ln(b/a) + 1/2 int [ |grad|u||^2/|u|^2 + (u x u_r)^2/|u|^4 ], a lower bound for F.
inline double energy_F_lower_bound(const PlanarMap& u, double eps = 1e-8) {
    const auto& g = u.grid();
    MapFields f = map_fields(u, eps);
    auto dens = detail::nodewise(g, [&](std::size_t i, std::size_t j) {
        const double m2 = f.modulus.at(i, j) * f.modulus.at(i, j);
        return 0.5 * (f.grad_modulus_sq.at(i, j) / m2 + f.cross_r.at(i, j) * f.cross_r.at(i, j) / (m2 * m2));
    });
    return pi * std::log(g.b() / g.a()) + integrate(dens);
}

} // namespace twistlab
