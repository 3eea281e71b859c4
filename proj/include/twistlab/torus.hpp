#pragma once

// Twist angles on the solid torus (disc cross-section) and the thickened
// torus (annular cross-section): the weighted elliptic problem
// div( xi^3 grad g / (xi^2 + x3^2) ) = 0 with xi = rho + mu, its energy,
// the flux identities, and the curl condition for classical solutions.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "twistlab/energy.hpp"
#include "twistlab/error.hpp"
#include "twistlab/grid.hpp"

namespace twistlab {

struct TorusSpec {
    double rho = 4.0; ///< major radius
    double a = 0.0;   ///< inner minor radius; 0 for the solid torus
    int k = 1;

    bool solid() const { return a == 0.0; }

    void validate() const {
        if (!(rho > 1.0) || !std::isfinite(rho)) {
            throw ValidationError("rho must exceed 1 so the torus does not self-intersect (got " + format_double(rho) + ")");
        }
        if (!(a >= 0.0 && a < 1.0)) throw ValidationError("inner minor radius must satisfy 0 <= a < 1");
    }
};

/// g on a polar grid of the (mu, x3) cross-section: radii s_i uniform in
/// [a, 1] (node 0 is the pole when a = 0, stored once per angle with equal
/// values), angles psi_j = 2 pi j / n_psi.
struct ToroidalField {
    TorusSpec spec;
    std::size_t n_s = 0;
    std::size_t n_psi = 0;
    std::vector<double> g;

    ToroidalField(TorusSpec sp, std::size_t ns, std::size_t npsi) : spec(sp), n_s(ns), n_psi(npsi), g(ns * npsi, 0.0) {
        spec.validate();
        if (ns < 5) throw InvalidArgument("need at least 5 radial nodes");
        if (npsi < 8) throw InvalidArgument("need at least 8 angular nodes");
    }

    template <class F>
    static ToroidalField sample(const TorusSpec& sp, std::size_t ns, std::size_t npsi, F&& f) {
        ToroidalField out(sp, ns, npsi);
        for (std::size_t i = 0; i < ns; ++i)
            for (std::size_t j = 0; j < npsi; ++j) out.at(i, j) = f(out.mu(i, j), out.x3(i, j));
        return out;
    }

    double h_s() const { return (1.0 - spec.a) / static_cast<double>(n_s - 1); }
    double h_psi() const { return two_pi / static_cast<double>(n_psi); }
    double s(std::size_t i) const { return i + 1 == n_s ? 1.0 : spec.a + static_cast<double>(i) * h_s(); }
    double psi(std::size_t j) const { return static_cast<double>(j) * h_psi(); }
    double mu(std::size_t i, std::size_t j) const { return s(i) * std::cos(psi(j)); }
    double x3(std::size_t i, std::size_t j) const { return s(i) * std::sin(psi(j)); }
    double xi(std::size_t i, std::size_t j) const { return spec.rho + mu(i, j); }
    std::size_t index(std::size_t i, std::size_t j) const { return i * n_psi + j; }
    std::size_t wrap(std::ptrdiff_t j) const {
        auto n = static_cast<std::ptrdiff_t>(n_psi);
        return static_cast<std::size_t>(((j % n) + n) % n);
    }
    double& at(std::size_t i, std::size_t j) { return g[index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return g[index(i, j)]; }

    /// Weight xi^3 / (xi^2 + x3^2).
    static double weight(double rho, double mu, double x3) {
        const double xi = rho + mu;
        return xi * xi * xi / (xi * xi + x3 * x3);
    }
    double weight_at(std::size_t i, std::size_t j) const { return weight(spec.rho, mu(i, j), x3(i, j)); }
};

namespace detail {
inline double harmonic_mean(double p, double q) { return 2.0 * p * q / (p + q); }

/// Two-point flux couplings of the finite-volume scheme.
struct TorusFaces {
    std::vector<double> radial;  ///< between (i, j) and (i+1, j), i = 0 .. n_s-2
    std::vector<double> angular; ///< between (i, j) and (i, j+1), i = 0 .. n_s-1
};

inline TorusFaces torus_faces(const ToroidalField& f) {
    TorusFaces t;
    t.radial.assign((f.n_s - 1) * f.n_psi, 0.0);
    t.angular.assign(f.n_s * f.n_psi, 0.0);
    const double hs = f.h_s();
    const double hp = f.h_psi();
    const bool solid = f.spec.solid();
    for (std::size_t i = 0; i + 1 < f.n_s; ++i) {
        for (std::size_t j = 0; j < f.n_psi; ++j) {
            const double w = harmonic_mean(f.weight_at(i, j), f.weight_at(i + 1, j));
            if (solid && i == 0) {
                t.radial[f.index(i, j)] = w * 0.5 * hp;
            } else {
                t.radial[f.index(i, j)] = w * (f.s(i) + 0.5 * hs) * hp / hs;
            }
        }
    }
    for (std::size_t i = solid ? 1 : 0; i < f.n_s; ++i) {
        for (std::size_t j = 0; j < f.n_psi; ++j) {
            std::size_t jp = f.wrap(static_cast<std::ptrdiff_t>(j) + 1);
            const double w = harmonic_mean(f.weight_at(i, j), f.weight_at(i, jp));
            t.angular[f.index(i, j)] = w * hs / (f.s(i) * hp);
        }
    }
    return t;
}

/// Storage slot of a node, mapping every pole alias to (0, 0).
inline std::size_t slot(const ToroidalField& f, std::size_t i, std::size_t j) {
    return (f.spec.solid() && i == 0) ? 0 : f.index(i, j);
}

/// Calls visit(p, q, T) for every face with storage slots p, q.
template <class V>
void for_each_face(const ToroidalField& f, const TorusFaces& t, V&& visit) {
    for (std::size_t i = 0; i + 1 < f.n_s; ++i)
        for (std::size_t j = 0; j < f.n_psi; ++j)
            visit(slot(f, i, j), slot(f, i + 1, j), t.radial[f.index(i, j)]);
    for (std::size_t i = f.spec.solid() ? 1 : 0; i < f.n_s; ++i)
        for (std::size_t j = 0; j < f.n_psi; ++j)
            visit(slot(f, i, j), slot(f, i, f.wrap(static_cast<std::ptrdiff_t>(j) + 1)), t.angular[f.index(i, j)]);
}

/// Unknown slots: the pole (solid torus) and every node strictly inside the radial range.
inline std::vector<char> unknown_mask(const ToroidalField& f) {
    std::vector<char> m(f.g.size(), 0);
    for (std::size_t i = 1; i + 1 < f.n_s; ++i)
        for (std::size_t j = 0; j < f.n_psi; ++j) m[f.index(i, j)] = 1;
    if (f.spec.solid()) m[0] = 1;
    return m;
}

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) s += x[n] * y[n];
    return s;
}
} // namespace detail

enum class InitialGuess { harmonic, zero };

struct TorusSolveOptions {
    double tol = 1e-10;             ///< relative residual |r| / |b|
    std::size_t max_iterations = 0; ///< 0: 20 times the number of unknowns
    InitialGuess initial = InitialGuess::harmonic;
};

struct TorusSolution {
    ToroidalField field;
    std::size_t iterations = 0;
    double residual = 0.0;
    std::vector<double> history;
};

/// Finite-volume solve with Jacobi-preconditioned conjugate gradients.
/// Boundary data: g = 2 pi k on s = 1, and g = 0 on s = a for the thickened torus.
inline TorusSolution solve_torus_bvp(const TorusSpec& spec, std::size_t n_s, std::size_t n_psi,
                                     const TorusSolveOptions& opt = {}) {
    spec.validate();
    ToroidalField f(spec, n_s, n_psi);
    const double outer = two_pi * spec.k;
    const double lna = spec.solid() ? 0.0 : std::log(1.0 / spec.a);
    for (std::size_t i = 0; i < n_s; ++i) {
        double v = 0.0;
        if (i + 1 == n_s) {
            v = outer;
        } else if (opt.initial == InitialGuess::harmonic && i > 0) {
            v = spec.solid() ? outer : outer * std::log(f.s(i) / spec.a) / lna;
        } else if (opt.initial == InitialGuess::harmonic && spec.solid()) {
            v = outer;
        }
        for (std::size_t j = 0; j < n_psi; ++j) f.at(i, j) = v;
    }

    const auto faces = detail::torus_faces(f);
    const auto mask = detail::unknown_mask(f);
    const std::size_t N = f.g.size();

    // b: couplings to boundary values; A x on unknowns only.
    std::vector<double> diag(N, 0.0);
    std::vector<double> rhs(N, 0.0);
    detail::for_each_face(f, faces, [&](std::size_t p, std::size_t q, double T) {
        if (mask[p]) {
            diag[p] += T;
            if (!mask[q]) rhs[p] += T * f.g[q];
        }
        if (mask[q]) {
            diag[q] += T;
            if (!mask[p]) rhs[q] += T * f.g[p];
        }
    });
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        std::fill(y.begin(), y.end(), 0.0);
        detail::for_each_face(f, faces, [&](std::size_t p, std::size_t q, double T) {
            const double xp = mask[p] ? x[p] : 0.0;
            const double xq = mask[q] ? x[q] : 0.0;
            if (mask[p]) y[p] += T * (xp - xq);
            if (mask[q]) y[q] += T * (xq - xp);
        });
    };

    std::vector<double> x(N, 0.0);
    for (std::size_t n = 0; n < N; ++n)
        if (mask[n]) x[n] = f.g[n];
    std::vector<double> r(N), z(N), p(N), Ap(N);
    apply(x, Ap);
    for (std::size_t n = 0; n < N; ++n) r[n] = mask[n] ? rhs[n] - Ap[n] : 0.0;
    const double bnorm = std::sqrt(detail::dot(rhs, rhs));
    TorusSolution sol{f, 0, 0.0, {}};
    const double scale = bnorm > 0.0 ? bnorm : 1.0;
    double rnorm = std::sqrt(detail::dot(r, r));
    sol.history.push_back(rnorm / scale);
    const std::size_t max_it = opt.max_iterations ? opt.max_iterations : 20 * N;
    if (rnorm / scale > opt.tol) {
        for (std::size_t n = 0; n < N; ++n) z[n] = mask[n] ? r[n] / diag[n] : 0.0;
        p = z;
        double rz = detail::dot(r, z);
        std::size_t it = 0;
        while (rnorm / scale > opt.tol) {
            if (it >= max_it) {
                std::string tail;
                for (std::size_t h = sol.history.size() > 5 ? sol.history.size() - 5 : 0; h < sol.history.size(); ++h)
                    tail += " " + format_double(sol.history[h]);
                throw SolverError("conjugate gradients stopped after " + std::to_string(it) +
                                  " iterations; last relative residuals:" + tail);
            }
            apply(p, Ap);
            const double alpha = rz / detail::dot(p, Ap);
            for (std::size_t n = 0; n < N; ++n) {
                x[n] += alpha * p[n];
                r[n] -= alpha * Ap[n];
            }
            for (std::size_t n = 0; n < N; ++n) z[n] = mask[n] ? r[n] / diag[n] : 0.0;
            const double rz_new = detail::dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t n = 0; n < N; ++n) p[n] = z[n] + beta * p[n];
            rnorm = std::sqrt(detail::dot(r, r));
            sol.history.push_back(rnorm / scale);
            ++it;
        }
        sol.iterations = it;
    }
    // True residual of the final iterate.
    apply(x, Ap);
    double true_r = 0.0;
    for (std::size_t n = 0; n < N; ++n)
        if (mask[n]) true_r += (rhs[n] - Ap[n]) * (rhs[n] - Ap[n]);
    sol.residual = std::sqrt(true_r) / scale;

    for (std::size_t n = 0; n < N; ++n)
        if (mask[n]) sol.field.g[n] = x[n];
    if (spec.solid())
        for (std::size_t j = 1; j < n_psi; ++j) sol.field.at(0, j) = sol.field.g[0];
    return sol;
}

/// Weighted Dirichlet sum: sum over faces of T (g_p - g_q)^2, the discrete
/// form of int xi^3 |grad g|^2 / (xi^2 + x3^2) dmu dx3.
inline double torus_dirichlet(const ToroidalField& f) {
    const auto faces = detail::torus_faces(f);
    double D = 0.0;
    detail::for_each_face(f, faces, [&](std::size_t p, std::size_t q, double T) {
        const double d = f.g[p] - f.g[q];
        D += T * d * d;
    });
    return D;
}

/// 3 pi int xi / (xi^2 + x3^2) dmu dx3 over the cross-section, i.e.
/// (3/2) int |x|^-2 dx over the torus.
inline double torus_constant_term(const TorusSpec& spec, std::size_t n_s, std::size_t n_psi) {
    ToroidalField f(spec, n_s, n_psi);
    std::vector<double> ring(n_s, 0.0);
    for (std::size_t i = 0; i < n_s; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n_psi; ++j) {
            const double xi = f.xi(i, j);
            const double z = f.x3(i, j);
            acc += xi / (xi * xi + z * z);
        }
        ring[i] = acc * f.h_psi() * f.s(i);
    }
    return 3.0 * pi * integrate_uniform(ring, f.h_s());
}

namespace detail {
/// Spectral derivative matrix for n (even) periodic samples with spacing h.
inline Eigen::MatrixXd periodic_spectral_matrix(std::size_t n, double h) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < n; ++l) {
            if (j == l) continue;
            const double d = static_cast<double>(static_cast<long long>(j) - static_cast<long long>(l));
            const double sign = ((j + l) % 2 == 0) ? 1.0 : -1.0;
            D(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = 0.5 * sign / std::tan(0.5 * d * h);
        }
    }
    (void)h;
    return D;
}

/// Nodal g_s and g_psi: second-order differences in s, spectral in psi.
struct TorusGradient {
    std::vector<double> d_s;
    std::vector<double> d_psi;
};

inline TorusGradient torus_gradient(const ToroidalField& f, const std::vector<double>& v, const Eigen::MatrixXd& D) {
    TorusGradient out{std::vector<double>(v.size(), 0.0), std::vector<double>(v.size(), 0.0)};
    std::vector<double> line(f.n_s);
    for (std::size_t j = 0; j < f.n_psi; ++j) {
        for (std::size_t i = 0; i < f.n_s; ++i) line[i] = v[f.index(i, j)];
        auto d = differentiate_uniform(line, f.h_s());
        for (std::size_t i = 0; i < f.n_s; ++i) out.d_s[f.index(i, j)] = d[i];
    }
    Eigen::VectorXd row(static_cast<Eigen::Index>(f.n_psi));
    for (std::size_t i = 0; i < f.n_s; ++i) {
        for (std::size_t j = 0; j < f.n_psi; ++j) row(static_cast<Eigen::Index>(j)) = v[f.index(i, j)];
        Eigen::VectorXd d = D * row;
        for (std::size_t j = 0; j < f.n_psi; ++j) out.d_psi[f.index(i, j)] = d(static_cast<Eigen::Index>(j));
    }
    return out;
}

inline Eigen::MatrixXd spectral_for(const ToroidalField& f) {
    if (f.n_psi % 2 != 0) throw InvalidArgument("spectral angular derivatives need an even n_psi");
    return periodic_spectral_matrix(f.n_psi, f.h_psi());
}

/// |grad g|^2 at every node (undefined at the pole; set from ring 1 there).
inline std::vector<double> torus_grad_sq(const ToroidalField& f, const Eigen::MatrixXd& D) {
    auto gr = torus_gradient(f, f.g, D);
    std::vector<double> q(f.g.size(), 0.0);
    for (std::size_t i = 0; i < f.n_s; ++i) {
        for (std::size_t j = 0; j < f.n_psi; ++j) {
            const std::size_t n = f.index(i, j);
            const double s = f.s(i);
            q[n] = s > 0.0 ? gr.d_s[n] * gr.d_s[n] + gr.d_psi[n] * gr.d_psi[n] / (s * s) : 0.0;
        }
    }
    if (f.spec.solid()) {
        double m = 0.0;
        for (std::size_t j = 0; j < f.n_psi; ++j) m += q[f.index(1, j)];
        for (std::size_t j = 0; j < f.n_psi; ++j) q[f.index(0, j)] = m / static_cast<double>(f.n_psi);
    }
    return q;
}
} // namespace detail

/// F on the torus: pi * Dirichlet sum plus the constant (3/2) int |x|^-2 term.
/// cross_check integrates pi xi^3 |grad g|^2 / (xi^2 + x3^2) from nodal derivatives.
inline EnergyReport torus_twist_energy(const ToroidalField& f) {
    EnergyReport rep;
    rep.name = "F_torus";
    rep.grid = {f.spec.a, 1.0, f.n_s, f.n_psi};
    const double constant = torus_constant_term(f.spec, f.n_s, f.n_psi);
    const double dirichlet = pi * torus_dirichlet(f);
    rep.terms = {{"constant", constant}, {"dirichlet", dirichlet}};
    rep.value = rep.terms_sum();
    if (f.n_psi % 2 == 0) {
        auto q = detail::torus_grad_sq(f, detail::spectral_for(f));
        std::vector<double> ring(f.n_s, 0.0);
        for (std::size_t i = 0; i < f.n_s; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < f.n_psi; ++j) acc += f.weight_at(i, j) * q[f.index(i, j)];
            ring[i] = acc * f.h_psi() * f.s(i);
        }
        rep.cross_check = constant + pi * integrate_uniform(ring, f.h_s());
    }
    return rep;
}

struct TorusFluxCheck {
    double inner_flux = 0.0;      ///< weighted flux into the inner ring (thickened torus)
    double outer_flux = 0.0;      ///< weighted flux through the outer circle
    double flux_balance = 0.0;    ///< |outer - inner| / max(|outer|, |inner|, tiny)
    double dirichlet = 0.0;       ///< sum T (dg)^2
    double energy_flux_gap = 0.0; ///< |dirichlet - 2 pi k outer| / max(dirichlet, tiny)
    double max_principle_excess = 0.0; ///< how far g leaves [min, max] of the boundary data
};

/// Discrete divergence-theorem identities: the boundary fluxes agree, and
/// the weighted Dirichlet energy equals 2 pi k times the outer flux.
inline TorusFluxCheck torus_uniqueness_check(const ToroidalField& f) {
    const auto faces = detail::torus_faces(f);
    TorusFluxCheck c;
    const std::size_t last = f.n_s - 1;
    for (std::size_t j = 0; j < f.n_psi; ++j) {
        c.outer_flux += faces.radial[f.index(last - 1, j)] * (f.at(last, j) - f.at(last - 1, j));
        if (!f.spec.solid()) c.inner_flux += faces.radial[f.index(0, j)] * (f.at(1, j) - f.at(0, j));
    }
    c.dirichlet = torus_dirichlet(f);
    const double tiny = 1e-300;
    if (f.spec.solid()) {
        c.flux_balance = std::abs(c.outer_flux);
    } else {
        c.flux_balance =
            std::abs(c.outer_flux - c.inner_flux) / std::max({std::abs(c.outer_flux), std::abs(c.inner_flux), tiny});
    }
    const double target = two_pi * f.spec.k * c.outer_flux;
    c.energy_flux_gap = f.spec.k == 0 && c.dirichlet == 0.0 ? std::abs(target)
                                                            : std::abs(c.dirichlet - target) / std::max(c.dirichlet, tiny);
    const double lo = std::min(0.0, two_pi * f.spec.k);
    const double hi = std::max(0.0, two_pi * f.spec.k);
    const double blo = f.spec.solid() ? two_pi * f.spec.k : lo;
    const double bhi = f.spec.solid() ? two_pi * f.spec.k : hi;
    for (double v : f.g) c.max_principle_excess = std::max({c.max_principle_excess, blo - v, v - bhi});
    return c;
}

struct CurlConditionResult {
    double max_residual = 0.0;
    double relative = 0.0;          ///< max_residual / max(xi |grad|grad g|^2|) scale
    std::vector<double> residual;   ///< per node, zero on excluded nodes
};

/// xi d|grad g|^2/dxi + x3 d|grad g|^2/dx3 at interior nodes (rings 2 .. n_s-3).
inline CurlConditionResult curl_condition_residual(const ToroidalField& f) {
    const auto D = detail::spectral_for(f);
    auto q = detail::torus_grad_sq(f, D);
    auto dq = detail::torus_gradient(f, q, D);
    CurlConditionResult out;
    out.residual.assign(f.g.size(), 0.0);
    double scale = 0.0;
    for (std::size_t i = 2; i + 2 < f.n_s; ++i) {
        for (std::size_t j = 0; j < f.n_psi; ++j) {
            const std::size_t n = f.index(i, j);
            const double s = f.s(i);
            const double c = std::cos(f.psi(j));
            const double sn = std::sin(f.psi(j));
            const double q_mu = c * dq.d_s[n] - sn * dq.d_psi[n] / s;
            const double q_x3 = sn * dq.d_s[n] + c * dq.d_psi[n] / s;
            const double xi = f.xi(i, j);
            const double z = f.x3(i, j);
            const double res = xi * q_mu + z * q_x3;
            out.residual[n] = res;
            out.max_residual = std::max(out.max_residual, std::abs(res));
            scale = std::max(scale, std::abs(xi * q_mu) + std::abs(z * q_x3));
        }
    }
    out.relative = scale > 0.0 ? out.max_residual / scale : 0.0;
    return out;
}

struct TorusPotential {
    std::vector<double> f;         ///< potential at every node
    double mismatch = 0.0;         ///< max |df/dx3 - xi^2 |grad g|^2 x3 / |x|^4| over interior nodes
    double relative_mismatch = 0.0;
};

/// f(xi, x3) = -int_0^xi x3^2 |grad g|^2(tau, x3) tau / (tau^2 + x3^2)^2 dtau,
/// written as -1/2 int_{v0}^1 |grad g|^2 dv with v = x3^2 / (tau^2 + x3^2)
/// and evaluated by 48-point Gauss-Legendre. |grad g|^2 off the
/// cross-section is taken at the nearest point of the cross-section.
inline TorusPotential torus_potential_f(const ToroidalField& field) {
    const auto D = detail::spectral_for(field);
    auto q = detail::torus_grad_sq(field, D);
    const double s_min = field.spec.a;
    auto G = [&](double mu, double x3) {
        double s = std::hypot(mu, x3);
        double psi = std::atan2(x3, mu);
        s = std::clamp(s, s_min, 1.0);
        double fs = (s - s_min) / field.h_s();
        auto i = static_cast<std::size_t>(std::floor(fs));
        if (i + 1 >= field.n_s) i = field.n_s - 2;
        const double wr = fs - static_cast<double>(i);
        double t = std::fmod(psi, two_pi);
        if (t < 0.0) t += two_pi;
        double fp = t / field.h_psi();
        auto j = static_cast<std::size_t>(std::floor(fp));
        double wt = fp - static_cast<double>(j);
        if (j >= field.n_psi) {
            j = field.n_psi - 1;
            wt = 1.0;
        }
        const std::size_t jp = field.wrap(static_cast<std::ptrdiff_t>(j) + 1);
        return (1 - wr) * ((1 - wt) * q[field.index(i, j)] + wt * q[field.index(i, jp)]) +
               wr * ((1 - wt) * q[field.index(i + 1, j)] + wt * q[field.index(i + 1, jp)]);
    };

    // Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_48.
    constexpr int npts = 48;
    std::array<double, npts> gx{};
    std::array<double, npts> gw{};
    for (int m = 0; m < npts; ++m) {
        double z = std::cos(pi * (m + 0.75) / (npts + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int l = 1; l <= npts; ++l) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * l - 1.0) * z * p1 - (l - 1.0) * p2) / l;
            }
            double dp = npts * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) {
                gx[m] = z;
                gw[m] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }

    TorusPotential out;
    out.f.assign(field.g.size(), 0.0);
    const double rho = field.spec.rho;
    for (std::size_t i = 0; i < field.n_s; ++i) {
        for (std::size_t j = 0; j < field.n_psi; ++j) {
            const double xi = field.xi(i, j);
            const double z = field.x3(i, j);
            const double v0 = z * z / (xi * xi + z * z);
            const double mid = 0.5 * (1.0 + v0);
            const double half = 0.5 * (1.0 - v0);
            double acc = 0.0;
            for (int m = 0; m < npts; ++m) {
                const double v = mid + half * gx[m];
                const double tau = std::abs(z) * std::sqrt(1.0 / v - 1.0);
                acc += gw[m] * G(tau - rho, z);
            }
            out.f[field.index(i, j)] = -0.5 * half * acc;
        }
    }

    // Compare d f / d x3 with xi^2 |grad g|^2 x3 / |x|^4 away from the edges.
    auto df = detail::torus_gradient(field, out.f, D);
    double scale = 0.0;
    for (std::size_t i = 2; i + 2 < field.n_s; ++i) {
        for (std::size_t j = 0; j < field.n_psi; ++j) {
            const std::size_t n = field.index(i, j);
            const double s = field.s(i);
            const double f_x3 = std::sin(field.psi(j)) * df.d_s[n] + std::cos(field.psi(j)) * df.d_psi[n] / s;
            const double xi = field.xi(i, j);
            const double z = field.x3(i, j);
            const double r2 = xi * xi + z * z;
            const double target = xi * xi * q[n] * z / (r2 * r2);
            out.mismatch = std::max(out.mismatch, std::abs(f_x3 - target));
            scale = std::max(scale, std::abs(target));
        }
    }
    out.relative_mismatch = scale > 0.0 ? out.mismatch / scale : out.mismatch;
    return out;
}

struct TorusDetCheck {
    double det = 0.0;         ///< max |det(Q + Q' x (x) grad g) - 1|
    double skew_pairing = 0.0; ///< max |<Q^t Q' x, grad g>|
    double grad_norm = 0.0;   ///< max relative |(|grad u|^2) - (3 + xi^2 |grad g|^2)|
};

/// Evaluates the three-dimensional twist u = Q(g) x at sample points of the
/// solid and checks det grad u = 1 through the skew pairing.
inline TorusDetCheck torus_det_check(const ToroidalField& field) {
    const auto D = detail::spectral_for(field);
    auto gr = detail::torus_gradient(field, field.g, D);
    TorusDetCheck out;
    const std::size_t step_i = std::max<std::size_t>(1, field.n_s / 8);
    const std::size_t step_j = std::max<std::size_t>(1, field.n_psi / 8);
    for (std::size_t i = 1; i < field.n_s; i += step_i) {
        for (std::size_t j = 0; j < field.n_psi; j += step_j) {
            const std::size_t n = field.index(i, j);
            const double s = field.s(i);
            const double c = std::cos(field.psi(j));
            const double sn = std::sin(field.psi(j));
            const double g_mu = c * gr.d_s[n] - sn * gr.d_psi[n] / s;
            const double g_x3 = sn * gr.d_s[n] + c * gr.d_psi[n] / s;
            const double xi = field.xi(i, j);
            const double z = field.x3(i, j);
            const double ang = field.at(i, j);
            for (double phi : {0.3, 1.9, 4.1}) {
                Eigen::Vector3d x(xi * std::cos(phi), xi * std::sin(phi), z);
                Eigen::Vector3d grad(x(0) / xi * g_mu, x(1) / xi * g_mu, g_x3);
                Eigen::Matrix3d Q;
                Q << std::cos(ang), -std::sin(ang), 0, std::sin(ang), std::cos(ang), 0, 0, 0, 1;
                Eigen::Matrix3d dQ;
                dQ << -std::sin(ang), -std::cos(ang), 0, std::cos(ang), -std::sin(ang), 0, 0, 0, 0;
                Eigen::Matrix3d M = Q + (dQ * x) * grad.transpose();
                out.det = std::max(out.det, std::abs(M.determinant() - 1.0));
                out.skew_pairing = std::max(out.skew_pairing, std::abs((Q.transpose() * dQ * x).dot(grad)));
                const double closed = 3.0 + xi * xi * grad.squaredNorm();
                out.grad_norm = std::max(out.grad_norm, std::abs(M.squaredNorm() - closed) / closed);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

inline void write_toroidal_csv(std::ostream& out, const ToroidalField& f) {
    out << "# rho=" << format_double(f.spec.rho) << " a=" << format_double(f.spec.a) << " k=" << f.spec.k
        << " n_s=" << f.n_s << " n_psi=" << f.n_psi << '\n';
    for (std::size_t i = 0; i < f.n_s; ++i)
        for (std::size_t j = 0; j < f.n_psi; ++j) out << i << ',' << j << ',' << format_double(f.at(i, j)) << '\n';
}

inline ToroidalField read_toroidal_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty toroidal field file");
    auto kv = parse_header(line);
    TorusSpec spec{parse_double(header_value(kv, "rho")), parse_double(header_value(kv, "a")),
                   std::stoi(header_value(kv, "k"))};
    ToroidalField f(spec, static_cast<std::size_t>(std::stoull(header_value(kv, "n_s"))),
                    static_cast<std::size_t>(std::stoull(header_value(kv, "n_psi"))));
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cols = split_csv(line);
        if (cols.size() != 3) throw IoError("expected i,j,g: " + line);
        auto i = static_cast<std::size_t>(parse_double(cols[0]));
        auto j = static_cast<std::size_t>(parse_double(cols[1]));
        if (i >= f.n_s || j >= f.n_psi) throw IoError("node index out of range: " + line);
        f.at(i, j) = parse_double(cols[2]);
        ++rows;
    }
    if (rows != f.g.size()) throw IoError("toroidal field file does not cover every node");
    return f;
}

} // namespace twistlab
