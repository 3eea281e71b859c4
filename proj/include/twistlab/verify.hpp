#pragma once

// The invariant suite behind `twistlab verify` and the acceptance binary.
// Checks are grouped by module; criterion numbers tag the acceptance items.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "twistlab/config.hpp"
#include "twistlab/energy.hpp"
#include "twistlab/euler_lagrange.hpp"
#include "twistlab/grid.hpp"
#include "twistlab/maps.hpp"
#include "twistlab/symmetrise.hpp"
#include "twistlab/topology.hpp"
#include "twistlab/torus.hpp"

namespace twistlab {

struct Check {
    std::string module;
    int criterion = 0; ///< acceptance criterion, 0 for a module invariant
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    std::string relation; ///< "<=", ">=", "==" or "report"
    bool pass = true;
};

/// One flow-composed map u = flow o twist_k of the test family.
struct SuiteMember {
    std::string label;
    double epsilon = 0.0;
    int m = 1;
    int k = 0;
    PlanarMap map;
    double det_drift = 0.0;
};

/// Per-map quantities shared by several checks.
struct SuiteEnergy {
    DegreeResult deg;
    int deg_sym = 0;
    double F = 0.0;
    double F_sym = 0.0;
    double closed_form = 0.0;
    double decomposition = 0.0;
    double lower_bound = 0.0;
    double k_min = 0.0; ///< min K_I over nodes with det > 0
    double idempotence = 0.0;
    std::string boundary_error; ///< empty when the map validates
};

struct SuiteIdentities {
    double angular = 0.0;
    double distribution = 0.0; ///< max over Phi
    double ring = 0.0;         ///< max over Phi and sampled radii
    double jensen_one = 0.0;   ///< min margin, Gamma = 1
    double jensen_t = 0.0;     ///< min margin, Gamma = t
};

namespace detail {
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

inline double min_order(const std::vector<double>& errors) {
    double o = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < errors.size(); ++i) o = std::min(o, order(errors[i - 1], errors[i]));
    return o;
}

inline double max_node_distance(const PlanarMap& u, const PlanarMap& v) {
    double m = 0.0;
    const auto& g = u.grid();
    for (std::size_t i = 0; i < g.n_r(); ++i)
        for (std::size_t j = 0; j < g.n_t(); ++j)
            m = std::max(m, std::hypot(u.u1.at(i, j) - v.u1.at(i, j), u.u2.at(i, j) - v.u2.at(i, j)));
    return m;
}

inline std::vector<std::size_t> sample_rings(std::size_t n_r, std::size_t count) {
    std::vector<std::size_t> out;
    for (std::size_t s = 1; s <= count; ++s) out.push_back(s * (n_r - 1) / (count + 1));
    return out;
}
} // namespace detail

class Verifier {
public:
    explicit Verifier(ExperimentConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const ExperimentConfig& config() const { return cfg_; }
    const std::vector<Check>& checks() const { return checks_; }
    /// Wall-clock seconds of timed steps; kept out of every report.
    const std::vector<std::pair<std::string, double>>& timings() const { return timings_; }

    bool passed() const {
        for (const auto& c : checks_)
            if (!c.pass) return false;
        return true;
    }

    void le(const std::string& module, int crit, const std::string& name, double measured, double bound) {
        checks_.push_back({module, crit, name, measured, bound, "<=", measured <= bound});
    }
    void ge(const std::string& module, int crit, const std::string& name, double measured, double bound) {
        checks_.push_back({module, crit, name, measured, bound, ">=", measured >= bound});
    }
    void eq(const std::string& module, int crit, const std::string& name, double measured, double expected) {
        checks_.push_back({module, crit, name, measured, expected, "==", measured == expected});
    }
    void flag(const std::string& module, int crit, const std::string& name, bool ok) {
        eq(module, crit, name, ok ? 1.0 : 0.0, 1.0);
    }
    void report(const std::string& module, int crit, const std::string& name, double measured) {
        checks_.push_back({module, crit, name, measured, 0.0, "report", true});
    }

    template <class F>
    auto timed(const std::string& label, F&& f) {
        auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            timings_.emplace_back(label, seconds_since(t0));
        } else {
            auto out = f();
            timings_.emplace_back(label, seconds_since(t0));
            return out;
        }
    }

    AnnulusGrid grid() const { return AnnulusGrid(cfg_.a, cfg_.b, cfg_.n_r, cfg_.n_t); }
    AnnulusGrid suite_grid() const { return AnnulusGrid(cfg_.suite_a, cfg_.suite_b, cfg_.n_r, cfg_.n_t); }

    /// Base family: every (epsilon, m) flow composed with two twists, the
    /// twist index cycling through suite_k; then extra_maps seeded draws.
    const std::vector<SuiteMember>& suite() {
        if (suite_) return *suite_;
        suite_.emplace();
        const auto g = suite_grid();
        const auto& ks = cfg_.suite_k;
        if (ks.empty()) return *suite_;
        std::size_t q = 0;
        auto add = [&](double eps, int m, int k, const PlanarMap& flow, double drift) {
            PlanarMap u = compose(flow, make_twist_2d(g, k).map);
            std::string label = "eps=" + format_double(eps) + " m=" + std::to_string(m) + " k=" + std::to_string(k);
            suite_->push_back({label, eps, m, k, std::move(u), drift});
        };
        auto flow = [&](double eps, int m) {
            StreamSpec s;
            s.epsilon = eps;
            s.m = m;
            s.T = cfg_.T;
            s.steps = cfg_.steps;
            s.bump = cfg_.bump;
            return make_flow_map(g, s);
        };
        for (double eps : cfg_.epsilons) {
            for (int m : cfg_.modes) {
                auto fm = flow(eps, m);
                for (int rep = 0; rep < 2; ++rep) add(eps, m, ks[q++ % ks.size()], fm.map, fm.det_drift);
            }
        }
        std::mt19937_64 rng(cfg_.seed);
        for (std::size_t e = 0; e < cfg_.extra_maps; ++e) {
            const double eps = 0.02 + 0.08 * detail::uniform01(rng);
            const int m = 1 + static_cast<int>(rng() % 3);
            const int k = ks[rng() % ks.size()];
            auto fm = flow(eps, m);
            add(eps, m, k, fm.map, fm.det_drift);
        }
        return *suite_;
    }

    const std::vector<SuiteEnergy>& suite_energies() {
        if (energies_) return *energies_;
        energies_.emplace();
        EnergyOptions opt;
        opt.refinement_estimate = false;
        for (const auto& s : suite()) {
            SuiteEnergy e;
            try {
                s.map.validate();
            } catch (const ValidationError& err) {
                e.boundary_error = err.what();
            }
            e.deg = degree(s.map);
            auto sym = symmetrise(s.map);
            e.deg_sym = degree(sym.map).k;
            auto rep = energy_F(s.map, opt);
            e.F = rep.value;
            e.decomposition = rep.decomposition_residual.value_or(0.0);
            e.F_sym = energy_F(sym.map, opt).value;
            e.closed_form = energy_F_twist_closed_form(cfg_.suite_a, cfg_.suite_b, e.deg.k);
            e.lower_bound = energy_F_lower_bound(s.map);
            auto K = inner_distortion(s.map);
            auto det = jacobian_determinant(s.map);
            e.k_min = std::numeric_limits<double>::infinity();
            for (std::size_t n = 0; n < det.values().size(); ++n)
                if (det.values()[n] > 0.0) e.k_min = std::min(e.k_min, K.K.values()[n]);
            auto again = symmetrise(sym.map);
            for (std::size_t i = 0; i < sym.profile.size(); ++i)
                e.idempotence = std::max(e.idempotence, std::abs(again.profile.g[i] - sym.profile.g[i]));
            energies_->push_back(std::move(e));
        }
        return *energies_;
    }

    const std::vector<SuiteIdentities>& suite_identities() {
        if (identities_) return *identities_;
        identities_.emplace();
        const auto phis = {RadialFunction::power(2.0), RadialFunction::power(-1.0), RadialFunction::power(-2.0)};
        const auto one = WeightSpec::constant_one();
        const auto lin = WeightSpec::linear();
        for (const auto& s : suite()) {
            SuiteIdentities id;
            id.angular = check_angular_identity(s.map).max_interior;
            const MapFields f = map_fields(s.map);
            for (const auto& phi : phis) {
                id.distribution = std::max(id.distribution, check_distribution_invariance(s.map, phi).residual);
                for (std::size_t i : detail::sample_rings(s.map.grid().n_r(), 5))
                    id.ring = std::max(id.ring, check_ring_identity(f, phi, i).residual);
            }
            id.jensen_one = id.jensen_t = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i + 1 < s.map.grid().n_r(); ++i) {
                id.jensen_one = std::min(id.jensen_one, check_jensen_ring_bound(f, one, i).margin);
                id.jensen_t = std::min(id.jensen_t, check_jensen_ring_bound(f, lin, i).margin);
            }
            identities_->push_back(id);
        }
        return *identities_;
    }

    const std::vector<CoareaDiagnostics>& suite_coarea() {
        if (coarea_) return *coarea_;
        coarea_.emplace();
        for (const auto& s : suite()) coarea_->push_back(coarea_diagnostics(s.map, 16, cfg_.tol_coarea, cfg_.tol_identity));
        return *coarea_;
    }

private:
    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    ExperimentConfig cfg_;
    std::vector<Check> checks_;
    std::vector<std::pair<std::string, double>> timings_;
    std::optional<std::vector<SuiteMember>> suite_;
    std::optional<std::vector<SuiteEnergy>> energies_;
    std::optional<std::vector<SuiteIdentities>> identities_;
    std::optional<std::vector<CoareaDiagnostics>> coarea_;
};

// ---------------------------------------------------------------------------
// Acceptance criteria

inline void criterion_1(Verifier& v) {
    const auto& c = v.config();
    const auto g = v.grid();
    for (int k : {0, 1, -1, 2, -2, 3}) {
        auto rep = energy_F(make_twist_2d(g, k).map);
        const double cf = energy_F_twist_closed_form(c.a, c.b, k);
        v.le("energy", 1, "twist energy vs closed form, relative error, k=" + std::to_string(k),
             std::abs(rep.value - cf) / cf, c.tol_energy);
    }
}

inline void criterion_2(Verifier& v) {
    const auto& c = v.config();
    const auto& suite = v.suite();
    const auto& en = v.suite_energies();
    v.ge("symmetrise", 2, "suite size", static_cast<double>(suite.size()), 12.0);
    int k_lo = 0, k_hi = 0;
    for (const auto& s : suite) {
        k_lo = std::min(k_lo, s.k);
        k_hi = std::max(k_hi, s.k);
    }
    v.flag("symmetrise", 2, "suite spans k in -2..2", k_lo <= -2 && k_hi >= 2);
    for (std::size_t q = 0; q < suite.size(); ++q) {
        v.eq("symmetrise", 2, "degree preserved by symmetrisation [" + suite[q].label + "]", en[q].deg_sym, en[q].deg.k);
        v.le("symmetrise", 2, "energy after symmetrisation over energy before [" + suite[q].label + "]",
             en[q].F_sym / en[q].F, 1.0 + c.tol_symmetrise);
    }
}

inline void criterion_3(Verifier& v) {
    const auto& c = v.config();
    const auto& suite = v.suite();
    const auto& en = v.suite_energies();
    for (std::size_t q = 0; q < suite.size(); ++q) {
        v.ge("symmetrise", 3, "energy over class minimum [" + suite[q].label + "]", en[q].F / en[q].closed_form,
             1.0 - c.tol_minimality);
    }
}

inline void criterion_4(Verifier& v) {
    const auto& c = v.config();
    const auto& suite = v.suite();
    const auto& id = v.suite_identities();
    for (std::size_t q = 0; q < suite.size(); ++q) {
        const std::string tag = " [" + suite[q].label + "]";
        v.le("symmetrise", 4, "angular identity residual, interior radii" + tag, id[q].angular, c.tol_identity);
        v.le("symmetrise", 4, "distribution invariance residual, Phi in {t^2, 1/t, 1/t^2}" + tag, id[q].distribution,
             c.tol_identity);
        v.le("symmetrise", 4, "ring identity residual, 5 radii" + tag, id[q].ring, c.tol_identity);
        v.ge("symmetrise", 4, "ring lower bound margin, Gamma=1" + tag, id[q].jensen_one, -c.tol_jensen);
        v.ge("symmetrise", 4, "ring lower bound margin, Gamma=t" + tag, id[q].jensen_t, -c.tol_jensen);
    }
}

inline void criterion_5(Verifier& v) {
    const auto& c = v.config();
    const auto& suite = v.suite();
    const auto& co = v.suite_coarea();
    for (std::size_t q = 0; q < suite.size(); ++q) {
        const std::string tag = " [" + suite[q].label + "]";
        double ratio = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < co[q].levels.size(); ++l)
            ratio = std::min(ratio, co[q].level_lengths[l] / (two_pi * co[q].levels[l]));
        v.ge("symmetrise", 5, "min level length over 2 pi t, 16 levels" + tag, ratio, 1.0 - c.tol_coarea);
        v.le("symmetrise", 5, "int 1/|u|^2 vs 2 pi ln(b/a), relative error" + tag,
             std::abs(co[q].inverse_square - co[q].log_term) / co[q].log_term, c.tol_identity);
        v.flag("symmetrise", 5, "Holder link" + tag, co[q].holder_link);
    }
}

inline void criterion_6(Verifier& v) {
    const auto& c = v.config();
    const auto g = v.grid();
    for (int k = -3; k <= 3; ++k) {
        const double W = energy_W(make_twist_2d(g, k).map).value;
        const double F = energy_F(make_twist_2d(g, -k).map).value;
        v.le("energy", 6, "|W(twist_k) - F(twist_-k)|, k=" + std::to_string(k), std::abs(W - F), c.tol_duality);
    }
    auto K = inner_distortion(make_twist_2d(g, 1).map);
    const double slope = two_pi / std::log(c.b / c.a);
    const double exact = 1.0 + 0.5 * slope * slope;
    double err = 0.0;
    for (double x : K.K.values()) err = std::max(err, std::abs(x - exact));
    v.le("energy", 6, "max |K_I(twist_1) - (1 + (2 pi)^2 / (2 ln(b/a)^2))|", err, c.tol_duality);
}

inline void criterion_7(Verifier& v) {
    const auto& c = v.config();
    std::vector<double> twist, linear;
    for (std::size_t n_r : {129, 257, 513, 1025}) {
        AnnulusGrid g(c.a, c.b, n_r, n_r - 1);
        twist.push_back(el_residual(make_twist_2d(g, 1).map).path_defect);
        linear.push_back(el_residual(map_from_profile(g, linear_profile(c.a, c.b, 1, n_r))).path_defect);
    }
    for (std::size_t i = 1; i < twist.size(); ++i) {
        v.ge("euler_lagrange", 7,
             "path defect order, twist_1, n_r " + std::to_string(128 << (i - 1)) + "->" + std::to_string(128 << i),
             detail::order(twist[i - 1], twist[i]), c.el_order);
    }
    v.ge("euler_lagrange", 7, "path defect finest/coarsest, linear profile", linear.back() / linear.front(),
         c.el_floor_ratio);
}

inline void criterion_8(Verifier& v) {
    const auto& c = v.config();
    for (int n : {2, 4}) {
        auto sol = solve_loop_ode(c.loop_a, c.loop_b, n, c.loop_k, c.loop_nodes);
        double err = 0.0;
        for (std::size_t i = 0; i < sol.profile.size(); ++i) {
            err = std::max(err, std::abs(sol.profile.g[i] -
                                         loop_angle_closed_form(c.loop_a, c.loop_b, n, c.loop_k, sol.profile.r(i))));
        }
        v.le("euler_lagrange", 8, "loop ODE vs closed form, max norm, n=" + std::to_string(n), err, c.tol_loop);
    }
    bool raised = false;
    try {
        solve_loop_ode(c.loop_a, c.loop_b, 3, 1, c.loop_nodes);
    } catch (const NoSolutionError&) {
        raised = true;
    }
    v.flag("euler_lagrange", 8, "odd n=3 with k=1 raises no-solution", raised);
    auto trivial = solve_loop_ode(c.loop_a, c.loop_b, 3, 0, c.loop_nodes);
    double mx = 0.0;
    for (double x : trivial.profile.g) mx = std::max(mx, std::abs(x));
    v.eq("euler_lagrange", 8, "odd n=3 with k=0 gives the zero profile", mx, 0.0);
}

inline void criterion_9(Verifier& v) {
    const auto& c = v.config();
    TorusSolveOptions opt;
    opt.tol = c.cg_tol;

    TorusSpec solid{c.rho, 0.0, c.torus_k};
    auto s = v.timed("torus solve solid", [&] { return solve_torus_bvp(solid, c.n_s, c.n_psi, opt); });
    double sup = 0.0;
    for (double x : s.field.g) sup = std::max(sup, std::abs(x - two_pi * c.torus_k));
    v.le("torus", 9, "solid torus sup|g - 2 pi k|", sup, c.tol_torus);

    TorusSpec thick{c.rho, c.torus_a, c.torus_k};
    auto t = v.timed("torus solve thickened", [&] { return solve_torus_bvp(thick, c.n_s, c.n_psi, opt); });
    auto u = torus_uniqueness_check(t.field);
    v.le("torus", 9, "thickened torus max principle excess", u.max_principle_excess, 0.0);
    v.le("torus", 9, "thickened torus flux balance, relative", u.flux_balance, c.tol_torus);
    v.le("torus", 9, "thickened torus energy-flux identity, relative", u.energy_flux_gap, c.tol_torus);

    TorusSpec wide{1000.0, c.torus_a, 1};
    auto w = v.timed("torus solve large rho", [&] { return solve_torus_bvp(wide, c.n_s, c.n_psi, opt); });
    double dev = 0.0;
    const double lna = std::log(1.0 / c.torus_a);
    for (std::size_t i = 0; i < w.field.n_s; ++i)
        for (std::size_t j = 0; j < w.field.n_psi; ++j)
            dev = std::max(dev, std::abs(w.field.at(i, j) - two_pi * std::log(w.field.s(i) / c.torus_a) / lna));
    v.le("torus", 9, "rho=1000 deviation from the planar log profile", dev, c.tol_torus_asymptotic);
}

// ---------------------------------------------------------------------------
// Module invariants

inline void invariants_grid(Verifier& v) {
    const auto& c = v.config();
    const auto g = v.grid();
    const double area = pi * (c.b * c.b - c.a * c.a);
    v.le("grid", 0, "quadrature of 1, relative error", std::abs(integrate(ScalarField(g, 1.0)) - area) / area, 1e-12);

    std::vector<double> quad, curl, level;
    for (std::size_t n : {17, 33, 65}) {
        AnnulusGrid h(c.a, c.b, n, n - 1);
        quad.push_back(std::abs(integrate(ScalarField::sample(h, [](double r, double) { return 1.0 / (r * r); })) -
                                two_pi * std::log(c.b / c.a)));
    }
    v.ge("grid", 0, "quadrature order on 1/r^2", detail::min_order(quad), 2.0);

    auto lin = ScalarField::sample(g, [](double r, double) { return 3.0 * r + 2.0; });
    auto gl = grad_polar(lin);
    double e_lin = 0.0;
    for (std::size_t n = 0; n < gl.d_r.values().size(); ++n)
        e_lin = std::max({e_lin, std::abs(gl.d_r.values()[n] - 3.0), std::abs(gl.d_t.values()[n])});
    v.le("grid", 0, "gradient of a field linear in r, max error", e_lin, 1e-10);
    auto gc = grad_polar(ScalarField(g, 5.0));
    double e_const = std::max(gc.d_r.max_abs(), gc.d_t.max_abs());
    v.le("grid", 0, "gradient of an angular constant, max error", e_const, 1e-12);

    const double t_level = c.a + 0.37 * (c.b - c.a);
    for (std::size_t n : {65, 129, 257}) {
        AnnulusGrid h(c.a, c.b, n, n - 1);
        auto f = ScalarField::sample(h, [](double r, double t) { return std::sin(r * std::cos(t)) * std::exp(r * std::sin(t)); });
        auto gp = grad_polar(f);
        auto fx = detail::nodewise(h, [&](std::size_t i, std::size_t j) {
            return std::cos(h.theta(j)) * gp.d_r.at(i, j) - std::sin(h.theta(j)) * gp.d_t.at(i, j) / h.r(i);
        });
        auto fy = detail::nodewise(h, [&](std::size_t i, std::size_t j) {
            return std::sin(h.theta(j)) * gp.d_r.at(i, j) + std::cos(h.theta(j)) * gp.d_t.at(i, j) / h.r(i);
        });
        auto ax = grad_polar(fx);
        auto ay = grad_polar(fy);
        double m = 0.0;
        for (std::size_t i = 0; i < h.n_r(); ++i) {
            for (std::size_t j = 0; j < h.n_t(); ++j) {
                const double ct = std::cos(h.theta(j)), st = std::sin(h.theta(j)), r = h.r(i);
                const double dy_fx = st * ax.d_r.at(i, j) + ct * ax.d_t.at(i, j) / r;
                const double dx_fy = ct * ay.d_r.at(i, j) - st * ay.d_t.at(i, j) / r;
                m = std::max(m, std::abs(dx_fy - dy_fx));
            }
        }
        curl.push_back(m);
        level.push_back(std::abs(level_set_length(ScalarField::sample(h, [](double r, double) { return r; }), t_level) -
                                 two_pi * t_level));
    }
    v.ge("grid", 0, "curl of a discrete gradient, order", detail::min_order(curl), 1.8);
    v.flag("grid", 0, "level set length error decreases monotonically", level[0] > level[1] && level[1] > level[2]);
    v.ge("grid", 0, "level set length order", detail::min_order(level), 1.8);
}

inline void invariants_maps(Verifier& v) {
    const auto& c = v.config();
    const auto g = v.grid();
    for (int k = -2; k <= 3; ++k) {
        std::string err;
        try {
            make_twist_2d(g, k).map.validate();
        } catch (const ValidationError& e) {
            err = e.what();
        }
        v.flag("maps", 0, "twist map boundary and range, k=" + std::to_string(k), err.empty());
    }
    const auto& suite = v.suite();
    const auto& en = v.suite_energies();
    for (std::size_t q = 0; q < suite.size(); ++q)
        v.flag("maps", 0, "suite map boundary and range [" + suite[q].label + "]", en[q].boundary_error.empty());

    std::vector<double> twist_det, flow_det;
    for (std::size_t n : {65, 129, 257}) {
        AnnulusGrid h(c.a, c.b, n, n - 1);
        twist_det.push_back(det_drift(make_twist_2d(h, 1).map));
    }
    for (std::size_t n : {33, 65, 129}) {
        AnnulusGrid h(c.suite_a, c.suite_b, n, n - 1);
        StreamSpec s;
        s.steps = 25 * (n - 1) / 32;
        s.bump = c.bump;
        flow_det.push_back(make_flow_map(h, s).det_drift);
    }
    v.ge("maps", 0, "twist det drift order", detail::min_order(twist_det), 1.8);
    v.ge("maps", 0, "flow det drift order, steps refined with the grid", detail::min_order(flow_det), 1.8);

    double comp = 0.0;
    for (int k : {1, -2, 3})
        for (int j : {1, 2})
            comp = std::max(comp, detail::max_node_distance(compose(make_twist_2d(g, k).map, make_twist_2d(g, j).map),
                                                            make_twist_2d(g, k + j).map));
    v.le("maps", 0, "twist_k o twist_j vs twist_(k+j), max node distance", comp, 1e-8);

    AnnulusGrid h(c.suite_a, c.suite_b, 129, 128);
    auto deviation = [&](double eps) {
        StreamSpec s;
        s.epsilon = eps;
        s.bump = c.bump;
        s.steps = 100;
        return detail::max_node_distance(make_flow_map(h, s).map, identity_map(h)) / eps;
    };
    const double d1 = deviation(0.02), d2 = deviation(0.01);
    v.le("maps", 0, "flow deviation / eps, relative change from eps=0.02 to 0.01", std::abs(d1 - d2) / d2, 1e-2);
}

inline void invariants_topology(Verifier& v) {
    const auto g = v.grid();
    bool all = true;
    double gap = 0.0;
    for (int k = -8; k <= 8; ++k) {
        auto d = degree(make_twist_2d(g, k).map);
        all = all && d.k == k;
        gap = std::max(gap, d.confidence);
    }
    v.flag("topology", 0, "degree of twist_k equals k for |k| <= 8", all);
    v.le("topology", 0, "twist raw degree gap", gap, 1e-6);
    for (int k : {1, 2, -3}) {
        auto p = invert_twist(make_twist_2d(g, k).profile);
        v.eq("topology", 0, "degree of inverted twist_" + std::to_string(k), degree(map_from_profile(g, p)).k, -k);
    }
    const auto& suite = v.suite();
    const auto& en = v.suite_energies();
    for (std::size_t q = 0; q < suite.size(); ++q) {
        v.eq("topology", 0, "degree invariant under flow composition [" + suite[q].label + "]", en[q].deg.k, suite[q].k);
        v.le("topology", 0, "flow-composed raw degree gap [" + suite[q].label + "]", en[q].deg.confidence, 1e-3);
    }
}

inline void invariants_energy(Verifier& v) {
    const auto& c = v.config();
    const auto g = v.grid();
    double dec = 0.0;
    for (int k = -2; k <= 3; ++k) dec = std::max(dec, energy_F(make_twist_2d(g, k).map).decomposition_residual.value_or(0.0));
    const auto& suite = v.suite();
    const auto& en = v.suite_energies();
    for (const auto& e : en) dec = std::max(dec, e.decomposition);
    v.le("energy", 0, "pointwise decomposition residual, twists and suite", dec, 1e-8);

    std::vector<double> err;
    double below = 0.0;
    for (std::size_t n : {65, 129, 257}) {
        AnnulusGrid h(c.a, c.b, n, n - 1);
        const double cf = energy_F_twist_closed_form(c.a, c.b, 2);
        const double F = energy_F(make_twist_2d(h, 2).map).value;
        err.push_back(std::abs(F - cf));
        below = std::max(below, (cf - F) / cf);
    }
    v.le("energy", 0, "twist energy below the closed form, relative", below, 1e-6);
    v.ge("energy", 0, "twist energy convergence order, k=2", detail::min_order(err), 2.0);

    for (std::size_t q = 0; q < suite.size(); ++q) {
        v.ge("energy", 0, "energy over lower bound [" + suite[q].label + "]", en[q].F / en[q].lower_bound, 1.0 - 1e-9);
        v.ge("energy", 0, "min K_I where det > 0 [" + suite[q].label + "]", en[q].k_min, 1.0 - 1e-12);
    }
    for (int k : {1, 2}) {
        auto K = inner_distortion(make_twist_2d(g, k).map);
        v.ge("energy", 0, "min K_I, twist_" + std::to_string(k), K.K.min(), 1.0 - 1e-12);
    }
}

inline void invariants_symmetrise(Verifier& v) {
    const auto& c = v.config();
    const auto& suite = v.suite();
    const auto& en = v.suite_energies();
    const auto& co = v.suite_coarea();
    const auto g = v.suite_grid();
    const double cell_ring = two_pi * c.suite_b * g.h_r();
    for (std::size_t q = 0; q < suite.size(); ++q) {
        const std::string tag = " [" + suite[q].label + "]";
        v.le("symmetrise", 0, "idempotence, max profile change" + tag, en[q].idempotence, 1e-10);
        v.le("symmetrise", 0, "distribution function vs identity, max gap" + tag, co[q].max_distribution_gap, cell_ring);
        v.flag("symmetrise", 0, "distribution function non-increasing" + tag, co[q].monotone_distribution);
    }
    double fixed = 0.0;
    for (int k : {-2, 1, 2}) {
        auto t = make_twist_2d(g, k);
        auto s = symmetrise(t.map);
        for (std::size_t i = 0; i < s.profile.size(); ++i) fixed = std::max(fixed, std::abs(s.profile.g[i] - t.profile.g[i]));
    }
    v.le("symmetrise", 0, "twists are fixed points, max profile change", fixed, 1e-10);
}

inline void invariants_euler_lagrange(Verifier& v) {
    const auto& c = v.config();
    std::vector<double> curl;
    for (std::size_t n_r : {129, 257, 513, 1025}) {
        AnnulusGrid g(c.a, c.b, n_r, n_r - 1);
        curl.push_back(el_residual(make_twist_2d(g, 1).map).max_curl);
    }
    v.ge("euler_lagrange", 0, "interior curl order, twist_1", detail::min_order(curl), c.el_order);

    std::vector<double> flow;
    for (std::size_t n : {33, 65, 129}) {
        AnnulusGrid h(c.suite_a, c.suite_b, n, n - 1);
        StreamSpec s;
        s.steps = 25 * (n - 1) / 32;
        s.bump = c.bump;
        flow.push_back(el_residual(compose(make_flow_map(h, s).map, make_twist_2d(h, 1).map)).path_defect);
    }
    v.ge("euler_lagrange", 0, "path defect finest/coarsest, flow-composed map", flow.back() / flow.front(), c.el_floor_ratio);

    auto el = el_residual(make_twist_2d(v.grid(), 1).map);
    v.le("euler_lagrange", 0, "pressure path gap over path defect times area, twist_1",
         el.interior_path_gap / (el.path_defect * el.interior_area), 1.0);

    for (int n : {2, 4}) {
        auto s = solve_loop_ode(c.loop_a, c.loop_b, n, c.loop_k == 0 ? 1 : c.loop_k, c.loop_nodes);
        auto d = differentiate_uniform(s.profile.g, s.profile.h(), DerivativeOrder::fourth);
        double spread = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
            spread = std::max(spread, std::abs(std::pow(s.profile.r(i), n - 1) * d[i] - s.c) / std::abs(s.c));
        v.le("euler_lagrange", 0, "r^(n-1) g' constant, relative spread, n=" + std::to_string(n), spread, 1e-10);
    }

    auto best = solve_loop_ode(c.loop_a, c.loop_b, 2, 1, 257).profile;
    const double E0 = loop_energy(best);
    bool minimal = true;
    for (double eta : {0.1, -0.1, 0.01, -0.01}) {
        for (int j : {1, 2, 3}) {
            auto q = best;
            for (std::size_t i = 0; i < q.size(); ++i)
                q.g[i] += eta * std::sin(j * pi * (q.r(i) - q.a) / (q.b - q.a));
            minimal = minimal && loop_energy(q) >= E0 * (1.0 - 1e-12);
        }
    }
    v.flag("euler_lagrange", 0, "loop energy minimal among perturbed profiles", minimal);

    double alg = 0.0;
    for (int n : {2, 4, 6})
        for (int k : {1, 2}) alg = std::max(alg, check_twist_el_algebra(solve_loop_ode(1.0, 2.0, n, k, 257).profile).max_residual);
    v.le("euler_lagrange", 0, "twist EL algebra residual, n in {2,4,6}", alg, 1e-10);
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(4, 4);
    auto equal = gradient_field_condition(4, {1.0, 1.0}, R);
    auto unequal = gradient_field_condition(4, {1.0, 2.0}, R);
    v.flag("euler_lagrange", 0, "gradient-field condition holds for equal block rates", equal.condition && equal.spot_agrees);
    v.flag("euler_lagrange", 0, "gradient-field condition fails for unequal block rates",
           !unequal.condition && unequal.spot_agrees);
}

inline void invariants_torus(Verifier& v) {
    const auto& c = v.config();
    TorusSolveOptions opt;
    opt.tol = c.cg_tol;
    opt.initial = InitialGuess::zero;
    for (auto [rho, k] : {std::pair{2.0, 1}, std::pair{4.0, 2}, std::pair{10.0, -1}}) {
        auto s = solve_torus_bvp({rho, 0.0, k}, 65, 64, opt);
        double sup = 0.0;
        for (double x : s.field.g) sup = std::max(sup, std::abs(x - two_pi * k));
        v.le("torus", 0, "solid torus triviality from a zero start, rho=" + format_double(rho) + " k=" + std::to_string(k),
             sup, c.tol_torus);
    }
    opt.initial = InitialGuess::harmonic;

    auto zero = solve_torus_bvp({c.rho, c.torus_a, 0}, 65, 64, opt);
    double mz = 0.0;
    for (double x : zero.field.g) mz = std::max(mz, std::abs(x));
    v.le("torus", 0, "thickened torus with k=0 stays zero", mz, 1e-8);

    std::vector<ToroidalField> levels;
    for (std::size_t n : {65, 129, 257}) levels.push_back(solve_torus_bvp({c.rho, c.torus_a, c.torus_k}, n, n - 1, opt).field);
    std::vector<double> diff;
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
        double m = 0.0;
        for (std::size_t i = 0; i < levels[l].n_s; ++i)
            for (std::size_t j = 0; j < levels[l].n_psi; ++j)
                m = std::max(m, std::abs(levels[l].at(i, j) - levels[l + 1].at(2 * i, 2 * j)));
        diff.push_back(m);
    }
    v.ge("torus", 0, "thickened torus refinement order, max norm", detail::order(diff[0], diff[1]), 1.8);

    const auto& fine = levels.back();
    auto det = torus_det_check(fine);
    v.le("torus", 0, "skew pairing <Q^t Q' x, grad g>", det.skew_pairing, 1e-12);
    v.le("torus", 0, "det grad u - 1", det.det, 1e-12);

    auto en = torus_twist_energy(fine);
    const double base = torus_constant_term(fine.spec, fine.n_s, fine.n_psi);
    v.ge("torus", 0, "thickened twist energy minus constant baseline", en.value - base, 0.0);
    auto curl = curl_condition_residual(fine);
    v.report("torus", 0, "curl condition residual, thickened solution", curl.max_residual);
    v.report("torus", 0, "curl condition residual relative to its terms", curl.relative);
    auto pot = torus_potential_f(fine);
    v.report("torus", 0, "potential d f/d x3 mismatch, thickened solution", pot.relative_mismatch);

    auto linear = ToroidalField::sample({c.rho, c.torus_a, c.torus_k}, 65, 64,
                                        [&](double mu, double x3) { return 0.7 * (c.rho + mu) + 0.3 * x3; });
    v.le("torus", 0, "curl condition residual, g linear", curl_condition_residual(linear).max_residual, 1e-8);
    auto lp = torus_potential_f(linear);
    double lerr = 0.0;
    for (std::size_t i = 0; i < linear.n_s; ++i) {
        for (std::size_t j = 0; j < linear.n_psi; ++j) {
            const double xi = linear.xi(i, j), z = linear.x3(i, j);
            lerr = std::max(lerr, std::abs(lp.f[linear.index(i, j)] + 0.5 * 0.58 * xi * xi / (xi * xi + z * z)));
        }
    }
    v.le("torus", 0, "potential vs closed form, g linear", lerr, 1e-8);

    auto wide = solve_torus_bvp({1000.0, c.torus_a, 1}, 129, 128, opt);
    const double planar = pi * two_pi * two_pi * two_pi / std::log(1.0 / c.torus_a);
    const double scaled = torus_twist_energy(wide.field).term("dirichlet") / 1000.0;
    v.le("torus", 0, "rho=1000 Dirichlet term / rho vs planar annulus, relative", std::abs(scaled - planar) / planar,
         c.tol_torus_asymptotic);
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& verify_modules() {
    static const std::vector<std::string> names{"grid", "maps", "topology", "energy", "symmetrise", "euler_lagrange", "torus"};
    return names;
}

/// Runs every check of the selected module (all modules when empty).
inline void run_verify(Verifier& v, const std::string& module = {}) {
    if (!module.empty()) {
        const auto& names = verify_modules();
        if (std::find(names.begin(), names.end(), module) == names.end())
            throw ValidationError("unknown module '" + module + "'");
    }
    auto want = [&](const char* m) { return module.empty() || module == m; };
    if (want("grid")) invariants_grid(v);
    if (want("maps")) invariants_maps(v);
    if (want("topology")) invariants_topology(v);
    if (want("energy")) {
        criterion_1(v);
        criterion_6(v);
        invariants_energy(v);
    }
    if (want("symmetrise")) {
        criterion_2(v);
        criterion_3(v);
        criterion_4(v);
        criterion_5(v);
        invariants_symmetrise(v);
    }
    if (want("euler_lagrange")) {
        criterion_7(v);
        criterion_8(v);
        invariants_euler_lagrange(v);
    }
    if (want("torus")) {
        criterion_9(v);
        invariants_torus(v);
    }
}

} // namespace twistlab
