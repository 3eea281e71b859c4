#pragma once

// Winding number of u/|u| along radial lines, class membership, and the
// parity of twist loops in higher dimension.

#include <cmath>
#include <string>
#include <vector>

#include "twistlab/error.hpp"
#include "twistlab/grid.hpp"
#include "twistlab/maps.hpp"

namespace twistlab {

struct DegreeResult {
    int k = 0;
    double raw = 0.0;        ///< mean unwrapped winding over all radial lines
    double confidence = 0.0; ///< |raw - k|
    double quadrature = 0.0; ///< (1/2pi) int (u x u_r)/|u|^2 dr, averaged over lines
};

/// Degree by phase unwrapping; every radial line must vote for the same integer.
inline DegreeResult degree(const PlanarMap& u, double eps = 1e-12) {
    const auto& g = u.grid();
    PolarForm pf = lift_phase(u, eps);
    const std::size_t last = g.n_r() - 1;

    double sum = 0.0;
    long long vote = 0;
    for (std::size_t j = 0; j < g.n_t(); ++j) {
        double w = (pf.phase.at(last, j) - pf.phase.at(0, j)) / two_pi;
        auto line = std::llround(w);
        if (j == 0) {
            vote = line;
        } else if (line != vote) {
            throw ResolutionError("radial lines disagree on the winding number (line 0 gives " +
                                  std::to_string(vote) + ", line " + std::to_string(j) + " gives " +
                                  std::to_string(line) + "); refine the grid");
        }
        sum += w;
    }

    // Cross-check: quadrature of the cross-product form on every line.
    auto d1 = grad_polar(u.u1);
    auto d2 = grad_polar(u.u2);
    std::vector<double> integrand(g.n_r());
    double quad = 0.0;
    for (std::size_t j = 0; j < g.n_t(); ++j) {
        for (std::size_t i = 0; i < g.n_r(); ++i) {
            double x = u.u1.at(i, j);
            double y = u.u2.at(i, j);
            integrand[i] = (x * d2.d_r.at(i, j) - y * d1.d_r.at(i, j)) / (x * x + y * y);
        }
        quad += integrate_uniform(integrand, g.h_r());
    }

    DegreeResult out;
    out.k = static_cast<int>(vote);
    out.raw = sum / static_cast<double>(g.n_t());
    out.confidence = std::abs(out.raw - out.k);
    out.quadrature = quad / static_cast<double>(g.n_t()) / two_pi;
    return out;
}

inline bool same_class(const PlanarMap& u, const PlanarMap& v) { return degree(u).k == degree(v).k; }

/// k mod 2 for twist loops in dimension n >= 3.
inline int loop_parity(const TwistProfile& p) {
    if (p.n == 2) throw InvalidArgument("planar maps carry an integer degree; use degree() instead of loop_parity");
    if (p.n < 3) throw DimensionError("loop parity needs n >= 3");
    return static_cast<int>(((p.k % 2) + 2) % 2);
}

} // namespace twistlab
