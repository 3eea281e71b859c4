#pragma once

// Polar discretisation of the planar annulus {a <= |x| <= b}: node layout,
// finite-difference stencils, quadrature, level-set length and field I/O.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "twistlab/error.hpp"

namespace twistlab {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Formats a double so that parsing it back yields the same bits.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw IoError("cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

/// Tensor polar grid on the closed annulus. Radii are uniform and include both
/// boundary circles; angles are periodic with node n_t identified with node 0.
class AnnulusGrid {
public:
    AnnulusGrid(double a, double b, std::size_t n_r, std::size_t n_t)
        : a_(a), b_(b), n_r_(n_r), n_t_(n_t) {
        if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("inner radius a must be positive");
        if (!(b > a) || !std::isfinite(b)) throw InvalidArgument("outer radius b must exceed a");
        if (n_r < 3) throw InvalidArgument("n_r must be at least 3");
        if (n_t < 8) throw InvalidArgument("n_t must be at least 8");
        h_r_ = (b - a) / static_cast<double>(n_r - 1);
        h_t_ = two_pi / static_cast<double>(n_t);
    }

    double a() const { return a_; }
    double b() const { return b_; }
    std::size_t n_r() const { return n_r_; }
    std::size_t n_t() const { return n_t_; }
    std::size_t size() const { return n_r_ * n_t_; }
    double h_r() const { return h_r_; }
    double h_t() const { return h_t_; }

    double r(std::size_t i) const {
        // Pin the last node so r(n_r-1) == b exactly.
        return i + 1 == n_r_ ? b_ : a_ + static_cast<double>(i) * h_r_;
    }
    double theta(std::size_t j) const { return static_cast<double>(j) * h_t_; }
    std::size_t index(std::size_t i, std::size_t j) const { return i * n_t_ + j; }
    std::size_t wrap(std::ptrdiff_t j) const {
        auto n = static_cast<std::ptrdiff_t>(n_t_);
        return static_cast<std::size_t>(((j % n) + n) % n);
    }

    double x(std::size_t i, std::size_t j) const { return r(i) * std::cos(theta(j)); }
    double y(std::size_t i, std::size_t j) const { return r(i) * std::sin(theta(j)); }

    /// Same grid with every other node removed (needs odd n_r, even n_t).
    AnnulusGrid coarsened() const {
        if (n_r_ % 2 == 0 || n_t_ % 2 != 0) throw InvalidArgument("coarsening needs odd n_r and even n_t");
        return AnnulusGrid(a_, b_, (n_r_ + 1) / 2, n_t_ / 2);
    }

    friend bool operator==(const AnnulusGrid& l, const AnnulusGrid& r) {
        return l.a_ == r.a_ && l.b_ == r.b_ && l.n_r_ == r.n_r_ && l.n_t_ == r.n_t_;
    }

private:
    double a_;
    double b_;
    std::size_t n_r_;
    std::size_t n_t_;
    double h_r_ = 0.0;
    double h_t_ = 0.0;
};

/// One real value per grid node, stored row-major by radius.
class ScalarField {
public:
    explicit ScalarField(AnnulusGrid grid, double fill = 0.0)
        : grid_(grid), values_(grid.size(), fill) {}

    ScalarField(AnnulusGrid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size()) {
            throw InvalidArgument("field value count " + std::to_string(values_.size()) +
                                  " does not match grid size " + std::to_string(grid_.size()));
        }
    }

    /// Samples f(r, theta) at every node.
    template <class F>
    static ScalarField sample(const AnnulusGrid& grid, F&& f) {
        ScalarField out(grid);
        for (std::size_t i = 0; i < grid.n_r(); ++i) {
            for (std::size_t j = 0; j < grid.n_t(); ++j) {
                out.at(i, j) = f(grid.r(i), grid.theta(j));
            }
        }
        return out;
    }

    const AnnulusGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double& at(std::size_t i, std::size_t j) { return values_[grid_.index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return values_[grid_.index(i, j)]; }

    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Throws NonFiniteError naming the first NaN/inf node.
    void require_finite(std::string_view what = "field") const {
        for (std::size_t i = 0; i < grid_.n_r(); ++i) {
            for (std::size_t j = 0; j < grid_.n_t(); ++j) {
                if (!std::isfinite(at(i, j))) {
                    throw NonFiniteError(std::string(what) + " is not finite at node (i=" + std::to_string(i) +
                                         ", j=" + std::to_string(j) + ")");
                }
            }
        }
    }

    ScalarField restricted_to(const AnnulusGrid& coarse) const {
        std::size_t sr = (grid_.n_r() - 1) / (coarse.n_r() - 1);
        std::size_t st = grid_.n_t() / coarse.n_t();
        ScalarField out(coarse);
        for (std::size_t i = 0; i < coarse.n_r(); ++i)
            for (std::size_t j = 0; j < coarse.n_t(); ++j) out.at(i, j) = at(i * sr, j * st);
        return out;
    }

private:
    AnnulusGrid grid_;
    std::vector<double> values_;
};

enum class DerivativeOrder { second, fourth };

/// d/dx of uniformly spaced samples. Second order: central interior, one-sided
/// three-point ends. Fourth order: five-point stencils, shifted near the ends.
inline std::vector<double> differentiate_uniform(std::span<const double> f, double h,
                                                 DerivativeOrder order = DerivativeOrder::second) {
    const std::size_t n = f.size();
    std::vector<double> d(n, 0.0);
    if (order == DerivativeOrder::second) {
        if (n < 3) throw InvalidArgument("second-order differences need at least 3 samples");
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        return d;
    }
    if (n < 5) throw InvalidArgument("fourth-order differences need at least 5 samples");
    const double s = 12.0 * h;
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / s;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / s;
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / s;
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / s;
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / s;
    return d;
}

/// d/dtheta of periodic samples (central, second or fourth order).
inline std::vector<double> differentiate_periodic(std::span<const double> f, double h,
                                                  DerivativeOrder order = DerivativeOrder::second) {
    const std::size_t n = f.size();
    std::vector<double> d(n, 0.0);
    auto at = [&](std::ptrdiff_t k) {
        auto nn = static_cast<std::ptrdiff_t>(n);
        return f[static_cast<std::size_t>(((k % nn) + nn) % nn)];
    };
    for (std::size_t j = 0; j < n; ++j) {
        auto k = static_cast<std::ptrdiff_t>(j);
        if (order == DerivativeOrder::second) {
            d[j] = (at(k + 1) - at(k - 1)) / (2.0 * h);
        } else {
            d[j] = (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h);
        }
    }
    return d;
}

/// Weights of the trapezoid rule with Gregory end corrections on n uniform
/// samples (exact for cubics; falls back to plain trapezoid for n < 5).
inline std::vector<double> radial_weights(std::size_t n, double h) {
    std::vector<double> w(n, h);
    if (n < 2) return std::vector<double>(n, 0.0);
    if (n < 5) {
        w.front() = w.back() = 0.5 * h;
        return w;
    }
    constexpr std::array<double, 3> end{3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
    for (std::size_t k = 0; k < 3; ++k) {
        w[k] = end[k] * h;
        w[n - 1 - k] = end[k] * h;
    }
    return w;
}

/// Integral over [x_0, x_{n-1}] of uniformly spaced samples.
inline double integrate_uniform(std::span<const double> f, double h) {
    auto w = radial_weights(f.size(), h);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
    return s;
}

/// Per-radius angular integrals: int_0^{2pi} field(r_i, theta) dtheta.
inline std::vector<double> angular_integrals(const ScalarField& field) {
    const auto& g = field.grid();
    std::vector<double> out(g.n_r(), 0.0);
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.n_t(); ++j) s += field.at(i, j);
        out[i] = s * g.h_t();
    }
    return out;
}

/// Integral of field against the area element r dr dtheta. Periodic trapezoid
/// in theta, Gregory-corrected trapezoid in r; fixed summation order.
inline double integrate(const ScalarField& field) {
    field.require_finite();
    const auto& g = field.grid();
    auto ring = angular_integrals(field);
    for (std::size_t i = 0; i < g.n_r(); ++i) ring[i] *= g.r(i);
    return integrate_uniform(ring, g.h_r());
}

/// Integral over the sub-annulus a <= r <= r_{i_end}.
inline double integrate_inner(const ScalarField& field, std::size_t i_end) {
    const auto& g = field.grid();
    auto ring = angular_integrals(field);
    for (std::size_t i = 0; i < g.n_r(); ++i) ring[i] *= g.r(i);
    return integrate_uniform(std::span<const double>(ring).first(i_end + 1), g.h_r());
}

struct PolarGradient {
    ScalarField d_r;
    ScalarField d_t;
};

/// d/dr and d/dtheta of a field (the angular derivative is not divided by r).
inline PolarGradient grad_polar(const ScalarField& field, DerivativeOrder order = DerivativeOrder::second) {
    field.require_finite();
    const auto& g = field.grid();
    PolarGradient out{ScalarField(g), ScalarField(g)};
    std::vector<double> line(g.n_r());
    for (std::size_t j = 0; j < g.n_t(); ++j) {
        for (std::size_t i = 0; i < g.n_r(); ++i) line[i] = field.at(i, j);
        auto d = differentiate_uniform(line, g.h_r(), order);
        for (std::size_t i = 0; i < g.n_r(); ++i) out.d_r.at(i, j) = d[i];
    }
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        auto row = field.values().subspan(g.index(i, 0), g.n_t());
        auto d = differentiate_periodic(row, g.h_t(), order);
        for (std::size_t j = 0; j < g.n_t(); ++j) out.d_t.at(i, j) = d[j];
    }
    return out;
}

/// Bilinear interpolation in (r, theta) between the four surrounding nodes;
/// theta is taken modulo 2pi. Radii outside [a, b] raise RangeError unless
/// they are within slack of the boundary, in which case they are clamped.
inline double interpolate(const ScalarField& field, double r, double theta, double slack = 1e-9) {
    const auto& g = field.grid();
    if (!(r >= g.a() - slack && r <= g.b() + slack)) {
        throw RangeError("radius " + format_double(r) + " outside annulus [" + format_double(g.a()) + ", " +
                         format_double(g.b()) + "]");
    }
    r = std::clamp(r, g.a(), g.b());
    double s = (r - g.a()) / g.h_r();
    auto i = static_cast<std::size_t>(std::floor(s));
    if (i + 1 >= g.n_r()) i = g.n_r() - 2;
    double fr = s - static_cast<double>(i);
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    double q = t / g.h_t();
    auto j = static_cast<std::size_t>(std::floor(q));
    double ft = q - static_cast<double>(j);
    if (j >= g.n_t()) {
        j = g.n_t() - 1;
        ft = 1.0;
    }
    std::size_t jp = g.wrap(static_cast<std::ptrdiff_t>(j) + 1);
    double v00 = field.at(i, j);
    double v10 = field.at(i + 1, j);
    double v01 = field.at(i, jp);
    double v11 = field.at(i + 1, jp);
    return (1.0 - fr) * ((1.0 - ft) * v00 + ft * v01) + fr * ((1.0 - ft) * v10 + ft * v11);
}

/// Total length of the polyline {field = t} extracted by marching squares on
/// the polar cells mapped to Cartesian quadrilaterals.
inline double level_set_length(const ScalarField& field, double t) {
    field.require_finite();
    const double lo = field.min();
    const double hi = field.max();
    if (!(t >= lo && t <= hi)) {
        throw EmptyContourError("level " + format_double(t) + " outside field range [" + format_double(lo) + ", " +
                                format_double(hi) + "]");
    }
    const auto& g = field.grid();
    // At the top of the range the level set sits on max-valued nodes, which are
    // then counted as "above"; everywhere else nodes equal to t count as below.
    const bool at_max = (t == hi);
    auto above = [&](double v) { return at_max ? v >= t : v > t; };

    double length = 0.0;
    for (std::size_t i = 0; i + 1 < g.n_r(); ++i) {
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            const std::size_t jp = g.wrap(static_cast<std::ptrdiff_t>(j) + 1);
            const std::array<std::size_t, 4> ci{i, i + 1, i + 1, i};
            const std::array<std::size_t, 4> cj{j, j, jp, jp};
            std::array<double, 4> v{};
            std::array<double, 4> px{};
            std::array<double, 4> py{};
            std::array<bool, 4> up{};
            for (int c = 0; c < 4; ++c) {
                v[c] = field.at(ci[c], cj[c]);
                px[c] = g.x(ci[c], cj[c]);
                py[c] = g.y(ci[c], cj[c]);
                up[c] = above(v[c]);
            }
            std::array<std::array<double, 2>, 4> cross{};
            std::array<bool, 4> has{};
            int count = 0;
            for (int e = 0; e < 4; ++e) {
                int p = e;
                int q = (e + 1) % 4;
                if (up[p] != up[q]) {
                    double s = (t - v[p]) / (v[q] - v[p]);
                    cross[e] = {px[p] + s * (px[q] - px[p]), py[p] + s * (py[q] - py[p])};
                    has[e] = true;
                    ++count;
                }
            }
            auto seg = [&](int e0, int e1) {
                return std::hypot(cross[e0][0] - cross[e1][0], cross[e0][1] - cross[e1][1]);
            };
            if (count == 2) {
                int e0 = -1;
                int e1 = -1;
                for (int e = 0; e < 4; ++e) {
                    if (has[e]) (e0 < 0 ? e0 : e1) = e;
                }
                length += seg(e0, e1);
            } else if (count == 4) {
                const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                if (above(centre) == up[0]) {
                    length += seg(0, 1) + seg(2, 3);
                } else {
                    length += seg(3, 0) + seg(1, 2);
                }
            }
        }
    }
    return length;
}

// ---------------------------------------------------------------------------
// Serialisation

inline std::string grid_header(const AnnulusGrid& g) {
    return "# a=" + format_double(g.a()) + " b=" + format_double(g.b()) + " n_r=" + std::to_string(g.n_r()) +
           " n_t=" + std::to_string(g.n_t());
}

/// Parses "key=value" tokens from a '#' header line.
inline std::vector<std::pair<std::string, std::string>> parse_header(const std::string& line) {
    if (line.empty() || line[0] != '#') throw IoError("missing '#' header line");
    std::istringstream in(line.substr(1));
    std::vector<std::pair<std::string, std::string>> out;
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError("malformed header token '" + tok + "'");
        out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return out;
}

inline std::string header_value(const std::vector<std::pair<std::string, std::string>>& kv, const std::string& key) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    throw IoError("header is missing '" + key + "'");
}

inline AnnulusGrid grid_from_header(const std::string& line) {
    auto kv = parse_header(line);
    return AnnulusGrid(parse_double(header_value(kv, "a")), parse_double(header_value(kv, "b")),
                       static_cast<std::size_t>(std::stoull(header_value(kv, "n_r"))),
                       static_cast<std::size_t>(std::stoull(header_value(kv, "n_t"))));
}

/// Splits a CSV line on commas.
inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Writes a multi-column nodal CSV: header, then rows "i,j,v0[,v1...]".
inline void write_fields_csv(std::ostream& out, std::span<const ScalarField* const> fields) {
    if (fields.empty()) throw InvalidArgument("no fields to write");
    const auto& g = fields.front()->grid();
    out << grid_header(g) << '\n';
    for (std::size_t i = 0; i < g.n_r(); ++i) {
        for (std::size_t j = 0; j < g.n_t(); ++j) {
            out << i << ',' << j;
            for (const auto* f : fields) out << ',' << format_double(f->at(i, j));
            out << '\n';
        }
    }
}

inline std::vector<ScalarField> read_fields_csv(std::istream& in, std::size_t columns) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty field file");
    AnnulusGrid g = grid_from_header(line);
    std::vector<ScalarField> fields(columns, ScalarField(g));
    std::vector<bool> seen(g.size(), false);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cols = split_csv(line);
        if (cols.size() != 2 + columns) throw IoError("expected " + std::to_string(2 + columns) + " columns: " + line);
        auto i = static_cast<std::size_t>(parse_double(cols[0]));
        auto j = static_cast<std::size_t>(parse_double(cols[1]));
        if (i >= g.n_r() || j >= g.n_t()) throw IoError("node index out of range: " + line);
        for (std::size_t c = 0; c < columns; ++c) fields[c].at(i, j) = parse_double(cols[2 + c]);
        seen[g.index(i, j)] = true;
        ++rows;
    }
    if (rows != g.size() || std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw IoError("field file does not cover every node exactly once");
    }
    return fields;
}

inline void write_field_csv(std::ostream& out, const ScalarField& f) {
    const ScalarField* p = &f;
    write_fields_csv(out, std::span<const ScalarField* const>(&p, 1));
}

inline ScalarField read_field_csv(std::istream& in) { return std::move(read_fields_csv(in, 1).front()); }

namespace detail {
inline constexpr std::array<char, 8> field_magic{'T', 'W', 'L', 'F', 'I', 'E', 'L', 'D'};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated binary field");
    return v;
}
} // namespace detail

/// Raw little-endian dump: magic, a, b, n_r, n_t, values.
inline void write_field_binary(std::ostream& out, const ScalarField& f) {
    out.write(detail::field_magic.data(), detail::field_magic.size());
    detail::put(out, f.grid().a());
    detail::put(out, f.grid().b());
    detail::put(out, static_cast<std::uint64_t>(f.grid().n_r()));
    detail::put(out, static_cast<std::uint64_t>(f.grid().n_t()));
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(f.values().size() * sizeof(double)));
}

inline ScalarField read_field_binary(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != detail::field_magic) throw IoError("not a binary field dump");
    double a = detail::get<double>(in);
    double b = detail::get<double>(in);
    auto n_r = detail::get<std::uint64_t>(in);
    auto n_t = detail::get<std::uint64_t>(in);
    AnnulusGrid g(a, b, n_r, n_t);
    std::vector<double> values(g.size());
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw IoError("truncated binary field");
    return ScalarField(g, std::move(values));
}

} // namespace twistlab
