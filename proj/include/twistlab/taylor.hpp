#pragma once

// Second-order forward-mode Taylor numbers and a small dense matrix
// exponential over any scalar type.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace twistlab {

/// f(s) = v + d s + dd s^2 / 2 near s = 0; dd is the second derivative.
struct Taylor2 {
    double v = 0.0;
    double d = 0.0;
    double dd = 0.0;

    Taylor2() = default;
    Taylor2(double value) : v(value) {} // NOLINT(google-explicit-constructor)
    Taylor2(double value, double d1, double d2) : v(value), d(d1), dd(d2) {}

    static Taylor2 variable(double value) { return {value, 1.0, 0.0}; }

    Taylor2& operator+=(const Taylor2& o) {
        v += o.v;
        d += o.d;
        dd += o.dd;
        return *this;
    }
    Taylor2& operator-=(const Taylor2& o) {
        v -= o.v;
        d -= o.d;
        dd -= o.dd;
        return *this;
    }
    Taylor2& operator*=(const Taylor2& o) {
        *this = Taylor2{v * o.v, d * o.v + v * o.d, dd * o.v + 2.0 * d * o.d + v * o.dd};
        return *this;
    }
    Taylor2& operator/=(const Taylor2& o) {
        const double q = v / o.v;
        const double qd = (d - q * o.d) / o.v;
        const double qdd = (dd - 2.0 * qd * o.d - q * o.dd) / o.v;
        *this = Taylor2{q, qd, qdd};
        return *this;
    }
};

inline Taylor2 operator+(Taylor2 a, const Taylor2& b) { return a += b; }
inline Taylor2 operator-(Taylor2 a, const Taylor2& b) { return a -= b; }
inline Taylor2 operator*(Taylor2 a, const Taylor2& b) { return a *= b; }
inline Taylor2 operator/(Taylor2 a, const Taylor2& b) { return a /= b; }
inline Taylor2 operator-(const Taylor2& a) { return {-a.v, -a.d, -a.dd}; }

/// Chain rule for a scalar function with known f, f', f''.
inline Taylor2 apply(const Taylor2& x, double f, double f1, double f2) {
    return {f, f1 * x.d, f2 * x.d * x.d + f1 * x.dd};
}

inline Taylor2 sqrt(const Taylor2& x) {
    const double s = std::sqrt(x.v);
    return apply(x, s, 0.5 / s, -0.25 / (s * x.v));
}
inline Taylor2 log(const Taylor2& x) { return apply(x, std::log(x.v), 1.0 / x.v, -1.0 / (x.v * x.v)); }
inline Taylor2 pow(const Taylor2& x, double p) {
    return apply(x, std::pow(x.v, p), p * std::pow(x.v, p - 1.0), p * (p - 1.0) * std::pow(x.v, p - 2.0));
}
inline double value_of(double x) { return x; }
inline double value_of(const Taylor2& x) { return x.v; }

/// Row-major square matrix over T.
template <class T>
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<T> e;

    explicit SquareMatrix(std::size_t size) : n(size), e(size * size, T(0.0)) {}
    static SquareMatrix identity(std::size_t size) {
        SquareMatrix m(size);
        for (std::size_t i = 0; i < size; ++i) m(i, i) = T(1.0);
        return m;
    }
    T& operator()(std::size_t i, std::size_t j) { return e[i * n + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return e[i * n + j]; }

    SquareMatrix operator*(const SquareMatrix& o) const {
        SquareMatrix out(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const T& a = (*this)(i, k);
                for (std::size_t j = 0; j < n; ++j) out(i, j) += a * o(k, j);
            }
        return out;
    }
    SquareMatrix& operator+=(const SquareMatrix& o) {
        for (std::size_t i = 0; i < e.size(); ++i) e[i] += o.e[i];
        return *this;
    }
    SquareMatrix scaled(const T& s) const {
        SquareMatrix out = *this;
        for (auto& x : out.e) x *= s;
        return out;
    }
};

/// exp(M) by scaling and squaring with a truncated Taylor series.
template <class T>
SquareMatrix<T> expm(const SquareMatrix<T>& M) {
    double norm = 0.0;
    for (std::size_t i = 0; i < M.n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < M.n; ++j) row += std::abs(value_of(M(i, j)));
        norm = std::max(norm, row);
    }
    int squarings = 0;
    while (norm > 0.25) {
        norm *= 0.5;
        ++squarings;
    }
    const T scale = T(std::ldexp(1.0, -squarings));
    SquareMatrix<T> X = M.scaled(scale);
    SquareMatrix<T> result = SquareMatrix<T>::identity(M.n);
    SquareMatrix<T> term = SquareMatrix<T>::identity(M.n);
    for (int k = 1; k <= 20; ++k) {
        term = (term * X).scaled(T(1.0 / k));
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

} // namespace twistlab
