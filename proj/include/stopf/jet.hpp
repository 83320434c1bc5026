#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace stopf {

/// Second-order forward-mode value over N local variables: value, gradient and full
/// (symmetric) Hessian. Used to evaluate the small closed-form constraint terms exactly.
template <std::size_t N>
struct Jet {
    double v = 0.0;
    std::array<double, N> g{};
    std::array<double, N * N> h{};

    static Jet constant(double value) {
        Jet j;
        j.v = value;
        return j;
    }

    static Jet variable(double value, std::size_t slot) {
        Jet j;
        j.v = value;
        j.g[slot] = 1.0;
        return j;
    }

    double hess(std::size_t a, std::size_t b) const { return h[a * N + b]; }
};

template <std::size_t N>
Jet<N> operator+(const Jet<N>& a, const Jet<N>& b) {
    Jet<N> r;
    r.v = a.v + b.v;
    for (std::size_t i = 0; i < N; ++i) r.g[i] = a.g[i] + b.g[i];
    for (std::size_t i = 0; i < N * N; ++i) r.h[i] = a.h[i] + b.h[i];
    return r;
}

template <std::size_t N>
Jet<N> operator-(const Jet<N>& a, const Jet<N>& b) {
    Jet<N> r;
    r.v = a.v - b.v;
    for (std::size_t i = 0; i < N; ++i) r.g[i] = a.g[i] - b.g[i];
    for (std::size_t i = 0; i < N * N; ++i) r.h[i] = a.h[i] - b.h[i];
    return r;
}

template <std::size_t N>
Jet<N> operator*(double s, const Jet<N>& a) {
    Jet<N> r;
    r.v = s * a.v;
    for (std::size_t i = 0; i < N; ++i) r.g[i] = s * a.g[i];
    for (std::size_t i = 0; i < N * N; ++i) r.h[i] = s * a.h[i];
    return r;
}

template <std::size_t N>
Jet<N> operator*(const Jet<N>& a, double s) {
    return s * a;
}

template <std::size_t N>
Jet<N> operator+(const Jet<N>& a, double s) {
    Jet<N> r = a;
    r.v += s;
    return r;
}

template <std::size_t N>
Jet<N> operator-(const Jet<N>& a) {
    return -1.0 * a;
}

template <std::size_t N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
    Jet<N> r;
    r.v = a.v * b.v;
    for (std::size_t i = 0; i < N; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            r.h[i * N + j] = a.h[i * N + j] * b.v + a.v * b.h[i * N + j] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
        }
    }
    return r;
}

/// Applies a scalar function with derivatives (f0, f1, f2) at a.v via the chain rule.
template <std::size_t N>
Jet<N> chain(const Jet<N>& a, double f0, double f1, double f2) {
    Jet<N> r;
    r.v = f0;
    for (std::size_t i = 0; i < N; ++i) r.g[i] = f1 * a.g[i];
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) r.h[i * N + j] = f1 * a.h[i * N + j] + f2 * a.g[i] * a.g[j];
    }
    return r;
}

template <std::size_t N>
Jet<N> sin(const Jet<N>& a) {
    double s = std::sin(a.v), c = std::cos(a.v);
    return chain(a, s, c, -s);
}

template <std::size_t N>
Jet<N> cos(const Jet<N>& a) {
    double s = std::sin(a.v), c = std::cos(a.v);
    return chain(a, c, -s, -c);
}

template <std::size_t N>
Jet<N> square(const Jet<N>& a) {
    return chain(a, a.v * a.v, 2.0 * a.v, 2.0);
}

/// a^e for a constant exponent; first and second derivatives e a^(e-1), e (e-1) a^(e-2).
template <std::size_t N>
Jet<N> pow(const Jet<N>& a, double e) {
    if (e == 0.0) return Jet<N>::constant(1.0);
    double f0 = std::pow(a.v, e);
    double f1 = e * std::pow(a.v, e - 1.0);
    double f2 = (e == 1.0) ? 0.0 : e * (e - 1.0) * std::pow(a.v, e - 2.0);
    return chain(a, f0, f1, f2);
}

}  // namespace stopf
