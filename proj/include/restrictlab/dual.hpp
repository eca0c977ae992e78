#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "restrictlab/jet.hpp"

namespace restrictlab {

/// Forward-mode dual number with N independent infinitesimals over the
/// scalar T. Nesting (Dual<Dual<double, 4>, 4>) yields second derivatives;
/// Dual<Jet, 4> yields gradients along a Taylor series.
template <typename T, int N>
struct Dual {
    T v{};
    std::array<T, N> d{};

    Dual() : v(0.0) { d.fill(T(0.0)); }
    Dual(double value) : v(value) { d.fill(T(0.0)); }  // NOLINT(google-explicit-constructor)
    Dual(const T& value, const std::array<T, N>& partials) : v(value), d(partials) {}

    static Dual seeded(const T& value, int index) {
        Dual r;
        r.v = value;
        r.d[static_cast<std::size_t>(index)] = T(1.0);
        return r;
    }

    Dual operator-() const {
        Dual r;
        r.v = -v;
        for (int i = 0; i < N; ++i) r.d[i] = -d[i];
        return r;
    }
    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (int i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (int i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v * b.v;
        for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
        return r;
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v / b.v;
        for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) / b.v;
        return r;
    }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }
};

template <typename T, int N>
Dual<T, N> sin(const Dual<T, N>& x) {
    using std::cos;
    using std::sin;
    Dual<T, N> r;
    r.v = sin(x.v);
    const T c = cos(x.v);
    for (int i = 0; i < N; ++i) r.d[i] = c * x.d[i];
    return r;
}

template <typename T, int N>
Dual<T, N> cos(const Dual<T, N>& x) {
    using std::cos;
    using std::sin;
    Dual<T, N> r;
    r.v = cos(x.v);
    const T s = -sin(x.v);
    for (int i = 0; i < N; ++i) r.d[i] = s * x.d[i];
    return r;
}

/// Nested dual number with k nilpotent generators e_1..e_k (e_i^2 = 0),
/// i.e. k levels of Dual<...> flattened into 2^k coefficients indexed by
/// subset bitmask. Seeding generator i on variable a_i makes the
/// coefficient of the full mask equal to the mixed partial
/// d^k f / (da_1 ... da_k); repeated variables give higher-order
/// derivatives.
class HyperDual {
public:
    HyperDual() : k_(0), c_(1, 0.0) {}
    HyperDual(double value) : k_(0), c_(1, value) {}  // NOLINT(google-explicit-constructor)
    HyperDual(double value, int generators) : k_(generators), c_(std::size_t{1} << generators, 0.0) {
        c_[0] = value;
    }

    int generators() const { return k_; }
    std::size_t size() const { return c_.size(); }
    double value() const { return c_[0]; }
    double coeff(std::size_t mask) const { return c_[mask]; }
    double& coeff(std::size_t mask) { return c_[mask]; }
    double top() const { return c_.back(); }

    HyperDual operator-() const {
        HyperDual r = *this;
        for (auto& x : r.c_) x = -x;
        return r;
    }
    friend HyperDual operator+(const HyperDual& a, const HyperDual& b) {
        HyperDual r = a.broadcast(b.k_);
        const HyperDual bb = b.broadcast(a.k_);
        for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += bb.c_[i];
        return r;
    }
    friend HyperDual operator-(const HyperDual& a, const HyperDual& b) { return a + (-b); }
    friend HyperDual operator*(const HyperDual& a, const HyperDual& b) {
        if (a.k_ == 0) return b.scaled(a.c_[0]);
        if (b.k_ == 0) return a.scaled(b.c_[0]);
        const HyperDual aa = a.broadcast(b.k_);
        const HyperDual bb = b.broadcast(a.k_);
        HyperDual r(0.0, aa.k_);
        const std::size_t n = r.c_.size();
        for (std::size_t s = 0; s < n; ++s) {
            // subset convolution: sum over sub-masks of s
            double acc = 0.0;
            for (std::size_t sub = s;; sub = (sub - 1) & s) {
                acc += aa.c_[sub] * bb.c_[s ^ sub];
                if (sub == 0) break;
            }
            r.c_[s] = acc;
        }
        return r;
    }
    friend HyperDual operator/(const HyperDual& a, const HyperDual& b) {
        if (b.k_ == 0) return a.scaled(1.0 / b.c_[0]);
        // 1/(b0 + n) = sum_j (-1)^j n^j / b0^(j+1)
        std::vector<double> derivs(static_cast<std::size_t>(b.k_) + 1);
        double p = 1.0 / b.c_[0];
        for (std::size_t j = 0; j < derivs.size(); ++j) {
            derivs[j] = p;  // already divided by j!: series coefficient
            p *= -1.0 / b.c_[0];
        }
        return a * b.apply_series(derivs);
    }
    HyperDual& operator+=(const HyperDual& o) { return *this = *this + o; }
    HyperDual& operator-=(const HyperDual& o) { return *this = *this - o; }
    HyperDual& operator*=(const HyperDual& o) { return *this = *this * o; }
    HyperDual& operator/=(const HyperDual& o) { return *this = *this / o; }

    /// f(value + n) = sum_j coeffs[j] n^j for a series of f about value.
    HyperDual apply_series(const std::vector<double>& coeffs) const {
        HyperDual nil = *this;
        nil.c_[0] = 0.0;
        HyperDual r(coeffs[0], k_);
        HyperDual power(1.0, k_);
        for (std::size_t j = 1; j < coeffs.size() && j <= static_cast<std::size_t>(k_); ++j) {
            power = power * nil;
            for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += coeffs[j] * power.c_[i];
        }
        return r;
    }

private:
    HyperDual scaled(double s) const {
        HyperDual r = *this;
        for (auto& x : r.c_) x *= s;
        return r;
    }
    HyperDual broadcast(int k) const {
        if (k <= k_) return *this;
        HyperDual r(0.0, k);
        if (k_ == 0) {
            r.c_[0] = c_[0];
            return r;
        }
        return *this;  // mismatched non-scalar generator counts are not mixed
    }

    int k_;
    std::vector<double> c_;
};

inline HyperDual sin(const HyperDual& x) {
    std::vector<double> s(static_cast<std::size_t>(x.generators()) + 1);
    double fact = 1.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (j > 0) fact *= static_cast<double>(j);
        const double phase = x.value() + static_cast<double>(j) * M_PI / 2.0;
        s[j] = std::sin(phase) / fact;
    }
    return x.apply_series(s);
}

inline HyperDual cos(const HyperDual& x) {
    std::vector<double> s(static_cast<std::size_t>(x.generators()) + 1);
    double fact = 1.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (j > 0) fact *= static_cast<double>(j);
        const double phase = x.value() + static_cast<double>(j) * M_PI / 2.0;
        s[j] = std::cos(phase) / fact;
    }
    return x.apply_series(s);
}

/// Integer power by repeated squaring; works for every scalar type above.
template <typename T>
T ipow(const T& base, int n) {
    if (n < 0) return T(1.0) / ipow(base, -n);
    T result(1.0);
    T b = base;
    while (n > 0) {
        if (n & 1) result = result * b;
        n >>= 1;
        if (n) b = b * b;
    }
    return result;
}

}  // namespace restrictlab
