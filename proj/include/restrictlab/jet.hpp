#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>

namespace restrictlab {

/// Truncated univariate Taylor series  c[0] + c[1] e + ... + c[order] e^order.
///
/// Coefficients are Taylor coefficients (derivative / j!), not raw
/// derivatives. Binary operations truncate to the smaller order of the two
/// operands; constants carry the maximal order so they never truncate.
class Jet {
public:
    static constexpr int kMaxOrder = 20;

    Jet() { c_.fill(0.0); }
    Jet(double value) : order_(kMaxOrder) {  // NOLINT(google-explicit-constructor)
        c_.fill(0.0);
        c_[0] = value;
    }
    Jet(double value, int order) : order_(order) {
        c_.fill(0.0);
        c_[0] = value;
    }

    /// The series t0 + e (identity perturbation) of the given order.
    static Jet variable(double t0, int order) {
        Jet j(t0, order);
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }

    int order() const { return order_; }
    void set_order(int order) { order_ = std::min(order, kMaxOrder); truncate_tail(); }
    double& operator[](int j) { return c_[static_cast<std::size_t>(j)]; }
    double operator[](int j) const { return j <= order_ ? c_[static_cast<std::size_t>(j)] : 0.0; }
    double value() const { return c_[0]; }

    /// j-th derivative at the expansion point.
    double derivative(int j) const {
        double f = 1.0;
        for (int i = 2; i <= j; ++i) f *= i;
        return (*this)[j] * f;
    }

    Jet truncated(int order) const {
        Jet r = *this;
        r.order_ = std::min(order_, order);
        r.truncate_tail();
        return r;
    }

    Jet operator-() const {
        Jet r = *this;
        for (int j = 0; j <= order_; ++j) r.c_[j] = -c_[j];
        return r;
    }

    Jet& operator+=(const Jet& o) {
        order_ = std::min(order_, o.order_);
        for (int j = 0; j <= order_; ++j) c_[j] += o.c_[j];
        truncate_tail();
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        order_ = std::min(order_, o.order_);
        for (int j = 0; j <= order_; ++j) c_[j] -= o.c_[j];
        truncate_tail();
        return *this;
    }
    Jet& operator*=(const Jet& o) {
        *this = *this * o;
        return *this;
    }
    Jet& operator/=(const Jet& o) {
        *this = *this / o;
        return *this;
    }
    Jet& operator*=(double s) {
        for (int j = 0; j <= order_; ++j) c_[j] *= s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double b) { a.c_[0] += b; return a; }
    friend Jet operator+(double a, Jet b) { b.c_[0] += a; return b; }
    friend Jet operator-(Jet a, double b) { a.c_[0] -= b; return a; }
    friend Jet operator-(double a, const Jet& b) { Jet r = -b; r.c_[0] += a; return r; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        r.order_ = std::min(a.order_, b.order_);
        for (int k = 0; k <= r.order_; ++k) {
            double s = 0.0;
            for (int i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
            r.c_[k] = s;
        }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) {
        Jet r;
        r.order_ = std::min(a.order_, b.order_);
        for (int k = 0; k <= r.order_; ++k) {
            double s = a.c_[k];
            for (int i = 1; i <= k; ++i) s -= b.c_[i] * r.c_[k - i];
            r.c_[k] = s / b.c_[0];
        }
        return r;
    }
    friend Jet operator/(double a, const Jet& b) { return Jet(a, b.order_) / b; }

    friend std::ostream& operator<<(std::ostream& os, const Jet& j) {
        os << "[";
        for (int k = 0; k <= j.order_; ++k) os << (k ? ", " : "") << j.c_[k];
        return os << "]";
    }

private:
    void truncate_tail() {
        for (int j = order_ + 1; j <= kMaxOrder; ++j) c_[j] = 0.0;
    }

    std::array<double, kMaxOrder + 1> c_{};
    int order_ = kMaxOrder;
};

inline Jet sin(const Jet& x);
inline Jet cos(const Jet& x);

namespace detail {
// Simultaneous sin/cos series by the coupled recurrences s' = c x', c' = -s x'.
inline void sincos_series(const Jet& x, Jet& s, Jet& c) {
    const int n = x.order();
    s = Jet(std::sin(x[0]), n);
    c = Jet(std::cos(x[0]), n);
    for (int k = 1; k <= n; ++k) {
        double ss = 0.0, cc = 0.0;
        for (int i = 1; i <= k; ++i) {
            ss += i * x[i] * c[k - i];
            cc -= i * x[i] * s[k - i];
        }
        s[k] = ss / k;
        c[k] = cc / k;
    }
}
}  // namespace detail

inline Jet sin(const Jet& x) {
    Jet s, c;
    detail::sincos_series(x, s, c);
    return s;
}
inline Jet cos(const Jet& x) {
    Jet s, c;
    detail::sincos_series(x, s, c);
    return c;
}

inline Jet exp(const Jet& x) {
    const int n = x.order();
    Jet e(std::exp(x[0]), n);
    for (int k = 1; k <= n; ++k) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i) s += i * x[i] * e[k - i];
        e[k] = s / k;
    }
    return e;
}

inline Jet sqrt(const Jet& x) {
    const int n = x.order();
    Jet r(std::sqrt(x[0]), n);
    for (int k = 1; k <= n; ++k) {
        double s = x[k];
        for (int i = 1; i < k; ++i) s -= r[i] * r[k - i];
        r[k] = s / (2.0 * r[0]);
    }
    return r;
}

/// Composition f(g(e)) where f is a series in d and g(0) = 0 is ignored
/// (only g's non-constant part is substituted).
inline Jet compose(const Jet& f, const Jet& g) {
    Jet inner = g;
    inner[0] = 0.0;
    const int n = std::min(f.order(), g.order());
    Jet r(f[n], n);
    for (int k = n - 1; k >= 0; --k) r = r * inner + f[k];
    return r.truncated(n);
}

/// Series of the derivative d/de.
inline Jet differentiate(const Jet& f) {
    const int n = std::max(f.order() - 1, 0);
    Jet r(0.0, n);
    for (int k = 0; k <= n; ++k) r[k] = (k + 1) * f[k + 1];
    return r;
}

}  // namespace restrictlab
