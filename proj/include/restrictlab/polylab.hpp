#pragma once

#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

namespace restrictlab {

using Rational = mpq_class;

/// Dense polynomial over Q, ascending coefficients, no trailing zeros
/// (the zero polynomial has no coefficients and degree -1).
class RationalPolynomial {
public:
    RationalPolynomial() = default;
    explicit RationalPolynomial(std::vector<Rational> coeffs);
    static RationalPolynomial monomial(const Rational& c, int degree);

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    const std::vector<Rational>& coeffs() const { return c_; }
    Rational coeff(int k) const;
    Rational leading() const { return c_.empty() ? Rational(0) : c_.back(); }

    Rational operator()(const Rational& x) const;
    double operator()(double x) const;

    RationalPolynomial derivative() const;
    /// p(a x + b)
    RationalPolynomial affine_substitute(const Rational& a, const Rational& b) const;

    friend RationalPolynomial operator+(const RationalPolynomial& a, const RationalPolynomial& b);
    friend RationalPolynomial operator-(const RationalPolynomial& a, const RationalPolynomial& b);
    friend RationalPolynomial operator*(const RationalPolynomial& a, const RationalPolynomial& b);
    friend RationalPolynomial operator*(const Rational& s, const RationalPolynomial& p);
    friend bool operator==(const RationalPolynomial& a, const RationalPolynomial& b) { return a.c_ == b.c_; }

    /// Euclidean division: a = q b + r.
    static void divide(const RationalPolynomial& a, const RationalPolynomial& b, RationalPolynomial& q,
                       RationalPolynomial& r);

    std::string to_string() const;

private:
    void trim();
    std::vector<Rational> c_;
};

/// (1 + tau)^n expanded.
RationalPolynomial one_plus_tau_pow(int n);

/// Sum form and closed form of P_sigma(u, v).
Rational p_sigma_sum(int sigma, const Rational& u, const Rational& v);
Rational p_sigma_closed(int sigma, const Rational& u, const Rational& v);
/// Both paths; throws an internal Error when they disagree.
Rational p_sigma(int sigma, const Rational& u, const Rational& v);

/// wp_{sigma,1}, wp_{sigma,2} (branch 1 or 2).
RationalPolynomial wp(int sigma, int branch);
/// (1 + tau) wp_{sigma-1,i}.
RationalPolynomial wp_tilde(int sigma, int branch);

struct RealRoot {
    Rational lo;  // isolating interval [lo, hi], width <= 2^-45 after refinement
    Rational hi;
    double value = 0.0;
};

/// Sturm-sequence isolation and exact bisection refinement.
std::vector<RealRoot> real_roots(const RationalPolynomial& p, double width = 1e-12);
/// Number of distinct real roots by the Sturm sequence.
int sturm_root_count(const RationalPolynomial& p);

std::vector<RealRoot> wp_real_roots(int sigma, int branch);

struct PolyCheck {
    bool pass = true;
    std::vector<std::string> failures;
    void fail(const std::string& what) {
        pass = false;
        failures.push_back(what);
    }
};

/// Reflection and derivative identities for sigma = 2..sigma_max, the
/// factorization of wp~ and the chain-rule identity at random rationals.
PolyCheck check_wp_identities(int sigma_max, unsigned seed = 1);

struct CriticalValueCheck {
    int sigma = 0;
    std::vector<double> critical_points;
    std::vector<double> relative_errors;
    bool exact_divisibility = false;
    bool pass = true;
};

/// At every real root tau of wp'_{sigma,1}: wp_{sigma,1}(tau) =
/// sigma / (sigma+1)! tau^(sigma-1), checked to 1e-10 relative at the
/// refined roots and exactly by polynomial division.
CriticalValueCheck check_critical_values(int sigma);

/// Full report for sigma = 1..sigma_max (identities, root structure and
/// ordering, critical values, wp~ zero sets, sigma = 2 exact roots).
nlohmann::json polylab_report(int sigma_max, bool& all_pass);

}  // namespace restrictlab
