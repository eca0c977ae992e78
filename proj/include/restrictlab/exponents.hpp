#pragma once

#include <map>
#include <string>

#include <gmpxx.h>

namespace restrictlab {

using Rational = mpq_class;

/// Lebesgue exponent q in [2, inf].
struct ExponentQ {
    Rational value{2};
    bool infinite = false;

    static ExponentQ inf() { return {Rational(0), true}; }
    static ExponentQ parse(const std::string& text);  // "2", "7/2", "inf"
    std::string to_string() const;
    double to_double() const;
};

/// Contact order: positive integer or infinity; values <= 0 mean a
/// transverse curve.
struct ContactSigma {
    long value = 1;
    bool infinite = false;

    static ContactSigma inf() { return {0, true}; }
    static ContactSigma parse(const std::string& text);  // "3", "inf"
    std::string to_string() const;
};

struct RhoValue {
    Rational value;
    bool transverse_fallback = false;  // sigma <= 0: transverse baseline returned
    bool infinite_caveat = false;      // sigma = inf: lower bound only up to lambda^eps
    bool outside_theorem_range = false;  // q outside [2, 4]
};

/// rho(q, sigma) = (1 + sigma - 2/q) / (2 (2 sigma + 1)), 1/4 for sigma = inf.
RhoValue rho_exponent(const ExponentQ& q, const ContactSigma& sigma);
Rational rho(const ExponentQ& q, const ContactSigma& sigma);
inline Rational rho(const Rational& q, long sigma) { return rho(ExponentQ{q, false}, ContactSigma{sigma, false}); }

/// Baseline exponents of lambda in dimension 2: bgt_low, bgt_high (branch
/// point q = 4), bgt_curved, tacy_flat, tacy_transverse.
std::map<std::string, Rational> baselines(const ExponentQ& q);

/// -1 + 1/q + 2 rho(q, sigma).
Rational hermite_exponent(const ExponentQ& q, const ContactSigma& sigma);

struct ExponentPrediction {
    ExponentQ q;
    ContactSigma sigma;
    RhoValue rho;
    std::map<std::string, Rational> baselines;  // includes "hermite"
};

ExponentPrediction predict(const ExponentQ& q, const ContactSigma& sigma);

std::string rational_string(const Rational& r);
double rational_double(const Rational& r);

}  // namespace restrictlab
