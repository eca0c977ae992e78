#include "restrictlab/exponents.hpp"

#include <cmath>
#include <limits>

#include "restrictlab/errors.hpp"

namespace restrictlab {

namespace {

Rational inverse(const ExponentQ& q) { return q.infinite ? Rational(0) : Rational(1) / q.value; }

void check_q(const ExponentQ& q) {
    if (!q.infinite && q.value < 2) throw DomainError("exponent q must be >= 2, got " + q.to_string());
}

}  // namespace

ExponentQ ExponentQ::parse(const std::string& text) {
    if (text == "inf" || text == "infinity") return inf();
    ExponentQ q;
    try {
        q.value = Rational(text);
    } catch (const std::invalid_argument&) {
        throw ParseError("bad exponent q '" + text + "'");
    }
    q.value.canonicalize();
    return q;
}

std::string ExponentQ::to_string() const { return infinite ? "inf" : rational_string(value); }

double ExponentQ::to_double() const { return infinite ? std::numeric_limits<double>::infinity() : value.get_d(); }

ContactSigma ContactSigma::parse(const std::string& text) {
    if (text == "inf" || text == "infinity") return inf();
    try {
        std::size_t pos = 0;
        const long v = std::stol(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return {v, false};
    } catch (const std::exception&) {
        throw ParseError("bad contact order '" + text + "'");
    }
}

std::string ContactSigma::to_string() const { return infinite ? "inf" : std::to_string(value); }

RhoValue rho_exponent(const ExponentQ& q, const ContactSigma& sigma) {
    check_q(q);
    RhoValue r;
    r.outside_theorem_range = q.infinite || q.value > 4;
    if (sigma.infinite) {
        r.value = Rational(1, 4);
        r.infinite_caveat = true;
    } else if (sigma.value <= 0) {
        r.value = baselines(q).at("tacy_transverse");
        r.transverse_fallback = true;
    } else {
        const Rational s(sigma.value);
        r.value = (1 + s - 2 * inverse(q)) / (2 * (2 * s + 1));
    }
    r.value.canonicalize();
    return r;
}

Rational rho(const ExponentQ& q, const ContactSigma& sigma) { return rho_exponent(q, sigma).value; }

std::map<std::string, Rational> baselines(const ExponentQ& q) {
    check_q(q);
    const Rational iq = inverse(q);
    const bool low = !q.infinite && q.value <= 4;
    std::map<std::string, Rational> b;
    // d = 2: (d-1)/4 - (d-2)/(2q) and (d-1)/2 - (d-1)/q
    b["bgt_low"] = Rational(1, 4);
    b["bgt_high"] = Rational(1, 2) - iq;
    b["bgt_curved"] = Rational(1, 3) - iq / 3;
    b["tacy_flat"] = low ? Rational(1, 4) : Rational(Rational(1, 2) - iq);
    b["tacy_transverse"] = Rational(1, 2) - iq;
    for (auto& [k, v] : b) v.canonicalize();
    return b;
}

Rational hermite_exponent(const ExponentQ& q, const ContactSigma& sigma) {
    Rational r = -1 + inverse(q) + 2 * rho(q, sigma);
    r.canonicalize();
    return r;
}

ExponentPrediction predict(const ExponentQ& q, const ContactSigma& sigma) {
    ExponentPrediction p;
    p.q = q;
    p.sigma = sigma;
    p.rho = rho_exponent(q, sigma);
    p.baselines = baselines(q);
    p.baselines["hermite"] = hermite_exponent(q, sigma);
    return p;
}

std::string rational_string(const Rational& r) {
    Rational c = r;
    c.canonicalize();
    return c.get_str();
}

double rational_double(const Rational& r) { return r.get_d(); }

}  // namespace restrictlab
