#include "restrictlab/polylab.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "restrictlab/errors.hpp"

namespace restrictlab {

namespace {

Rational factorial(int n) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n));
    return Rational(f);
}

Rational binomial(int n, int k) {
    mpz_class b;
    mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return Rational(b);
}

Rational rpow(const Rational& x, int n) {
    Rational r(1);
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

int sign_of(const Rational& x) { return sgn(x); }

mpz_class floor_of(const Rational& x) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return f;
}

// Rational with the smallest denominator in [a, b], a <= b (continued fractions).
Rational simplest_between(const Rational& a, const Rational& b) {
    if (a <= 0 && b >= 0) return Rational(0);
    if (b < 0) return -simplest_between(-b, -a);
    const mpz_class fa = floor_of(a);
    if (Rational(fa) == a) return a;
    if (Rational(fa + 1) <= b) return Rational(fa + 1);
    const Rational n(fa);
    Rational r = n + 1 / simplest_between(1 / (b - n), 1 / (a - n));
    r.canonicalize();
    return r;
}

}  // namespace

RationalPolynomial::RationalPolynomial(std::vector<Rational> coeffs) : c_(std::move(coeffs)) {
    for (auto& c : c_) c.canonicalize();
    trim();
}

RationalPolynomial RationalPolynomial::monomial(const Rational& c, int degree) {
    std::vector<Rational> v(static_cast<std::size_t>(degree) + 1, Rational(0));
    v.back() = c;
    return RationalPolynomial(std::move(v));
}

void RationalPolynomial::trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

Rational RationalPolynomial::coeff(int k) const {
    return k >= 0 && k < static_cast<int>(c_.size()) ? c_[static_cast<std::size_t>(k)] : Rational(0);
}

Rational RationalPolynomial::operator()(const Rational& x) const {
    Rational r(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + *it;
    return r;
}

double RationalPolynomial::operator()(double x) const {
    double r = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + it->get_d();
    return r;
}

RationalPolynomial RationalPolynomial::derivative() const {
    std::vector<Rational> d;
    for (std::size_t k = 1; k < c_.size(); ++k) d.push_back(c_[k] * static_cast<long>(k));
    return RationalPolynomial(std::move(d));
}

RationalPolynomial RationalPolynomial::affine_substitute(const Rational& a, const Rational& b) const {
    // Horner in polynomial arithmetic
    const RationalPolynomial lin({b, a});
    RationalPolynomial r;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * lin + RationalPolynomial({*it});
    return r;
}

RationalPolynomial operator+(const RationalPolynomial& a, const RationalPolynomial& b) {
    std::vector<Rational> c(std::max(a.c_.size(), b.c_.size()), Rational(0));
    for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
    for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] += b.c_[k];
    return RationalPolynomial(std::move(c));
}

RationalPolynomial operator-(const RationalPolynomial& a, const RationalPolynomial& b) {
    return a + Rational(-1) * b;
}

RationalPolynomial operator*(const RationalPolynomial& a, const RationalPolynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> c(a.c_.size() + b.c_.size() - 1, Rational(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return RationalPolynomial(std::move(c));
}

RationalPolynomial operator*(const Rational& s, const RationalPolynomial& p) {
    std::vector<Rational> c = p.c_;
    for (auto& x : c) x *= s;
    return RationalPolynomial(std::move(c));
}

void RationalPolynomial::divide(const RationalPolynomial& a, const RationalPolynomial& b, RationalPolynomial& q,
                                RationalPolynomial& r) {
    if (b.is_zero()) throw DomainError("polynomial division by zero");
    std::vector<Rational> rem = a.c_;
    const int db = b.degree();
    std::vector<Rational> quo(a.degree() >= db ? static_cast<std::size_t>(a.degree() - db + 1) : 0, Rational(0));
    for (int k = a.degree(); k >= db; --k) {
        const Rational f = rem[static_cast<std::size_t>(k)] / b.leading();
        quo[static_cast<std::size_t>(k - db)] = f;
        if (f == 0) continue;
        for (int j = 0; j <= db; ++j) rem[static_cast<std::size_t>(k - db + j)] -= f * b.c_[static_cast<std::size_t>(j)];
    }
    q = RationalPolynomial(std::move(quo));
    r = RationalPolynomial(std::move(rem));
}

std::string RationalPolynomial::to_string() const {
    if (c_.empty()) return "0";
    std::ostringstream os;
    for (std::size_t k = 0; k < c_.size(); ++k) {
        if (c_[k] == 0) continue;
        if (os.tellp() > 0) os << " + ";
        os << "(" << c_[k].get_str() << ")";
        if (k) os << "*t^" << k;
    }
    return os.str();
}

RationalPolynomial one_plus_tau_pow(int n) {
    std::vector<Rational> c;
    for (int k = 0; k <= n; ++k) c.push_back(binomial(n, k));
    return RationalPolynomial(std::move(c));
}

Rational p_sigma_sum(int sigma, const Rational& u, const Rational& v) {
    Rational s(0);
    for (int j = 2; j <= sigma + 1; ++j) s += rpow(v - u, j) * rpow(u, sigma + 1 - j) / (factorial(j) * factorial(sigma + 1 - j));
    s.canonicalize();
    return s;
}

Rational p_sigma_closed(int sigma, const Rational& u, const Rational& v) {
    Rational r = (rpow(v, sigma + 1) - (sigma + 1) * (v - u) * rpow(u, sigma) - rpow(u, sigma + 1)) / factorial(sigma + 1);
    r.canonicalize();
    return r;
}

Rational p_sigma(int sigma, const Rational& u, const Rational& v) {
    if (sigma < 1) throw DomainError("P_sigma needs sigma >= 1");
    const Rational a = p_sigma_sum(sigma, u, v);
    const Rational b = p_sigma_closed(sigma, u, v);
    if (a != b) throw Error("P_sigma: sum and closed forms disagree at sigma = " + std::to_string(sigma));
    return a;
}

RationalPolynomial wp(int sigma, int branch) {
    if (sigma < 1) throw DomainError("wp needs sigma >= 1");
    const Rational inv = Rational(1) / factorial(sigma + 1);
    const RationalPolynomial tau_s1 = RationalPolynomial::monomial(1, sigma + 1);
    if (branch == 1) {
        // (1+t)^(s+1) - t^(s+1) - (s+1) t^s
        return inv * (one_plus_tau_pow(sigma + 1) - tau_s1 - RationalPolynomial::monomial(sigma + 1, sigma));
    }
    if (branch == 2) {
        // t^(s+1) + (s+1)(1+t)^s - (1+t)^(s+1)
        return inv * (tau_s1 + Rational(sigma + 1) * one_plus_tau_pow(sigma) - one_plus_tau_pow(sigma + 1));
    }
    throw DomainError("wp branch must be 1 or 2");
}

RationalPolynomial wp_tilde(int sigma, int branch) {
    if (sigma < 2) throw DomainError("wp~ needs sigma >= 2");
    return one_plus_tau_pow(1) * wp(sigma - 1, branch);
}

namespace {

// Positive multiple with coprime integer coefficients; signs are unchanged,
// so Sturm counts are too, and coefficient growth stays in check.
RationalPolynomial primitive_part(const RationalPolynomial& p) {
    if (p.is_zero()) return p;
    mpz_class l = 1, g = 0;
    for (const auto& c : p.coeffs()) l = lcm(l, mpz_class(c.get_den()));
    for (const auto& c : p.coeffs()) g = gcd(g, mpz_class(c.get_num() * (l / c.get_den())));
    return Rational(l, g) * p;
}

std::vector<RationalPolynomial> sturm_sequence(const RationalPolynomial& p) {
    std::vector<RationalPolynomial> seq{primitive_part(p), primitive_part(p.derivative())};
    while (!seq.back().is_zero() && seq.back().degree() > 0) {
        RationalPolynomial q, r;
        RationalPolynomial::divide(seq[seq.size() - 2], seq.back(), q, r);
        if (r.is_zero()) break;
        seq.push_back(Rational(-1) * primitive_part(r));
    }
    if (seq.back().is_zero()) seq.pop_back();
    return seq;
}

int sign_changes(const std::vector<int>& signs) {
    int changes = 0, last = 0;
    for (int s : signs) {
        if (s == 0) continue;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

int changes_at(const std::vector<RationalPolynomial>& seq, const Rational& x) {
    std::vector<int> s;
    for (const auto& p : seq) s.push_back(sign_of(p(x)));
    return sign_changes(s);
}

int changes_at_infinity(const std::vector<RationalPolynomial>& seq, int direction) {
    std::vector<int> s;
    for (const auto& p : seq) {
        int sg = sign_of(p.leading());
        if (direction < 0 && p.degree() % 2 == 1) sg = -sg;
        s.push_back(sg);
    }
    return sign_changes(s);
}

// roots in (lo, hi]
int count_in(const std::vector<RationalPolynomial>& seq, const Rational& lo, const Rational& hi) {
    return changes_at(seq, lo) - changes_at(seq, hi);
}

}  // namespace

int sturm_root_count(const RationalPolynomial& p) {
    if (p.degree() <= 0) return 0;
    const auto seq = sturm_sequence(p);
    return changes_at_infinity(seq, -1) - changes_at_infinity(seq, 1);
}

std::vector<RealRoot> real_roots(const RationalPolynomial& p, double width) {
    std::vector<RealRoot> out;
    if (p.degree() <= 0) return out;
    const auto seq = sturm_sequence(p);
    // Cauchy bound
    Rational bound(0);
    for (int k = 0; k < p.degree(); ++k) {
        Rational r = abs(p.coeff(k) / p.leading());
        if (r > bound) bound = r;
    }
    bound += 1;
    struct Interval {
        Rational lo, hi;
    };
    std::vector<Interval> stack{{-bound, bound}};
    std::vector<Interval> isolated;
    while (!stack.empty()) {
        const Interval iv = stack.back();
        stack.pop_back();
        const int n = count_in(seq, iv.lo, iv.hi);
        if (n == 0) continue;
        if (n == 1) {
            isolated.push_back(iv);
            continue;
        }
        const Rational mid = (iv.lo + iv.hi) / 2;
        stack.push_back({mid, iv.hi});
        stack.push_back({iv.lo, mid});
    }
    const Rational target(width);
    for (auto iv : isolated) {
        // refine (lo, hi] holding exactly one root
        const RationalPolynomial& pp = seq.front();
        int s_lo = sign_of(pp(iv.lo));
        const int s_hi = sign_of(pp(iv.hi));
        const bool bracketing = s_lo * s_hi < 0;
        while (iv.hi - iv.lo > target) {
            const Rational mid = (iv.lo + iv.hi) / 2;
            const int s_mid = sign_of(pp(mid));
            if (s_mid == 0) {
                iv.lo = mid;
                iv.hi = mid;
                break;
            }
            const bool left = bracketing ? s_mid != s_lo : count_in(seq, iv.lo, mid) == 1;
            if (left) {
                iv.hi = mid;
            } else {
                iv.lo = mid;
                s_lo = s_mid;
            }
        }
        if (p(iv.hi) == 0) iv.lo = iv.hi;
        if (iv.lo != iv.hi) {
            // rational roots are reported exactly
            const Rational cand = simplest_between(iv.lo, iv.hi);
            if (p(cand) == 0) iv.lo = iv.hi = cand;
        }
        out.push_back({iv.lo, iv.hi, Rational((iv.lo + iv.hi) / 2).get_d()});
    }
    std::sort(out.begin(), out.end(), [](const RealRoot& a, const RealRoot& b) { return a.lo < b.lo; });
    return out;
}

std::vector<RealRoot> wp_real_roots(int sigma, int branch) { return real_roots(wp(sigma, branch)); }

PolyCheck check_wp_identities(int sigma_max, unsigned seed) {
    PolyCheck rep;
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> num(-40, 40), den(1, 17);
    auto random_rational = [&] {
        Rational r(num(rng), den(rng));
        r.canonicalize();
        return r;
    };
    for (int sigma = 1; sigma <= sigma_max; ++sigma) {
        const auto w1 = wp(sigma, 1), w2 = wp(sigma, 2);
        if (w1.degree() != sigma - 1 || w2.degree() != sigma - 1) {
            rep.fail("sigma=" + std::to_string(sigma) + ": degree is not sigma-1");
        }
        if (sigma < 2) continue;
        // reflection: wp1(t) = (-1)^(sigma+1) wp2(-t-1)
        const RationalPolynomial refl = Rational(sigma % 2 == 1 ? 1 : -1) * w2.affine_substitute(-1, -1);
        for (int k = 0; k <= std::max(w1.degree(), refl.degree()); ++k) {
            if (w1.coeff(k) != refl.coeff(k)) {
                rep.fail("sigma=" + std::to_string(sigma) + " reflection identity, coefficient " + std::to_string(k));
            }
        }
        for (int i = 1; i <= 2; ++i) {
            const auto w = wp(sigma, i);
            const auto d = w.derivative();
            const auto lower = wp(sigma - 1, i);
            for (int k = 0; k <= std::max(d.degree(), lower.degree()); ++k) {
                if (d.coeff(k) != lower.coeff(k)) {
                    rep.fail("sigma=" + std::to_string(sigma) + " branch " + std::to_string(i) +
                             " derivative identity, coefficient " + std::to_string(k));
                }
            }
            const auto tilde = wp_tilde(sigma, i);
            if (!(tilde == one_plus_tau_pow(1) * d)) {
                rep.fail("sigma=" + std::to_string(sigma) + " branch " + std::to_string(i) + " wp~ factorization");
            }
            // d/du wp(u/(v-u)) = (v-u)^-1 wp~(u/(v-u)), with d tau/du = v/(v-u)^2
            for (int r = 0; r < 20; ++r) {
                const Rational u = random_rational();
                Rational v = random_rational();
                if (v == u) v += 1;
                const Rational tau = u / (v - u);
                const Rational lhs = d(tau) * v / ((v - u) * (v - u));
                const Rational rhs = tilde(tau) / (v - u);
                if (lhs != rhs) {
                    rep.fail("sigma=" + std::to_string(sigma) + " branch " + std::to_string(i) + " chain rule at u=" +
                             u.get_str() + ", v=" + v.get_str());
                }
            }
        }
    }
    return rep;
}

CriticalValueCheck check_critical_values(int sigma) {
    if (sigma < 2) throw DomainError("critical values need sigma >= 2");
    CriticalValueCheck out;
    out.sigma = sigma;
    const auto w = wp(sigma, 1);
    const auto d = w.derivative();
    const Rational c = Rational(sigma) / factorial(sigma + 1);
    // exact form: wp - c t^(sigma-1) is divisible by wp'
    RationalPolynomial q, r;
    RationalPolynomial::divide(w - RationalPolynomial::monomial(c, sigma - 1), d, q, r);
    out.exact_divisibility = d.degree() <= 0 ? true : r.is_zero();
    for (const auto& root : real_roots(d, 1e-15)) {
        const Rational tau = (root.lo + root.hi) / 2;
        const Rational lhs = w(tau);
        const Rational rhs = c * rpow(tau, sigma - 1);
        const double rel = std::abs(Rational(lhs - rhs).get_d()) / std::abs(rhs.get_d());
        out.critical_points.push_back(root.value);
        out.relative_errors.push_back(rel);
        if (!(rel <= 1e-10)) out.pass = false;
    }
    if (d.degree() > 0 && !out.exact_divisibility) out.pass = false;
    return out;
}

nlohmann::json polylab_report(int sigma_max, bool& all_pass) {
    all_pass = true;
    nlohmann::json rep;
    rep["sigma_max"] = sigma_max;
    const PolyCheck ids = check_wp_identities(sigma_max);
    rep["identities"] = {{"pass", ids.pass}, {"failures", ids.failures}};
    all_pass = all_pass && ids.pass;

    nlohmann::json rows = nlohmann::json::array();
    for (int sigma = 1; sigma <= sigma_max; ++sigma) {
        nlohmann::json row;
        row["sigma"] = sigma;
        bool ok = true;
        const auto r1 = wp_real_roots(sigma, 1);
        const auto r2 = wp_real_roots(sigma, 2);
        const std::size_t expected = sigma % 2 == 0 ? 1 : 0;
        const bool counts = r1.size() == expected && r2.size() == expected;
        row["root_counts"] = {r1.size(), r2.size()};
        row["root_counts_pass"] = counts;
        ok = ok && counts;
        if (sigma % 2 == 0 && counts) {
            // -1 < tau2 < -1/2 < tau1 < 0 from the isolating intervals
            const bool order = r2[0].lo > -1 && r2[0].hi < Rational(-1, 2) && r1[0].lo > Rational(-1, 2) && r1[0].hi < 0;
            row["tau1"] = r1[0].value;
            row["tau2"] = r2[0].value;
            row["ordering_pass"] = order;
            ok = ok && order;
            // wp~ vanishes only at -1 and not at tau_i
            bool tilde_ok = true;
            for (int i = 1; i <= 2; ++i) {
                for (const auto& z : real_roots(wp_tilde(sigma, i))) tilde_ok = tilde_ok && z.lo == -1 && z.hi == -1;
            }
            tilde_ok = tilde_ok && sgn(wp_tilde(sigma, 1)(Rational((r1[0].lo + r1[0].hi) / 2))) != 0;
            tilde_ok = tilde_ok && sgn(wp_tilde(sigma, 2)(Rational((r2[0].lo + r2[0].hi) / 2))) != 0;
            row["wp_tilde_zero_set_pass"] = tilde_ok;
            ok = ok && tilde_ok;
        }
        if (sigma == 2 && counts) {
            const bool exact = r1[0].lo == Rational(-1, 3) && r1[0].hi == Rational(-1, 3) &&
                               r2[0].lo == Rational(-2, 3) && r2[0].hi == Rational(-2, 3);
            row["exact_roots_pass"] = exact;
            ok = ok && exact;
        }
        if (sigma >= 2) {
            const auto cv = check_critical_values(sigma);
            row["critical_points"] = cv.critical_points;
            row["critical_relative_errors"] = cv.relative_errors;
            row["critical_exact_divisibility"] = cv.exact_divisibility;
            row["critical_pass"] = cv.pass;
            ok = ok && cv.pass;
        }
        row["pass"] = ok;
        all_pass = all_pass && ok;
        rows.push_back(row);
    }
    rep["per_sigma"] = rows;
    rep["pass"] = all_pass;
    return rep;
}

}  // namespace restrictlab
