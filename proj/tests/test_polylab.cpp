#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "restrictlab/polylab.hpp"

using namespace restrictlab;

namespace {

Rational rat(long n, long d = 1) {
    Rational r(n, static_cast<unsigned long>(d));
    r.canonicalize();
    return r;
}

// independent double evaluation of the defining formulas
double wp_direct(int sigma, int branch, double t) {
    const double f = std::tgamma(sigma + 2.0);
    if (branch == 1) return (std::pow(1 + t, sigma + 1) - std::pow(t, sigma + 1) - (sigma + 1) * std::pow(t, sigma)) / f;
    return (std::pow(t, sigma + 1) + (sigma + 1) * std::pow(1 + t, sigma) - std::pow(1 + t, sigma + 1)) / f;
}

}  // namespace

TEST_CASE("P_sigma examples") {
    for (int s = 1; s <= 6; ++s) CHECK(p_sigma(s, rat(3, 7), rat(3, 7)) == 0);
    CHECK(p_sigma(1, rat(0), rat(5, 3)) == rat(25, 18));
    CHECK(p_sigma(2, rat(1), rat(2)) == rat(2, 3));
}

TEST_CASE("sum and closed forms agree on random rationals") {
    std::mt19937 rng(8);
    std::uniform_int_distribution<long> num(-30, 30), den(1, 13);
    for (int s = 1; s <= 20; ++s) {
        for (int k = 0; k < 100; ++k) {
            const Rational u = rat(num(rng), den(rng)), v = rat(num(rng), den(rng));
            CHECK(p_sigma_sum(s, u, v) == p_sigma_closed(s, u, v));
        }
    }
}

TEST_CASE("wp examples") {
    CHECK(wp(1, 1) == RationalPolynomial({rat(1, 2)}));
    CHECK(wp(2, 1) == RationalPolynomial({rat(1, 6), rat(1, 2)}));
    CHECK(wp(2, 1)(rat(0)) == rat(1, 6));
    CHECK(wp(2, 1)(rat(-1, 2)) == rat(-1, 12));
    CHECK(wp(2, 2) == RationalPolynomial({rat(1, 3), rat(1, 2)}));
    CHECK(wp(2, 1).derivative() == wp(1, 1));
}

TEST_CASE("expanded coefficients match the defining formulas") {
    for (int s = 1; s <= 25; ++s)
        for (int b = 1; b <= 2; ++b) {
            CHECK(wp(s, b).degree() == s - 1);
            for (double t : {-1.3, -0.7, -0.2, 0.4}) {
                CHECK(wp(s, b)(t) == doctest::Approx(wp_direct(s, b, t)).epsilon(1e-9).scale(1e-12));
            }
        }
}

TEST_CASE("identities hold for sigma <= 40") {
    const auto rep = check_wp_identities(40);
    CHECK(rep.pass);
    CHECK(rep.failures.empty());
}

TEST_CASE("real roots") {
    CHECK(wp_real_roots(3, 1).empty());
    const auto a = wp_real_roots(2, 1), b = wp_real_roots(2, 2);
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    CHECK(a[0].lo == rat(-1, 3));
    CHECK(a[0].hi == rat(-1, 3));
    CHECK(b[0].lo == rat(-2, 3));
    for (int s : {4, 6, 8}) {
        const auto r1 = wp_real_roots(s, 1), r2 = wp_real_roots(s, 2);
        REQUIRE(r1.size() == 1);
        REQUIRE(r2.size() == 1);
        CHECK(-1.0 < r2[0].value);
        CHECK(r2[0].value < -0.5);
        CHECK(-0.5 < r1[0].value);
        CHECK(r1[0].value < 0.0);
        CHECK(std::abs(wp_direct(s, 1, r1[0].value)) < 1e-10);
    }
    for (int s = 1; s <= 40; ++s) {
        const int expect = s % 2 == 0 ? 1 : 0;
        CHECK(sturm_root_count(wp(s, 1)) == expect);
        CHECK(sturm_root_count(wp(s, 2)) == expect);
    }
}

TEST_CASE("Sturm isolation on a polynomial with known roots") {
    // (t - 1/2)(t + 3)(t - 2)(t^2 + 1)
    const RationalPolynomial p = RationalPolynomial({rat(-1, 2), rat(1)}) * RationalPolynomial({rat(3), rat(1)}) *
                                 RationalPolynomial({rat(-2), rat(1)}) * RationalPolynomial({rat(1), rat(0), rat(1)});
    const auto roots = real_roots(p);
    REQUIRE(roots.size() == 3);
    CHECK(roots[0].value == -3.0);
    CHECK(roots[1].value == 0.5);
    CHECK(roots[2].value == 2.0);
    // irrational root sqrt(2)
    const auto r2 = real_roots(RationalPolynomial({rat(-2), rat(0), rat(1)}));
    REQUIRE(r2.size() == 2);
    CHECK(r2[1].value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("critical values") {
    CHECK(wp(3, 1)(rat(-1, 3)) == rat(1, 72));
    const auto c3 = check_critical_values(3);
    REQUIRE(c3.critical_points.size() == 1);
    CHECK(c3.critical_points[0] == doctest::Approx(-1.0 / 3));
    CHECK(c3.pass);
    const auto c2 = check_critical_values(2);
    CHECK(c2.critical_points.empty());
    CHECK(c2.pass);
    for (int s = 2; s <= 40; ++s) CHECK(check_critical_values(s).pass);
}

TEST_CASE("odd sigma: wp_{sigma,1} bounded below on [-10, 10]") {
    for (int s = 1; s <= 15; s += 2) {
        double m = 1e300;
        for (int i = 0; i <= 4000; ++i) m = std::min(m, wp(s, 1)(-10.0 + 20.0 * i / 4000));
        CHECK(m > 0.0);
    }
}

TEST_CASE("wp~ zero sets for even sigma") {
    for (int s = 2; s <= 30; s += 2) {
        for (int b = 1; b <= 2; ++b) {
            for (const auto& z : real_roots(wp_tilde(s, b))) CHECK(z.value == -1.0);
            const auto tau = wp_real_roots(s, b);
            REQUIRE(tau.size() == 1);
            CHECK(wp_tilde(s, b)(tau[0].value) != 0.0);
        }
    }
    // odd sigma picks up the roots of wp_{sigma-1}: (1 + t) wp_{2,1} vanishes at -1/3
    CHECK(wp_tilde(3, 1)(rat(-1, 3)) == 0);
}

TEST_CASE("full report under five seconds") {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    const auto rep = polylab_report(40, pass);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(pass);
    CHECK(secs < 5.0);
    CHECK(rep["per_sigma"].size() == 40);
}
