#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "restrictlab/contact.hpp"
#include "restrictlab/errors.hpp"

using namespace restrictlab;
using Eigen::Vector2d;

namespace {

CurvePtr power_curve(int sigma, double a = -0.3, double b = 0.3) {
    return std::make_shared<ExpressionCurve>("t", "t^" + std::to_string(sigma + 1), a, b);
}

std::vector<double> grid(double a, double b, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
    return g;
}

FlowTimeCurve lift(const SymbolPtr& sym, const CurvePtr& c, const Vector2d& seed, double t_anchor, int n = 21) {
    auto g = grid(c->a(), c->b(), n);
    std::size_t anchor = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(g[i] - t_anchor) < std::abs(g[anchor] - t_anchor)) anchor = i;
    g[anchor] = t_anchor;
    return FlowTimeCurve(sym, c, continue_branch(*sym, *c, g, seed, anchor), t_anchor);
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST_CASE("tangential frequency examples") {
    const auto torus = make_symbol("torus_laplace");
    const Vector2d xi = tangential_frequency(*torus, *power_curve(1), 0.0, Vector2d(0.9, 0.1));
    CHECK((xi - Vector2d(1, 0)).norm() < 1e-12);

    const auto herm = make_symbol("hermite");
    const double r = 0.6;
    const auto circ = parse_curve_spec("circle:0,0,0.6");
    for (double t : {0.0, 1.0, 2.5, 4.0}) {
        const Vector2d tangent(-std::sin(t), std::cos(t));
        const Vector2d x = tangential_frequency(*herm, *circ, t, 0.7 * tangent + Vector2d(0.05, -0.02));
        CHECK((x - std::sqrt(1 - r * r) * tangent).norm() < 1e-12);
    }

    // equator: metric-unit covector along the equator is (0, 1) since sin(pi/2) = 1
    const auto sph = make_symbol("sphere_laplace");
    const auto eq = parse_curve_spec("latitude:1.5707963267948966");
    const Vector2d xe = tangential_frequency(*sph, *eq, 0.4, Vector2d(0.1, 0.8));
    CHECK((xe - Vector2d(0, 1)).norm() < 1e-12);
    // latitude theta0: |xi|_g = 1 gives xi2 = sin(theta0)
    const double th = M_PI / 3;
    const auto lat = std::make_shared<LatitudeCurve>(th);
    const Vector2d xl = tangential_frequency(*sph, *lat, 1.0, Vector2d(0.0, 0.7));
    CHECK((xl - Vector2d(0, std::sin(th))).norm() < 1e-12);
}

TEST_CASE("the angular sweep finds both orientations") {
    const auto torus = make_symbol("torus_laplace");
    const auto seeds = seed_tangential_frequencies(*torus, *power_curve(1), 0.1);
    REQUIRE(seeds.size() == 2);
    const Vector2d u = Vector2d(1, 0.2).normalized();
    CHECK(std::min((seeds[0] - u).norm(), (seeds[0] + u).norm()) < 1e-12);
    CHECK((seeds[0] + seeds[1]).norm() < 1e-12);
}

TEST_CASE("Newton failure raises SeedError") {
    // p = |xi|^2 + 1 has no zero set
    const auto s = make_symbol("custom:xi1^2 + xi2^2 + 1");
    CHECK_THROWS_AS(tangential_frequency(*s, *power_curve(1), 0.0, Vector2d(1, 0)), SeedError);
}

TEST_CASE("branch continuation") {
    SUBCASE("torus parabola: xi = unit tangent") {
        const auto torus = make_symbol("torus_laplace");
        const auto c = power_curve(1);
        const auto g = grid(-0.3, 0.3, 25);
        const auto br = continue_branch(*torus, *c, g, Vector2d(0.9, 0.1), 12);
        CHECK(br.orientation == 1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Vector2d tangent = Vector2d(1, 2 * g[i]).normalized();
            CHECK((br.xi[i] - tangent).norm() < 1e-12);
            CHECK(br.residuals[i] <= 1e-10);
        }
    }
    SUBCASE("hermite circle r = 1/2: |xi| = sqrt(3)/2") {
        const auto herm = make_symbol("hermite");
        const auto c = parse_curve_spec("circle:0,0,0.5");
        const auto g = grid(0.0, 2 * M_PI, 40);
        const auto br = continue_branch(*herm, *c, g, Vector2d(0, -0.8), 0);
        CHECK(br.orientation == -1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(br.xi[i].norm() == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
            CHECK(br.residuals[i] <= 1e-10);
        }
    }
    SUBCASE("coarse grids are subdivided rather than jumping branches") {
        const auto herm = make_symbol("hermite");
        const auto c = parse_curve_spec("circle:0,0,0.5");
        const auto br = continue_branch(*herm, *c, grid(0.0, 2 * M_PI, 3), Vector2d(0, 0.8), 0);
        const Vector2d tangent(-std::sin(M_PI), std::cos(M_PI));
        CHECK((br.xi[1] - std::sqrt(0.75) * tangent).norm() < 1e-10);
    }
}

TEST_CASE("flow-time reparametrization") {
    const auto torus = make_symbol("torus_laplace");
    SUBCASE("unit-speed segment: L(s) = 2s") {
        const auto c = std::make_shared<ExpressionCurve>("t", "0", -1.0, 1.0);
        const auto fc = lift(torus, c, Vector2d(1, 0), 0.0);
        for (double s : {-0.4, -0.1, 0.0, 0.25, 0.5}) CHECK(fc.t_of_s(s) == doctest::Approx(2 * s).scale(1.0));
        CHECK(fc.s_of_t(0.8) == doctest::Approx(0.4));
        const auto j = fc.jets(0.3, 4);
        CHECK(j.delta[1] == doctest::Approx(2.0));
        CHECK(std::abs(j.delta[2]) < 1e-14);
    }
    SUBCASE("identity when the curve already moves at flow speed") {
        const auto c = std::make_shared<ExpressionCurve>("2*t", "0.5", -0.5, 0.5);
        const auto fc = lift(torus, c, Vector2d(1, 0), 0.0);
        for (double s : {-0.3, 0.2, 0.45}) CHECK(fc.t_of_s(s) == doctest::Approx(s).scale(1.0));
    }
    SUBCASE("d/ds gamma~ = d_xi p on the lift") {
        const auto herm = make_symbol("hermite");
        const auto c = std::make_shared<ExpressionCurve>("0.3*t", "0.2 + 0.4*t^2 - t^3", -0.5, 0.5);
        const auto fc = lift(herm, c, Vector2d(0.9, 0.1), 0.0);
        for (double t : grid(-0.5, 0.5, 11)) {
            const auto j = fc.jets(t, 3);
            const PhaseSpacePoint p{{j.gamma[0][0], j.gamma[1][0]}, {j.xi[0][0], j.xi[1][0]}};
            CHECK((Vector2d(j.gamma[0][1], j.gamma[1][1]) - grad_xi(*herm, p)).norm() <= 1e-8);
            // finite-difference check of the global map
            const double s = fc.s_of_t(t), h = 1e-5;
            const Vector2d fd = (c->point(fc.t_of_s(s + h)) - c->point(fc.t_of_s(s - h))) / (2 * h);
            CHECK((fd - grad_xi(*herm, p)).norm() <= 1e-6);
        }
    }
}

TEST_CASE("contact order on model curves (t, t^(sigma+1))") {
    const auto torus = make_symbol("torus_laplace");
    for (int sigma = 1; sigma <= 5; ++sigma) {
        CAPTURE(sigma);
        const auto c = power_curve(sigma);
        const auto fc = lift(torus, c, Vector2d(1, 0), 0.0);
        const auto pc = contact_order_at(fc, 0.0);
        CHECK(pc.sigma == ContactOrder{sigma, false});
        CHECK(pc.confidence >= 2.0);
        // plateau contract
        for (int j = 2; j <= sigma; ++j) {
            const double scale = std::max(1.0, std::abs(fc.jets(0.0, j).gamma[1].derivative(j)));
            CHECK(pc.jet_gaps[j - 1] <= 1e-5 * scale);
        }
        const double scale = std::pow(2.0, sigma + 1) * factorial(sigma + 1);
        CHECK(pc.jet_gaps[sigma] / scale >= 1e2 * 1e-5);
        for (double t : {-0.25, -0.1, 0.1, 0.2, 0.3}) {
            const auto q = contact_order_at(fc, t);
            CHECK(q.sigma == ContactOrder{1, false});
            CHECK(q.confidence >= 2.0);
        }
    }
}

TEST_CASE("contact order on circles and latitudes") {
    const auto herm = make_symbol("hermite");
    {
        const auto c = parse_curve_spec("circle:0,0,0.7071067811865476");
        const auto fc = lift(herm, c, Vector2d(0, 0.7), 0.0, 30);
        for (double t : {0.0, 1.3, 3.0, 5.5}) {
            const auto pc = contact_order_at(fc, t);
            CHECK(pc.sigma == ContactOrder{8, true});
            CHECK(pc.confidence >= 2.0);
        }
    }
    {
        const auto c = parse_curve_spec("circle:0,0,0.5");
        const auto fc = lift(herm, c, Vector2d(0, 0.8), 0.0, 30);
        for (double t : {0.0, 2.0, 4.0}) CHECK(contact_order_at(fc, t).sigma == ContactOrder{1, false});
    }
    const auto sph = make_symbol("sphere_laplace");
    {
        const auto fc = lift(sph, std::make_shared<LatitudeCurve>(M_PI / 3), Vector2d(0, 0.8), 0.0, 30);
        CHECK(contact_order_at(fc, 1.0).sigma == ContactOrder{1, false});
    }
    {
        const auto fc = lift(sph, std::make_shared<LatitudeCurve>(M_PI / 2), Vector2d(0, 0.8), 0.0, 30);
        CHECK(contact_order_at(fc, 1.0).sigma == ContactOrder{8, true});
    }
}

TEST_CASE("hermite orbit jets: D_2 for a circle of radius 1/2") {
    // flow through (r, 0) with xi = (0, q0): z'' = (-4r, 0); reparametrized circle: -4 q0^2 / r
    const auto herm = make_symbol("hermite");
    const auto c = parse_curve_spec("circle:0,0,0.5");
    const auto fc = lift(herm, c, Vector2d(0, 0.8), 0.0, 30);
    const auto pc = contact_order_at(fc, 0.0);
    const double r = 0.5, q2 = 0.75;
    CHECK(pc.jet_gaps[1] == doctest::Approx(std::abs(-4 * r + 4 * q2 / r)).epsilon(1e-10));
}

TEST_CASE("G2 test") {
    const auto torus = make_symbol("torus_laplace");
    const auto fc = lift(torus, power_curve(2), Vector2d(1, 0), 0.0);
    CHECK(g2_test(fc, 0.0));
    CHECK_FALSE(g2_test(fc, 0.1));
}

TEST_CASE("G2 test agrees with contact order >= 2 on random cases") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto torus = make_symbol("torus_laplace");
    const auto herm = make_symbol("hermite");
    int checked = 0, positives = 0;
    for (int k = 0; k < 40; ++k) {
        const bool flat = k % 2 == 0;
        const double c3 = u(rng), c4 = u(rng), c2 = flat ? 0.0 : u(rng);
        char buf[160];
        std::snprintf(buf, sizeof buf, "(%.6f)*t^2 + (%.6f)*t^3 + (%.6f)*t^4", c2, c3, c4);
        const auto sym = k % 4 < 2 ? torus : herm;
        CurvePtr c;
        if (sym == torus) {
            c = std::make_shared<ExpressionCurve>("t", buf, -0.3, 0.3);
        } else if (flat) {
            // arc of the radius 2^(-1/2) orbit: G2 everywhere
            c = std::make_shared<CircleCurve>(Vector2d(0, 0), std::sqrt(0.5), -0.3, 0.3);
        } else {
            std::snprintf(buf, sizeof buf, "0.1 + (%.6f)*t^2", c2);
            c = std::make_shared<ExpressionCurve>("0.3*t", buf, -0.3, 0.3);
        }
        const auto fc = lift(sym, c, Vector2d(1, 0.1), 0.0, 13);
        for (double t : {0.0, 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)}) {
            const auto pc = contact_order_at(fc, t);
            const bool ge2 = pc.sigma.at_least || pc.sigma.value >= 2;
            CHECK(g2_test(fc, t) == ge2);
            positives += ge2;
            ++checked;
        }
    }
    CHECK(checked == 200);
    CHECK(positives > 20);
    CHECK(positives < 180);
}

TEST_CASE("G2 scan") {
    const auto torus = make_symbol("torus_laplace");
    for (int sigma = 2; sigma <= 5; ++sigma) {
        CAPTURE(sigma);
        const auto fc = lift(torus, power_curve(sigma), Vector2d(1, 0), 0.0);
        const auto sc = g2_scan(fc, 201);
        CHECK_FALSE(sc.non_isolated);
        REQUIRE(sc.points.size() == 1);
        CHECK(std::abs(sc.points[0]) < 1e-3);
    }
    const auto para = lift(torus, power_curve(1), Vector2d(1, 0), 0.0);
    CHECK(g2_scan(para, 201).points.empty());
    const auto seg = lift(torus, std::make_shared<ExpressionCurve>("t", "0", -0.3, 0.3), Vector2d(1, 0), 0.0);
    CHECK(g2_scan(seg, 201).non_isolated);
}

TEST_CASE("leading vector on model curves") {
    const auto torus = make_symbol("torus_laplace");
    for (int sigma = 1; sigma <= 3; ++sigma) {
        CAPTURE(sigma);
        const auto fc = lift(torus, power_curve(sigma, -0.5, 0.5), Vector2d(1, 0), 0.0);
        const auto lv = leading_vector_b(fc, 0.0, sigma);
        // gamma~ = (delta, delta^(sigma+1)) with delta = 2s + O(s^(2 sigma + 1)): b = gamma~^(sigma+1)(0)
        const Vector2d b_ref(0.0, factorial(sigma + 1) * std::pow(2.0, sigma + 1));
        CHECK((lv.b - b_ref).norm() <= 1e-9 * b_ref.norm());
        CHECK(lv.v.norm() == doctest::Approx(1.0));
        CHECK(std::abs(lv.v.dot(grad_xi(*torus, {Vector2d(0, 0), Vector2d(1, 0)}))) < 1e-14);
        CHECK(lv.verified);
        CHECK(lv.fit_rel_error <= 0.02);
        CHECK(std::abs(lv.pairing) >= 1e-3);
        // flipping v flips the pairing
        CHECK(lv.b.dot(-lv.v) == doctest::Approx(-lv.pairing));
    }
}

TEST_CASE("leading vector survives reparametrization of the input curve") {
    const auto torus = make_symbol("torus_laplace");
    const auto inner = power_curve(2, -0.5, 0.5);
    const auto c = std::make_shared<ReparametrizedCurve>(inner, "t^3 + t", -0.4, 0.4);
    const auto fc = lift(torus, c, Vector2d(1, 0), 0.0);
    const auto lv = leading_vector_b(fc, 0.0, 2);
    CHECK(std::abs(lv.pairing) == doctest::Approx(48.0).epsilon(1e-8));
}

TEST_CASE("global sigma pipeline") {
    const auto torus = make_symbol("torus_laplace");
    SUBCASE("quartic") {
        const auto rep = global_sigma(torus, power_curve(3));
        CHECK(rep.sigma_global == ContactOrder{3, false});
        REQUIRE(rep.g2_points.size() == 1);
        CHECK(std::abs(rep.g2_points[0]) < 1e-3);
        for (const auto& p : rep.per_t) {
            if (p.t == 0.0) CHECK(p.sigma.value == 3);
            else CHECK(p.sigma.value == 1);
        }
        REQUIRE(rep.leading);
        CHECK(std::abs(rep.leading->pairing) > 1e-3);
        CHECK(rep.branches == 2);
        for (double t : rep.g2_points) {
            const auto it = std::min_element(rep.per_t.begin(), rep.per_t.end(), [&](auto& x, auto& y) {
                return std::abs(x.t - t) < std::abs(y.t - t);
            });
            CHECK(it->sigma.value >= 2);
        }
    }
    SUBCASE("sphere latitudes") {
        const auto sph = make_symbol("sphere_laplace");
        CHECK(global_sigma(sph, std::make_shared<LatitudeCurve>(M_PI / 3)).sigma_global == ContactOrder{1, false});
        const auto eq = global_sigma(sph, std::make_shared<LatitudeCurve>(M_PI / 2));
        CHECK(eq.sigma_global == ContactOrder{8, true});
        CHECK_FALSE(eq.leading.has_value());
    }
    SUBCASE("reparametrization invariance") {
        const auto base = power_curve(2);
        // phi(t) = t^3 + t maps [-c, c] onto [-0.3, 0.3]
        double c = 0.3;
        for (int i = 0; i < 50; ++i) c -= (c * c * c + c - 0.3) / (3 * c * c + 1);
        const auto re = std::make_shared<ReparametrizedCurve>(base, "t^3 + t", -c, c);
        const auto r1 = global_sigma(torus, base);
        const auto r2 = global_sigma(torus, re);
        CHECK(r1.sigma_global == r2.sigma_global);
        REQUIRE(r1.g2_points.size() == r2.g2_points.size());
        for (std::size_t i = 0; i < r1.g2_points.size(); ++i) {
            const double mapped = std::pow(r2.g2_points[i], 3) + r2.g2_points[i];
            CHECK(std::abs(mapped - r1.g2_points[i]) < 2e-3);
        }
    }
    SUBCASE("chart invariance under a random affine map") {
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> u(-0.3, 0.3);
        Eigen::Matrix2d a;
        a << 1 + u(rng), u(rng), u(rng), 1 + u(rng);
        const Vector2d b(u(rng), u(rng));
        const auto base = power_curve(3);
        const auto moved_curve = std::make_shared<AffineImageCurve>(base, a, b);
        const auto moved_sym = std::make_shared<AffineTransportedSymbol>(torus, a, b);
        const auto r1 = global_sigma(torus, base);
        const auto r2 = global_sigma(moved_sym, moved_curve);
        CHECK(r1.sigma_global == r2.sigma_global);
        REQUIRE(r1.g2_points.size() == r2.g2_points.size());
        for (std::size_t i = 0; i < r1.g2_points.size(); ++i) CHECK(std::abs(r1.g2_points[i] - r2.g2_points[i]) < 2e-3);
    }
}

TEST_CASE("report export") {
    const auto rep = global_sigma(make_symbol("torus_laplace"), power_curve(2));
    const auto j = rep.to_json();
    CHECK(j["sigma_global"] == "2");
    CHECK(j["per_t"].size() == 31);
    std::ostringstream os;
    rep.write_csv(os);
    CHECK(os.str().rfind("t,sigma,confidence\n", 0) == 0);
}
