#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "restrictlab/curve.hpp"
#include "restrictlab/errors.hpp"

using namespace restrictlab;
using Eigen::Vector2d;

TEST_CASE("polynomial curve derivatives") {
    const auto c = parse_curve_spec("poly:t,t^4");
    CHECK(c->a() == doctest::Approx(-0.3));
    CHECK(c->b() == doctest::Approx(0.3));
    const double t = 0.2;
    CHECK(c->derivative(t, 1).isApprox(Vector2d(1, 4 * std::pow(t, 3))));
    CHECK(c->derivative(t, 3).isApprox(Vector2d(0, 24 * t)));
    CHECK(c->derivative(t, 4).isApprox(Vector2d(0, 24)));
    CHECK(c->derivative(t, 5).norm() == 0.0);
}

TEST_CASE("circle and latitude jets") {
    const auto c = parse_curve_spec("circle:1,2,0.5");
    const double t = 0.9;
    CHECK(c->point(t).isApprox(Vector2d(1 + 0.5 * std::cos(t), 2 + 0.5 * std::sin(t))));
    CHECK(c->derivative(t, 3).isApprox(Vector2d(0.5 * std::sin(t), -0.5 * std::cos(t))));
    CHECK(c->min_speed() == doctest::Approx(0.5));
    const auto l = parse_curve_spec("latitude:1.0471975511965976");
    CHECK(l->derivative(0.3, 1).isApprox(Vector2d(0, 1)));
    CHECK(l->derivative(0.3, 2).norm() == 0.0);
}

TEST_CASE("line spec") {
    const auto l = parse_curve_spec("line:0,0,2,1");
    CHECK(l->point(0.5).isApprox(Vector2d(1, 0.5)));
}

TEST_CASE("malformed specs raise parse errors") {
    CHECK_THROWS_AS(parse_curve_spec("poly:t"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec("circle:1,2"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec("spiral:1"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec("poly:t,t^"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec("noprefix"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec("poly:t,t^2@1,0"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec("poly:t,t^2@0.5"), ParseError);
}

TEST_CASE("interval suffix") {
    const auto c = parse_curve_spec("poly:t,t^2@-0.5,0.5");
    CHECK(c->a() == -0.5);
    CHECK(c->b() == 0.5);
    CHECK(c->point(0.5).isApprox(Vector2d(0.5, 0.25)));
    const auto arc = parse_curve_spec("latitude:1.0@0,3");
    CHECK(arc->b() == 3.0);
}

TEST_CASE("reparametrized curve follows the chain rule") {
    const auto inner = parse_curve_spec("poly:t,t^3");
    const ReparametrizedCurve c(inner, "t^3 + t", -0.2, 0.2);
    const double t = 0.15;
    const double phi = t * t * t + t, dphi = 3 * t * t + 1, d2phi = 6 * t;
    // gamma(phi)'' = gamma''(phi) phi'^2 + gamma'(phi) phi''
    const Vector2d g1(1, 3 * phi * phi), g2(0, 6 * phi);
    CHECK(c.derivative(t, 1).isApprox(g1 * dphi));
    CHECK(c.derivative(t, 2).isApprox(g2 * dphi * dphi + g1 * d2phi));
}

TEST_CASE("table curve reproduces a sampled circle") {
    std::vector<Vector2d> pts;
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const double a = 2.0 * M_PI * i / n;
        pts.emplace_back(std::cos(a), std::sin(a));
    }
    const TableCurve c(pts, 8);
    const double t = 0.5 * c.b();
    // chord parametrization is arclength to high accuracy for fine sampling
    CHECK(c.derivative(t, 1).norm() == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(c.derivative(t, 2).norm() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK_THROWS_AS(TableCurve({Vector2d(0, 0)}, 3), DomainError);
}

TEST_CASE("affine image and dilation") {
    const auto c = parse_curve_spec("circle:0,0,1");
    Eigen::Matrix2d a;
    a << 2, 0, 0, 3;
    const AffineImageCurve ac(c, a, Vector2d(1, 1));
    CHECK(ac.point(0.0).isApprox(Vector2d(3, 1)));
    const DilatedCurve dc(c, 4.0);
    CHECK(dc.derivative(0.0, 1).isApprox(Vector2d(0, 4)));
}

TEST_CASE("JSON curve objects match the compact form") {
    const auto a = parse_curve_spec(R"({"kind":"poly","coeffs":[[0,1],[0,0,1]],"interval":[-0.5,0.5]})");
    const auto b = parse_curve_spec("poly:t,t^2@-0.5,0.5");
    CHECK(a->a() == b->a());
    CHECK(a->b() == b->b());
    for (double t : {-0.4, 0.1, 0.3})
        for (int k = 0; k <= 3; ++k) CHECK((a->derivative(t, k) - b->derivative(t, k)).norm() < 1e-14);

    const auto c = parse_curve_json({{"kind", "circle"}, {"center", {1, 2}}, {"radius", 0.5}});
    CHECK(c->point(0.0).isApprox(Vector2d(1.5, 2)));
    const auto l = parse_curve_json({{"kind", "latitude"}, {"theta0", 1.0}});
    CHECK(l->point(0.3).isApprox(Vector2d(1.0, 0.3)));

    nlohmann::json tab{{"kind", "table"}, {"points", nlohmann::json::array()}};
    for (int i = 0; i <= 200; ++i) tab["points"].push_back({0.01 * i, 0.0});
    const auto tc = parse_curve_json(tab);
    CHECK(tc->b() == doctest::Approx(2.0));
    CHECK(tc->derivative(1.0, 1).isApprox(Vector2d(1, 0)));

    CHECK_THROWS_AS(parse_curve_spec(R"({"kind":"spiral"})"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec(R"({"kind":"circle","radius":1})"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec(R"({"kind":"poly","coeffs":[[0,1]]})"), ParseError);
    CHECK_THROWS_AS(parse_curve_spec("{not json"), ParseError);
}
