#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "restrictlab/errors.hpp"
#include "restrictlab/restriction.hpp"

using namespace restrictlab;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

CurvePtr parabola(double half = 0.5) { return std::make_shared<ExpressionCurve>("t", "t^2", -half, half); }
CurvePtr segment(double x0, double y0, double x1, double y1) {
    return parse_curve_spec("line:" + std::to_string(x0) + "," + std::to_string(y0) + "," + std::to_string(x1) + "," +
                            std::to_string(y1));
}

ClusterBasis single_torus(int k1, int k2) {
    ClusterBasis b;
    b.family = Family::Torus;
    b.lambda = std::hypot(k1, k2);
    b.indices = {{k1, k2}};
    b.rows = {{k1, k2, k2, 0}};
    return b;
}

Eigen::VectorXcd random_coeffs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd c(static_cast<Eigen::Index>(n));
    for (auto& v : c) v = {nd(rng), nd(rng)};
    return c.normalized();
}

}  // namespace

TEST_CASE("quadrature basics") {
    const auto unit = segment(0, 0, 1, 0);
    const auto q = curve_quadrature(*unit, 5.0);
    CHECK(q.size() >= 64);
    double s = 0;
    for (double w : q.weights) {
        CHECK(w > 0);
        s += w;
    }
    CHECK(std::abs(s - 1) < 1e-12);
    CHECK(q.points.size() == q.size());

    const auto circ = std::make_shared<CircleCurve>(Eigen::Vector2d(0.1, -0.2), 1.0);
    const auto qc = curve_quadrature(*circ, 40.0);
    std::complex<double> acc = 0;
    for (std::size_t i = 0; i < qc.size(); ++i) acc += qc.weights[i] * std::polar(1.0, 40.0 * qc.nodes[i]);
    CHECK(std::abs(acc) < 1e-10);

    for (double r : {0.3, 1.0, 2.5}) {
        const auto c = std::make_shared<CircleCurve>(Eigen::Vector2d(0, 0), r);
        CHECK(std::abs(curve_quadrature(*c, 10.0).arclength - 2 * M_PI * r) < 1e-10);
    }
    // 12 nodes per wavelength
    const auto qp = curve_quadrature(*parabola(), 300.0);
    CHECK(static_cast<double>(qp.size()) >= 12.0 * qp.arclength * 300.0 / (2 * M_PI));
    // sphere metric: latitude circle of length 2 pi sin(theta0)
    const LatitudeCurve lat(M_PI / 3);
    CHECK(std::abs(curve_quadrature(lat, 10.0, Metric::Sphere).arclength - 2 * M_PI * std::sin(M_PI / 3)) < 1e-10);
    // parabola arclength against the closed form
    const double exact = 0.5 * std::sqrt(2.0) + 0.5 * std::asinh(1.0);
    CHECK(std::abs(qp.arclength - exact) < 1e-10);
    CHECK_THROWS_AS(curve_quadrature(*unit, 0.0), DomainError);
}

TEST_CASE("rank-one gram norm equals the direct curve norm") {
    const auto c = parabola();
    const auto b = single_torus(3, 4);
    const auto q = curve_quadrature(*c, 5.0);
    const auto s = gram_operator_norm(b, *c, q);
    CHECK(s.value == doctest::Approx(std::sqrt(q.arclength) / (2 * M_PI)).epsilon(1e-12));
    const auto h = hermite_cluster(0);
    const auto cc = std::make_shared<CircleCurve>(Eigen::Vector2d(0, 0), 0.5);
    const auto qh = model_quadrature(h, cc);
    double direct = 0;
    for (std::size_t i = 0; i < qh.size(); ++i) direct += qh.weights[i] * std::exp(-qh.points[i].squaredNorm()) / M_PI;
    CHECK(gram_operator_norm(h, *model_curve(h, cc), qh).value == doctest::Approx(std::sqrt(direct)).epsilon(1e-12));
}

TEST_CASE("matrix-free gram norm against the dense eigensolver") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    // torus, several curves, dim <= 400
    std::vector<CurvePtr> curves = {segment(0.1, 0.2, 0.6, 0.9), parabola(), parabola(1.0),
                                    std::make_shared<ExpressionCurve>("t", "t^4", -0.5, 0.5),
                                    std::make_shared<CircleCurve>(Eigen::Vector2d(1, 1), 0.4)};
    for (int i = 0; i < 4; ++i)
        curves.push_back(std::make_shared<ExpressionCurve>(
            "t", std::to_string(u(rng)) + "*t^2+" + std::to_string(u(rng)) + "*t^3", -0.4, 0.4));
    for (const auto& c : curves) {
        for (double lam : {5.0, 9.3, 17.0, 31.4}) {
            const auto b = torus_cluster(lam);
            if (b.dim() > 400) continue;
            const auto q = curve_quadrature(*c, lam);
            const auto s = gram_operator_norm(b, *c, q);
            CHECK(std::abs(s.value - dense_gram_norm(b, q)) <= 1e-6 * s.value);
            CHECK(s.meta.at("min_ritz") >= -1e-8 * s.meta.at("top_eigenvalue"));
            CHECK(s.value * s.value <= s.meta.at("trace") * (1 + 1e-12));
            ++checked;
        }
    }
    // sphere, generic path
    for (int l : {3, 10, 40}) {
        const auto b = sphere_cluster(l);
        const auto c = std::make_shared<ExpressionCurve>("0.8+0.3*t^2", "t", -1.0, 1.5);
        const auto q = model_quadrature(b, c);
        const auto s = gram_operator_norm(b, *c, q);
        CHECK(std::abs(s.value - dense_gram_norm(b, q)) <= 1e-6 * s.value);
        ++checked;
    }
    // hermite
    for (int n : {4, 20, 60, 150}) {
        const auto b = hermite_cluster(n);
        for (double r : {0.5, 1 / std::sqrt(2.0)}) {
            const auto c = std::make_shared<CircleCurve>(Eigen::Vector2d(0, 0), r);
            const auto q = model_quadrature(b, c);
            const auto s = gram_operator_norm(b, *model_curve(b, c), q);
            CHECK(std::abs(s.value - dense_gram_norm(b, q)) <= 1e-6 * s.value);
            CHECK(s.value * s.value <= s.meta.at("trace") * (1 + 1e-12));
            ++checked;
        }
    }
    CHECK(checked > 30);
}

TEST_CASE("trace computed both ways") {
    const auto c = parabola();
    const auto b = torus_cluster(12.0);
    const auto q = curve_quadrature(*c, 12.0);
    const auto s = gram_operator_norm(b, *c, q);
    const Eigen::MatrixXcd v = evaluate_basis(b, q.points);
    const Eigen::Map<const Eigen::VectorXd> w(q.weights.data(), q.size());
    CHECK(s.meta.at("trace") == doctest::Approx((v.cwiseAbs2() * w).sum()).epsilon(1e-12));
}

TEST_CASE("latitude closed form against the generic path") {
    for (double th : {M_PI / 3, M_PI / 2, 1.0, 2.4}) {
        const auto lat = std::make_shared<LatitudeCurve>(th);
        for (int l : {1, 5, 20, 50}) {
            const auto b = sphere_cluster(l);
            const auto q = model_quadrature(b, lat);
            const auto fast = gram_operator_norm(b, *lat, q);
            CHECK(fast.method == "latitude");
            GramOptions opt;
            opt.allow_shortcut = false;
            const auto slow = gram_operator_norm(b, *lat, q, opt);
            CHECK(slow.method == "lanczos");
            CHECK(std::abs(fast.value - slow.value) <= 1e-8 * fast.value);
            CHECK(fast.value * fast.value == doctest::Approx(latitude_norm_squared(l, th)).epsilon(1e-14));
            CHECK(fast.meta.at("trace") == doctest::Approx(std::sin(th) * (2 * l + 1) / 2.0).epsilon(1e-10));
        }
    }
    // an arc of a latitude is not eligible for the shortcut
    LatitudeCurve arc(1.0, 0.0, 3.0);
    CHECK_FALSE(is_full_latitude(arc));
}

TEST_CASE("norms are stable under quadrature refinement") {
    const auto c = parabola();
    const auto b = torus_cluster(150.0);
    const auto q1 = curve_quadrature(*c, 150.0);
    const auto q2 = curve_quadrature(*c, 300.0);
    const double n1 = gram_operator_norm(b, *c, q1).value, n2 = gram_operator_norm(b, *c, q2).value;
    CHECK(std::abs(n1 - n2) < 1e-3 * n1);
    const auto h = hermite_cluster(100);
    const auto cc = std::make_shared<CircleCurve>(Eigen::Vector2d(0, 0), 0.5);
    const double h1 = gram_operator_norm(h, *model_curve(h, cc), model_quadrature(h, cc)).value;
    const double h2 = gram_operator_norm(h, *model_curve(h, cc), model_quadrature(h, cc, 2.0)).value;
    CHECK(std::abs(h1 - h2) < 1e-3 * h1);
}

TEST_CASE("enlarging the window never decreases the norm") {
    const auto c = parabola();
    for (double lam : {20.0, 45.5, 90.0}) {
        const auto q = curve_quadrature(*c, lam + 2);
        double prev = 0;
        for (double w : {0.5, 1.0, 1.5, 2.0}) {
            const double v = gram_operator_norm(torus_cluster(lam, -w, w), *c, q).value;
            CHECK(v >= prev * (1 - 1e-9));
            prev = v;
        }
    }
}

TEST_CASE("L^q norms") {
    const auto c = parabola();
    const auto q = curve_quadrature(*c, 10.0);
    const auto b = single_torus(6, 8);
    Eigen::VectorXcd one(1);
    one[0] = 1.0;
    for (double p : {2.0, 3.0, 4.0, 7.5})
        CHECK(lq_restriction_norm(one, b, *c, p, q) ==
              doctest::Approx(std::pow(q.arclength, 1 / p) / (2 * M_PI)).epsilon(1e-12));
    CHECK(lq_restriction_norm(one, b, *c, kInf, q) == doctest::Approx(1 / (2 * M_PI)).epsilon(1e-14));
    CHECK_THROWS_AS(lq_restriction_norm(one, b, *c, 1.5, q), DomainError);

    // constant modulus on a unit-length curve
    const auto unit = segment(0, 0.3, 1, 0.3);
    const auto qu = curve_quadrature(*unit, 10.0);
    for (double p : {2.0, 4.0, kInf}) CHECK(lq_restriction_norm(one, b, *unit, p, qu) == doctest::Approx(1 / (2 * M_PI)));

    // Hoelder on a finite measure
    const auto bt = torus_cluster(25.0);
    const auto qt = curve_quadrature(*c, 25.0);
    for (int s = 0; s < 20; ++s) {
        const auto f = random_coeffs(bt.dim(), 100 + s);
        const double n2 = lq_restriction_norm(f, bt, *c, 2, qt);
        const double n4 = lq_restriction_norm(f, bt, *c, 4, qt);
        const double ninf = lq_restriction_norm(f, bt, *c, kInf, qt);
        CHECK(n2 <= std::pow(qt.arclength, 0.25) * n4 * (1 + 1e-12));
        CHECK(n4 <= std::pow(qt.arclength, 0.25) * ninf * (1 + 1e-12));
    }
}

TEST_CASE("matrix-free values and adjoint agree with the dense basis") {
    std::vector<std::pair<ClusterBasis, CurvePtr>> cases = {
        {torus_cluster(14.2), parabola()},
        {sphere_cluster(9), std::make_shared<LatitudeCurve>(1.1)},
        {hermite_cluster(13), std::make_shared<CircleCurve>(Eigen::Vector2d(0, 0), 0.5)}};
    for (const auto& [b, c] : cases) {
        const auto q = model_quadrature(b, c);
        const Eigen::MatrixXcd v = evaluate_basis(b, q.points);
        const auto coef = random_coeffs(b.dim(), 3);
        const Eigen::VectorXcd f = basis_values(b, coef, q.points);
        CHECK((f - v.transpose() * coef).norm() <= 1e-12 * f.norm());
        const auto y = random_coeffs(q.size(), 4);
        const Eigen::VectorXcd a = basis_adjoint(b, y, q.points);
        CHECK((a - v.conjugate() * y).norm() <= 1e-12 * a.norm());
    }
}

TEST_CASE("cap extremizer") {
    const auto c = parabola();
    const auto q = curve_quadrature(*c, 200.0);
    const auto cap = cap_extremizer_torus(200.0, *c, 1.0, 1.0, 0.0, {2.0, 4.0}, &q);
    CHECK(cap.cap_size > 0);
    CHECK(cap.coeffs.norm() == doctest::Approx(1.0));
    const auto s = gram_operator_norm(cap.basis, *c, q);
    CHECK(cap.ratios.at(2.0) <= s.value * (1 + 1e-6));
    // brute-force count of the annular sector
    int count = 0;
    for (int a = -202; a <= 202; ++a)
        for (int bb = -202; bb <= 202; ++bb) {
            const double r = std::hypot(a, bb);
            if (r < 199 || r > 201) continue;
            if (a >= std::cos(cap.width) * r) ++count;
        }
    CHECK(static_cast<int>(cap.cap_size) == count);

    // growth of the cap like lambda^{(sigma+1)/(2sigma+1)}, jitter averaged
    for (double sigma : {1.0, 2.0}) {
        for (double lam : {200.0, 800.0, 3200.0}) {
            double ratio = 0;
            for (double j : {0.0, 0.3, 0.6}) {
                const double l = lam + j;
                const auto cr = cap_extremizer_torus(l, *c, sigma, 1.0, 0.0, {}, &q);
                const double area = 2.0 * cr.width * (std::pow(l + 1, 2) - std::pow(l - 1, 2)) / 2.0;
                ratio += cr.cap_size / area / 3.0;
            }
            CHECK(ratio == doctest::Approx(1.0).epsilon(0.15));
        }
    }
    // tangent (1, 0.6) at t = 0.3: no lattice direction that close inside the annulus
    CHECK_THROWS_AS(cap_extremizer_torus(200.0, *c, 1.0, 1e-9, 0.3, {}, &q), CapError);
}

TEST_CASE("lower bound search") {
    const auto c = parabola();
    const auto b = torus_cluster(40.0);
    const auto q = curve_quadrature(*c, 40.0);
    const auto cap = cap_extremizer_torus(40.0, *c, 1.0, 1.0, 0.0, {4.0}, &q);
    const auto r = lower_bound_search(b, *c, 4.0, q, cap.coeffs, 40);
    CHECK(r.ratio >= r.init_ratio);
    CHECK(cap.ratios.at(4.0) <= r.ratio + 1e-9);
    CHECK(r.init_ratio == doctest::Approx(cap.ratios.at(4.0)).epsilon(1e-12));
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] >= r.history[i - 1]);
    CHECK(r.coeffs.norm() == doctest::Approx(1.0));
    // near q = 2 the ascent recovers the operator norm
    const auto b2 = torus_cluster(12.0);
    const auto q2 = curve_quadrature(*c, 12.0);
    const double top = gram_operator_norm(b2, *c, q2).value;
    const auto near = lower_bound_search(b2, *c, 2.001, q2, random_coeffs(b2.dim(), 9), 400);
    CHECK(near.ratio <= top * std::pow(q2.arclength, 0.0) * 1.01);
    CHECK(near.ratio >= 0.99 * top);
    CHECK_THROWS_AS(lower_bound_search(b2, *c, 2.0, q2, random_coeffs(b2.dim(), 9), 5), DomainError);
}

TEST_CASE("exponent fit") {
    auto make = [](const std::vector<double>& lams, auto f) {
        std::vector<NormSample> out;
        for (double l : lams) {
            NormSample s;
            s.lambda = l;
            s.value = f(l);
            out.push_back(s);
        }
        return out;
    };
    std::vector<double> jittered;
    for (double l : geometric_grid(100, 3200, 8))
        for (double j : {0.0, 0.3, 0.6}) jittered.push_back(l + j);
    const auto exact = fit_exponent(make(jittered, [](double l) { return std::pow(l, 1.0 / 6); }), 3);
    CHECK(std::abs(exact.slope - 1.0 / 6) < 1e-12);
    CHECK(exact.n_points == 8);
    auto wiggle = [](double l) { return 3 * std::pow(l, 0.25) * (1 + 0.1 * std::sin(l)); };
    const auto noisy = fit_exponent(make(jittered, wiggle), 3);
    // direct regression on the group means
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int n = 8;
        for (int g = 0; g < n; ++g) {
            double x = 0, y = 0;
            for (int j = 0; j < 3; ++j) {
                x += std::log(jittered[3 * g + j]) / 3;
                y += std::log(wiggle(jittered[3 * g + j])) / 3;
            }
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(std::abs(noisy.slope - slope) < 1e-12);
    }
    // a 10% oscillation moves an 8-group slope by about 0.02 on this grid
    CHECK(std::abs(noisy.slope - 0.25) < 0.03);
    CHECK(std::isfinite(noisy.stderr_));
    const auto flat = fit_exponent(make(jittered, [](double) { return 2.0; }), 3);
    CHECK(std::abs(flat.slope) < 1e-12);
    CHECK_THROWS_AS(fit_exponent(make({100, 200, 300}, [](double l) { return l; }), 1), FitError);
    CHECK_THROWS_AS(fit_exponent(make({100, 200, 300, 400, 500}, [](double l) { return l; }), 3), FitError);
    const auto g = geometric_grid(100, 3200, 8);
    CHECK(g.front() == doctest::Approx(100));
    CHECK(g.back() == doctest::Approx(3200));
}
