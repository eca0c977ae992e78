#include "restrictlab/restriction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <cstring>

#include <boost/math/quadrature/gauss.hpp>

#include "restrictlab/errors.hpp"
#include "restrictlab/lanczos.hpp"

namespace restrictlab {

namespace {

using cd = std::complex<double>;

double metric_speed(const Curve& c, double t, Metric m) {
    const Eigen::Vector2d d = c.derivative(t, 1);
    if (m == Metric::Euclidean) return d.norm();
    const double s = std::sin(c.point(t)[0]);
    return std::sqrt(d[0] * d[0] + s * s * d[1] * d[1]);
}

// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
    std::vector<double> x, w;
};

const GaussRule& gauss16() {
    static const GaussRule rule = [] {
        using G = boost::math::quadrature::gauss<double, 16>;
        GaussRule r;
        const auto& ax = G::abscissa();
        const auto& wt = G::weights();
        for (std::size_t i = ax.size(); i-- > 0;) {
            r.x.push_back(-ax[i]);
            r.w.push_back(wt[i]);
        }
        for (std::size_t i = 0; i < ax.size(); ++i) {
            r.x.push_back(ax[i]);
            r.w.push_back(wt[i]);
        }
        return r;
    }();
    return rule;
}

template <class F>
double gl20(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

// Cumulative arclength on a fine uniform grid plus inversion by Newton.
class ArclengthMap {
public:
    ArclengthMap(const Curve& c, Metric m, int cells = 256) : c_(c), m_(m), cells_(cells) {
        h_ = (c.b() - c.a()) / cells;
        cum_.assign(static_cast<std::size_t>(cells) + 1, 0.0);
        for (int i = 0; i < cells; ++i) {
            const double t0 = c.a() + i * h_;
            cum_[i + 1] = cum_[i] + gl20([&](double t) { return speed(t); }, t0, t0 + h_);
        }
    }
    double total() const { return cum_.back(); }
    double speed(double t) const { return metric_speed(c_, t, m_); }
    double s_of_t(double t) const {
        int i = std::clamp(static_cast<int>((t - c_.a()) / h_), 0, cells_ - 1);
        const double t0 = c_.a() + i * h_;
        return cum_[i] + gl20([&](double u) { return speed(u); }, t0, t);
    }
    double t_of_s(double s) const {
        if (s <= 0) return c_.a();
        if (s >= total()) return c_.b();
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
        const int i = std::clamp(static_cast<int>(it - cum_.begin()) - 1, 0, cells_ - 1);
        double lo = c_.a() + i * h_, hi = lo + h_;
        double t = lo + (s - cum_[i]) / std::max(cum_[i + 1] - cum_[i], 1e-300) * h_;
        for (int it2 = 0; it2 < 30; ++it2) {
            const double g = s_of_t(t) - s;
            if (g > 0) hi = t; else lo = t;
            double tn = t - g / std::max(speed(t), 1e-300);
            if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
            if (std::abs(tn - t) <= 1e-15 * std::max(1.0, std::abs(t))) return tn;
            t = tn;
        }
        return t;
    }

private:
    const Curve& c_;
    Metric m_;
    int cells_;
    double h_;
    std::vector<double> cum_;
};

QuadratureRule build_rule(const Curve& c, const ArclengthMap& map, Metric m, int panels) {
    const GaussRule& g = gauss16();
    QuadratureRule r;
    r.metric = m;
    r.panels = panels;
    std::vector<double> edges(static_cast<std::size_t>(panels) + 1);
    const double total = map.total();
    for (int j = 0; j <= panels; ++j) edges[j] = map.t_of_s(total * j / panels);
    edges.front() = c.a();
    edges.back() = c.b();
    for (int j = 0; j < panels; ++j) {
        const double a = edges[j], b = edges[j + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t k = 0; k < g.x.size(); ++k) {
            const double t = mid + half * g.x[k];
            r.nodes.push_back(t);
            r.weights.push_back(half * g.w[k] * map.speed(t));
            r.points.push_back(c.point(t));
        }
    }
    r.arclength = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
    return r;
}

cd probe(const QuadratureRule& r, double freq, const Eigen::Vector2d& dir) {
    cd acc = 0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += r.weights[i] * std::polar(1.0, freq * dir.dot(r.points[i]));
    return acc;
}

}  // namespace

QuadratureRule curve_quadrature(const Curve& curve, double lambda_max, Metric metric, double nodes_per_wavelength,
                                int min_nodes) {
    if (!(lambda_max > 0) || !std::isfinite(lambda_max)) throw DomainError("lambda_max must be positive");
    if (curve.min_speed() <= 0) throw DomainError("curve is not regular");
    const ArclengthMap map(curve, metric);
    const double length = map.total();
    const int per_panel = static_cast<int>(gauss16().x.size());
    const double wanted = std::max<double>(min_nodes, nodes_per_wavelength * length * lambda_max / (2.0 * M_PI));
    int panels = std::max(1, static_cast<int>(std::ceil(wanted / per_panel)));
    // Probe plane waves at twice the top frequency: Gram integrands are
    // products of two cluster functions.
    const double freq = 2.0 * lambda_max + 2.0;
    const Eigen::Vector2d dirs[3] = {{1.0, 0.0}, {0.0, 1.0}, {0.6, 0.8}};
    for (int refine = 0; refine <= 3; ++refine) {
        QuadratureRule r = build_rule(curve, map, metric, panels);
        const QuadratureRule fine = build_rule(curve, map, metric, 2 * panels);
        double err = std::abs(r.arclength - fine.arclength);
        for (const auto& d : dirs) err = std::max(err, std::abs(probe(r, freq, d) - probe(fine, freq, d)));
        if (err <= 1e-9 * length) {
            r.lambda_max = lambda_max;
            r.refinements = refine;
            return r;
        }
        panels *= 2;
    }
    throw QuadratureError("quadrature on " + curve.describe() + " did not settle after 3 refinements");
}

CurvePtr model_curve(const ClusterBasis& basis, const CurvePtr& curve) {
    if (basis.family == Family::Hermite) return std::make_shared<DilatedCurve>(curve, basis.lambda);
    return curve;
}

QuadratureRule model_quadrature(const ClusterBasis& basis, const CurvePtr& curve, double oversample) {
    const CurvePtr mc = model_curve(basis, curve);
    return curve_quadrature(*mc, basis.lambda * oversample,
                            basis.family == Family::Sphere ? Metric::Sphere : Metric::Euclidean);
}

// ---------------------------------------------------------------------------
// Torus kernels. Points are processed in blocks of kBlock with power tables
// z^k, k in [-K, K], stored structure-of-arrays so the inner loops vectorize
// across the block.

namespace {

constexpr int kBlock = 8;

struct PowerTable {
    int K = 0;
    std::vector<double> re, im;  // index (k + K) * kBlock + p

    // powers for k in [-kmax, kmax], or [0, kmax] when `nonnegative`
    void build(int kmax, const double* x, int np, bool nonnegative = false) {
        K = kmax;
        const std::size_t n = static_cast<std::size_t>(2 * K + 1) * kBlock;
        if (re.size() != n) {
            re.assign(n, 0.0);
            im.assign(n, 0.0);
        }
        for (int p = 0; p < kBlock; ++p) {
            const double xp = p < np ? x[p] : 0.0;
            const cd z = std::polar(1.0, xp);
            cd cur = 1.0;
            for (int k = 0; k <= K; ++k) {
                if (k % 64 == 0) cur = std::polar(1.0, k * xp);
                const std::size_t ip = static_cast<std::size_t>(K + k) * kBlock + p;
                re[ip] = cur.real();
                im[ip] = cur.imag();
                if (!nonnegative) {
                    const std::size_t in = static_cast<std::size_t>(K - k) * kBlock + p;
                    re[in] = cur.real();
                    im[in] = -cur.imag();
                }
                cur *= z;
            }
        }
    }
    const double* r(int k) const { return re.data() + static_cast<std::size_t>(k + K) * kBlock; }
    const double* i(int k) const { return im.data() + static_cast<std::size_t>(k + K) * kBlock; }
};

int rows_kmax(const std::vector<LatticeRow>& rows) {
    int k = 0;
    for (const auto& r : rows) k = std::max({k, std::abs(r.k1), std::abs(r.k2lo), std::abs(r.k2hi)});
    return k;
}

// f_i = sum_k c_k e^{i k.x_i}
Eigen::VectorXcd torus_forward(const std::vector<LatticeRow>& rows, const cd* c,
                               const std::vector<Eigen::Vector2d>& pts) {
    const int K = rows_kmax(rows);
    const std::size_t n = pts.size();
    Eigen::VectorXcd out(static_cast<Eigen::Index>(n));
    PowerTable e1, e2;
    double x1[kBlock], x2[kBlock];
    for (std::size_t b0 = 0; b0 < n; b0 += kBlock) {
        const int np = static_cast<int>(std::min<std::size_t>(kBlock, n - b0));
        for (int p = 0; p < np; ++p) {
            x1[p] = pts[b0 + p][0];
            x2[p] = pts[b0 + p][1];
        }
        e1.build(K, x1, np);
        e2.build(K, x2, np);
        double fr[kBlock] = {}, fi[kBlock] = {};
        for (const auto& row : rows) {
            double sr[kBlock] = {}, si[kBlock] = {};
            const cd* cc = c + row.offset;
            for (int k2 = row.k2lo; k2 <= row.k2hi; ++k2, ++cc) {
                const double cr = cc->real(), ci = cc->imag();
                const double* er = e2.r(k2);
                const double* ei = e2.i(k2);
                for (int p = 0; p < kBlock; ++p) {
                    sr[p] += cr * er[p] - ci * ei[p];
                    si[p] += cr * ei[p] + ci * er[p];
                }
            }
            const double* er = e1.r(row.k1);
            const double* ei = e1.i(row.k1);
            for (int p = 0; p < kBlock; ++p) {
                fr[p] += sr[p] * er[p] - si[p] * ei[p];
                fi[p] += sr[p] * ei[p] + si[p] * er[p];
            }
        }
        for (int p = 0; p < np; ++p) out[static_cast<Eigen::Index>(b0 + p)] = cd(fr[p], fi[p]);
    }
    return out;
}

// out_k = sum_i y_i e^{-i k.x_i}
Eigen::VectorXcd torus_adjoint(const std::vector<LatticeRow>& rows, std::size_t n_coef, const cd* y,
                               const std::vector<Eigen::Vector2d>& pts) {
    const int K = rows_kmax(rows);
    const std::size_t n = pts.size();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_coef));
    cd* o = out.data();
    PowerTable e1, e2;
    double x1[kBlock], x2[kBlock];
    for (std::size_t b0 = 0; b0 < n; b0 += kBlock) {
        const int np = static_cast<int>(std::min<std::size_t>(kBlock, n - b0));
        double yr[kBlock] = {}, yi[kBlock] = {};
        for (int p = 0; p < np; ++p) {
            x1[p] = pts[b0 + p][0];
            x2[p] = pts[b0 + p][1];
            yr[p] = y[b0 + p].real();
            yi[p] = y[b0 + p].imag();
        }
        e1.build(K, x1, np);
        e2.build(K, x2, np);
        for (const auto& row : rows) {
            // u = y conj(z1^{k1})
            double ur[kBlock], ui[kBlock];
            const double* er1 = e1.r(row.k1);
            const double* ei1 = e1.i(row.k1);
            for (int p = 0; p < kBlock; ++p) {
                ur[p] = yr[p] * er1[p] + yi[p] * ei1[p];
                ui[p] = yi[p] * er1[p] - yr[p] * ei1[p];
            }
            cd* oo = o + row.offset;
            for (int k2 = row.k2lo; k2 <= row.k2hi; ++k2, ++oo) {
                const double* er = e2.r(k2);
                const double* ei = e2.i(k2);
                double ar = 0, ai = 0;
                for (int p = 0; p < kBlock; ++p) {
                    ar += ur[p] * er[p] + ui[p] * ei[p];
                    ai += ui[p] * er[p] - ur[p] * ei[p];
                }
                *oo += cd(ar, ai);
            }
        }
    }
    return out;
}

// y = (sc^2) B^T W B x for the real-form half lattice basis, fused per
// point block so each power table is built once per product.
void torus_real_gram(const std::vector<LatticeRow>& rows, const cd* g, cd* out, std::size_t n_coef,
                     const QuadratureRule& quad, double sc2) {
    const int K = rows_kmax(rows);
    const std::size_t n = quad.size();
    std::fill(out, out + n_coef, cd(0.0));
    PowerTable e1, e2;
    double x1[kBlock], x2[kBlock];
    for (std::size_t b0 = 0; b0 < n; b0 += kBlock) {
        const int np = static_cast<int>(std::min<std::size_t>(kBlock, n - b0));
        double wt[kBlock] = {};
        for (int p = 0; p < np; ++p) {
            x1[p] = quad.points[b0 + p][0];
            x2[p] = quad.points[b0 + p][1];
            wt[p] = quad.weights[b0 + p] * sc2;
        }
        e1.build(K, x1, np, true);
        e2.build(K, x2, np);
        double fr[kBlock] = {};
        for (const auto& row : rows) {
            double sr[kBlock] = {}, si[kBlock] = {};
            const cd* cc = g + row.offset;
            for (int k2 = row.k2lo; k2 <= row.k2hi; ++k2, ++cc) {
                const double cr = cc->real(), ci = cc->imag();
                const double* er = e2.r(k2);
                const double* ei = e2.i(k2);
                for (int p = 0; p < kBlock; ++p) {
                    sr[p] += cr * er[p] - ci * ei[p];
                    si[p] += cr * ei[p] + ci * er[p];
                }
            }
            const double* er = e1.r(row.k1);
            const double* ei = e1.i(row.k1);
            for (int p = 0; p < kBlock; ++p) fr[p] += sr[p] * er[p] - si[p] * ei[p];
        }
        double yv[kBlock];
        for (int p = 0; p < kBlock; ++p) yv[p] = wt[p] * fr[p];
        for (const auto& row : rows) {
            double ur[kBlock], ui[kBlock];
            const double* er1 = e1.r(row.k1);
            const double* ei1 = e1.i(row.k1);
            for (int p = 0; p < kBlock; ++p) {
                ur[p] = yv[p] * er1[p];
                ui[p] = -yv[p] * ei1[p];
            }
            cd* oo = out + row.offset;
            for (int k2 = row.k2lo; k2 <= row.k2hi; ++k2, ++oo) {
                const double* er = e2.r(k2);
                const double* ei = e2.i(k2);
                double ar = 0, ai = 0;
                for (int p = 0; p < kBlock; ++p) {
                    ar += ur[p] * er[p] + ui[p] * ei[p];
                    ai += ui[p] * er[p] - ur[p] * ei[p];
                }
                *oo += cd(ar, ai);
            }
        }
    }
}

bool symmetric_cluster(const ClusterBasis& b) {
    std::vector<std::array<int, 2>> a = b.indices, m;
    for (const auto& k : a) m.push_back({-k[0], -k[1]});
    std::sort(a.begin(), a.end());
    std::sort(m.begin(), m.end());
    return a == m && !std::binary_search(a.begin(), a.end(), std::array<int, 2>{0, 0});
}

// Half lattice {k1 > 0} u {k1 = 0, k2 > 0}; the cluster is symmetric under
// k -> -k, so real-valued cluster functions are parametrized by complex
// coefficients on this half.
std::vector<LatticeRow> half_rows(const ClusterBasis& b, std::size_t& count) {
    std::vector<LatticeRow> out;
    count = 0;
    for (const auto& r : b.rows) {
        LatticeRow h = r;
        if (r.k1 < 0) continue;
        if (r.k1 == 0) {
            if (r.k2hi <= 0) continue;
            h.k2lo = std::max(1, r.k2lo);
        }
        h.offset = count;
        count += static_cast<std::size_t>(h.k2hi - h.k2lo + 1);
        out.push_back(h);
    }
    return out;
}

// Orthonormal Hermite functions with precomputed recurrence coefficients.
class HermiteEval {
public:
    explicit HermiteEval(int n) : n_(n), a_(static_cast<std::size_t>(n) + 1), b_(static_cast<std::size_t>(n) + 1) {
        for (int j = 0; j <= n; ++j) {
            a_[j] = std::sqrt(2.0 / (j + 1.0));
            b_[j] = std::sqrt(j / (j + 1.0));
        }
    }
    void operator()(double x, double* out) const {
        constexpr double big = 0x1p+300, log_big = 207.94415416798358;
        double scale = -0.5 * x * x;
        double prev = 0.0, cur = 0.75112554446494248;  // pi^{-1/4}
        double factor = std::exp(scale);
        out[0] = cur * factor;
        for (int j = 0; j < n_; ++j) {
            const double next = x * a_[j] * cur - b_[j] * prev;
            prev = cur;
            cur = next;
            if (std::abs(cur) > big) {
                cur /= big;
                prev /= big;
                scale += log_big;
                factor = std::exp(scale);
            }
            out[j + 1] = cur * factor;
        }
    }

private:
    int n_;
    std::vector<double> a_, b_;
};

}  // namespace

Eigen::VectorXcd basis_values(const ClusterBasis& basis, const Eigen::VectorXcd& coeffs,
                              const std::vector<Eigen::Vector2d>& points) {
    if (static_cast<std::size_t>(coeffs.size()) != basis.dim()) throw DomainError("coefficient length mismatch");
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    switch (basis.family) {
    case Family::Torus:
        return torus_forward(basis.rows, coeffs.data(), points) / (2.0 * M_PI);
    case Family::Sphere: {
        Eigen::VectorXcd out(n);
        const int l = basis.degree;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto p = normalized_legendre_row(l, points[i][0]);
            cd acc = 0;
            for (int m = -l; m <= l; ++m) {
                const double v = p[std::abs(m)] * (m < 0 && (-m) % 2 == 1 ? -1.0 : 1.0);
                acc += coeffs[m + l] * v * std::polar(1.0, m * points[i][1]);
            }
            out[i] = acc;
        }
        return out;
    }
    case Family::Hermite: {
        Eigen::VectorXcd out(n);
        const int deg = basis.degree;
        HermiteEval he(deg);
        std::vector<double> h1(deg + 1), h2(deg + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            he(points[i][0], h1.data());
            he(points[i][1], h2.data());
            cd acc = 0;
            for (int a = 0; a <= deg; ++a) acc += coeffs[a] * (h1[a] * h2[deg - a]);
            out[i] = acc;
        }
        return out;
    }
    }
    return {};
}

Eigen::VectorXcd basis_adjoint(const ClusterBasis& basis, const Eigen::VectorXcd& y,
                               const std::vector<Eigen::Vector2d>& points) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    if (y.size() != n) throw DomainError("value length mismatch");
    switch (basis.family) {
    case Family::Torus:
        return torus_adjoint(basis.rows, basis.dim(), y.data(), points) / (2.0 * M_PI);
    case Family::Sphere: {
        const int l = basis.degree;
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(2 * l + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto p = normalized_legendre_row(l, points[i][0]);
            for (int m = -l; m <= l; ++m) {
                const double v = p[std::abs(m)] * (m < 0 && (-m) % 2 == 1 ? -1.0 : 1.0);
                out[m + l] += y[i] * v * std::polar(1.0, -m * points[i][1]);
            }
        }
        return out;
    }
    case Family::Hermite: {
        const int deg = basis.degree;
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(deg + 1);
        HermiteEval he(deg);
        std::vector<double> h1(deg + 1), h2(deg + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            he(points[i][0], h1.data());
            he(points[i][1], h2.data());
            for (int a = 0; a <= deg; ++a) out[a] += y[i] * (h1[a] * h2[deg - a]);
        }
        return out;
    }
    }
    return {};
}

// ---------------------------------------------------------------------------

bool is_full_latitude(const Curve& curve, double* theta0) {
    const auto* lat = dynamic_cast<const LatitudeCurve*>(&curve);
    if (lat == nullptr) return false;
    if (std::abs((curve.b() - curve.a()) - 2.0 * M_PI) > 1e-12) return false;
    if (theta0 != nullptr) *theta0 = lat->theta0();
    return true;
}

double latitude_norm_squared(int l, double theta0) {
    const auto p = normalized_legendre_row(l, theta0);
    double mx = 0;
    for (double v : p) mx = std::max(mx, v * v);
    return 2.0 * M_PI * std::sin(theta0) * mx;
}

double dense_gram_norm(const ClusterBasis& basis, const QuadratureRule& quad) {
    const Eigen::MatrixXcd b = evaluate_basis(basis, quad.points);
    const Eigen::Map<const Eigen::VectorXd> w(quad.weights.data(), static_cast<Eigen::Index>(quad.size()));
    const Eigen::MatrixXcd g = b * w.asDiagonal() * b.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()[es.eigenvalues().size() - 1]));
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, double lambda) {
    std::uint64_t bits;
    std::memcpy(&bits, &lambda, sizeof bits);
    std::uint64_t z = seed ^ (bits + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

template <class Scalar>
void fill_meta(NormSample& s, const LanczosResult<Scalar>& r) {
    s.value = std::sqrt(std::max(0.0, r.top));
    s.meta["iterations"] = r.iterations;
    s.meta["residual"] = r.residual;
    s.meta["min_ritz"] = r.min_ritz;
    s.meta["top_eigenvalue"] = r.top;
    s.meta["converged"] = r.converged ? 1.0 : 0.0;
    s.flagged = !r.converged;
    s.method = "lanczos";
}

}  // namespace

NormSample gram_operator_norm(const ClusterBasis& basis, const Curve& curve, const QuadratureRule& quad,
                              const GramOptions& opt) {
    NormSample s;
    s.family = basis.family;
    s.lambda = basis.lambda;
    s.group_lambda = basis.lambda;
    s.q = 2.0;
    s.meta["dim"] = static_cast<double>(basis.dim());
    s.meta["quad_n"] = static_cast<double>(quad.size());
    const std::uint64_t seed = mix_seed(opt.seed, basis.lambda);
    const Eigen::Map<const Eigen::VectorXd> w(quad.weights.data(), static_cast<Eigen::Index>(quad.size()));
    const double length = w.sum();

    double theta0 = 0;
    if (basis.family == Family::Sphere && opt.allow_shortcut && is_full_latitude(curve, &theta0)) {
        const auto p = normalized_legendre_row(basis.degree, theta0);
        double mx = 0, tr = 0;
        for (std::size_t m = 0; m < p.size(); ++m) {
            mx = std::max(mx, p[m] * p[m]);
            tr += (m == 0 ? 1.0 : 2.0) * p[m] * p[m];
        }
        const double arc = 2.0 * M_PI * std::sin(theta0);
        s.value = std::sqrt(arc * mx);
        s.meta["trace"] = arc * tr;
        s.meta["iterations"] = 0;
        s.meta["residual"] = 0;
        s.meta["min_ritz"] = 0;
        s.meta["top_eigenvalue"] = arc * mx;
        s.meta["converged"] = 1;
        s.method = "latitude";
        return s;
    }

    switch (basis.family) {
    case Family::Torus: {
        if (!symmetric_cluster(basis)) {
            // no real form available; plain complex Lanczos
            auto apply = [&](const auto& x, Eigen::VectorXcd& y) {
                const Eigen::VectorXcd xx = x;
                Eigen::VectorXcd f = torus_forward(basis.rows, xx.data(), quad.points);
                for (Eigen::Index i = 0; i < f.size(); ++i) f[i] *= w[i] / (4.0 * M_PI * M_PI);
                y = torus_adjoint(basis.rows, basis.dim(), f.data(), quad.points);
            };
            const auto r = lanczos_top<cd>(apply, static_cast<Eigen::Index>(basis.dim()), seed, opt.tol, opt.max_iter);
            fill_meta(s, r);
            s.meta["trace"] = static_cast<double>(basis.dim()) * length / (4.0 * M_PI * M_PI);
            break;
        }
        std::size_t h = 0;
        const auto rows = half_rows(basis, h);
        const double sc = std::sqrt(2.0) / (2.0 * M_PI);
        // x holds (Re, Im) pairs of the half-lattice coefficients
        auto apply = [&](const auto& x, Eigen::VectorXd& y) {
            const Eigen::VectorXd xx = x;
            y.resize(static_cast<Eigen::Index>(2 * h));
            torus_real_gram(rows, reinterpret_cast<const cd*>(xx.data()), reinterpret_cast<cd*>(y.data()), h, quad,
                            sc * sc);
        };
        const auto r = lanczos_top<double>(apply, static_cast<Eigen::Index>(2 * h), seed, opt.tol, opt.max_iter);
        fill_meta(s, r);
        s.meta["trace"] = static_cast<double>(basis.dim()) * length / (4.0 * M_PI * M_PI);
        break;
    }
    case Family::Hermite: {
        const int deg = basis.degree;
        HermiteEval he(deg);
        std::vector<double> h1(deg + 1), h2(deg + 1), prod(deg + 1);
        double trace = 0;
        bool first = true;
        auto apply = [&](const auto& x, Eigen::VectorXd& y) {
            y = Eigen::VectorXd::Zero(deg + 1);
            for (std::size_t i = 0; i < quad.size(); ++i) {
                he(quad.points[i][0], h1.data());
                he(quad.points[i][1], h2.data());
                double f = 0;
                for (int a = 0; a <= deg; ++a) {
                    prod[a] = h1[a] * h2[deg - a];
                    f += x[a] * prod[a];
                }
                const double wf = quad.weights[i] * f;
                for (int a = 0; a <= deg; ++a) y[a] += wf * prod[a];
                if (first) {
                    double t = 0;
                    for (int a = 0; a <= deg; ++a) t += prod[a] * prod[a];
                    trace += quad.weights[i] * t;
                }
            }
            first = false;
        };
        const auto r = lanczos_top<double>(apply, deg + 1, seed, opt.tol, opt.max_iter);
        fill_meta(s, r);
        s.meta["trace"] = trace;
        break;
    }
    case Family::Sphere: {
        const Eigen::MatrixXcd b = evaluate_basis(basis, quad.points);
        auto apply = [&](const auto& x, Eigen::VectorXcd& y) {
            const Eigen::VectorXcd f = b.transpose() * x;
            y = b.conjugate() * w.cast<cd>().cwiseProduct(f);
        };
        const auto r = lanczos_top<cd>(apply, static_cast<Eigen::Index>(basis.dim()), seed, opt.tol, opt.max_iter);
        fill_meta(s, r);
        s.meta["trace"] = (b.cwiseAbs2() * w).sum();
        break;
    }
    }
    return s;
}

double lq_restriction_norm(const Eigen::VectorXcd& coeffs, const ClusterBasis& basis, const Curve& curve, double q,
                           const QuadratureRule& quad) {
    if (!(q >= 2.0)) throw DomainError("q must lie in [2, inf]");
    if (!coeffs.allFinite()) throw DomainError("coefficients must be finite");
    const Eigen::VectorXcd f = basis_values(basis, coeffs, quad.points);
    if (std::isinf(q)) {
        double mx = f.cwiseAbs().maxCoeff();
        const QuadratureRule fine =
            curve_quadrature(curve, 4.0 * std::max(quad.lambda_max, 1.0), quad.metric);
        mx = std::max(mx, basis_values(basis, coeffs, fine.points).cwiseAbs().maxCoeff());
        return mx;
    }
    double acc = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) acc += quad.weights[i] * std::pow(std::abs(f[i]), q);
    return std::pow(acc, 1.0 / q);
}

CapResult cap_extremizer_torus(double lambda, const Curve& curve, double sigma, double c_width, double t0,
                               const std::vector<double>& qs, const QuadratureRule* quad) {
    if (!(sigma >= 1.0)) throw DomainError("cap extremizer needs sigma >= 1");
    CapResult res;
    res.basis = torus_cluster(lambda);
    const Eigen::Vector2d tangent = curve.derivative(t0, 1).normalized();
    const Eigen::Vector2d x0 = curve.point(t0);
    const double expo = std::isinf(sigma) ? 0.5 : sigma / (2.0 * sigma + 1.0);
    double c = c_width;
    std::vector<std::size_t> cap;
    for (int attempt = 0; attempt <= 3; ++attempt, c *= 2.0) {
        const double width = c * std::pow(lambda, -expo);
        const double cosw = std::cos(width);
        cap.clear();
        for (std::size_t a = 0; a < res.basis.dim(); ++a) {
            const Eigen::Vector2d k(res.basis.indices[a][0], res.basis.indices[a][1]);
            if (k.dot(tangent) >= cosw * k.norm()) cap.push_back(a);
        }
        if (!cap.empty()) {
            res.width = width;
            res.c_width = c;
            break;
        }
    }
    if (cap.empty()) throw CapError("no cluster frequency inside the cap at lambda = " + std::to_string(lambda));
    res.cap_size = cap.size();
    res.coeffs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(res.basis.dim()));
    const double amp = 1.0 / std::sqrt(static_cast<double>(cap.size()));
    for (std::size_t a : cap) {
        const double ph = res.basis.indices[a][0] * x0[0] + res.basis.indices[a][1] * x0[1];
        res.coeffs[static_cast<Eigen::Index>(a)] = std::polar(amp, -ph);
    }
    QuadratureRule own;
    if (quad == nullptr) {
        own = curve_quadrature(curve, lambda);
        quad = &own;
    }
    for (double q : qs) res.ratios[q] = lq_restriction_norm(res.coeffs, res.basis, curve, q, *quad);
    return res;
}

SearchResult lower_bound_search(const ClusterBasis& basis, const Curve& curve, double q, const QuadratureRule& quad,
                                const Eigen::VectorXcd& init, int steps) {
    (void)curve;
    if (!(q > 2.0) || std::isinf(q)) throw DomainError("lower_bound_search needs q in (2, inf)");
    auto objective = [&](const Eigen::VectorXcd& c, Eigen::VectorXcd* f_out) {
        Eigen::VectorXcd f = basis_values(basis, c, quad.points);
        double acc = 0;
        for (Eigen::Index i = 0; i < f.size(); ++i) acc += quad.weights[i] * std::pow(std::abs(f[i]), q);
        if (f_out) *f_out = std::move(f);
        return std::pow(acc, 1.0 / q);
    };
    SearchResult res;
    Eigen::VectorXcd c = init.normalized();
    Eigen::VectorXcd f;
    double best = objective(c, &f);
    res.init_ratio = best;
    double eta = 0.1;
    for (int s = 0; s < steps; ++s) {
        ++res.steps;
        Eigen::VectorXcd y(f.size());
        for (Eigen::Index i = 0; i < f.size(); ++i)
            y[i] = quad.weights[i] * std::pow(std::abs(f[i]), q - 2.0) * f[i];
        Eigen::VectorXcd g = basis_adjoint(basis, y, quad.points);
        g -= c * c.dot(g);  // tangent to the sphere (real part of <c, g> is what matters)
        const double gn = g.norm();
        if (!(gn > 0)) break;
        const Eigen::VectorXcd trial = (c + eta * g / gn).normalized();
        Eigen::VectorXcd ft;
        const double val = objective(trial, &ft);
        if (val > best) {
            const double gain = (val - best) / best;
            c = trial;
            f = std::move(ft);
            best = val;
            ++res.accepted;
            res.history.push_back(best);
            if (gain < 1e-6) break;
        } else {
            eta *= 0.5;
            if (eta < 1e-8) break;
        }
    }
    res.coeffs = c;
    res.ratio = best;
    return res;
}

ExponentFit fit_exponent(const std::vector<NormSample>& samples, int jitter_group) {
    if (jitter_group < 1) throw DomainError("jitter group must be >= 1");
    if (samples.size() % static_cast<std::size_t>(jitter_group) != 0)
        throw FitError("sample count is not a multiple of the jitter group");
    ExponentFit fit;
    for (std::size_t g = 0; g < samples.size(); g += jitter_group) {
        double ll = 0, lv = 0;
        for (int j = 0; j < jitter_group; ++j) {
            const auto& s = samples[g + j];
            if (!(s.value > 0) || !(s.lambda > 0)) throw FitError("non-positive sample");
            ll += std::log(s.lambda);
            lv += std::log(s.value);
        }
        fit.log_lambda.push_back(ll / jitter_group);
        fit.log_value.push_back(lv / jitter_group);
    }
    const int n = static_cast<int>(fit.log_lambda.size());
    if (n < 4) throw FitError("need at least 4 lambda groups, got " + std::to_string(n));
    const double mx = std::accumulate(fit.log_lambda.begin(), fit.log_lambda.end(), 0.0) / n;
    const double my = std::accumulate(fit.log_value.begin(), fit.log_value.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (fit.log_lambda[i] - mx) * (fit.log_lambda[i] - mx);
        sxy += (fit.log_lambda[i] - mx) * (fit.log_value[i] - my);
    }
    if (!(sxx > 0)) throw FitError("lambda groups are not distinct");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0;
    for (int i = 0; i < n; ++i) {
        const double r = fit.log_value[i] - (fit.intercept + fit.slope * fit.log_lambda[i]);
        fit.residuals.push_back(r);
        ssr += r * r;
    }
    fit.stderr_ = std::sqrt(ssr / (n - 2) / sxx);
    fit.n_points = n;
    return fit;
}

std::vector<double> geometric_grid(double lo, double hi, int groups) {
    if (groups < 2 || !(hi > lo) || !(lo > 0)) throw DomainError("bad grid");
    std::vector<double> out;
    for (int i = 0; i < groups; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (groups - 1)));
    return out;
}

}  // namespace restrictlab
