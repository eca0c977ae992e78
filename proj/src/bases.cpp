#include "restrictlab/bases.hpp"

#include <cmath>
#include <limits>

#include "restrictlab/errors.hpp"

namespace restrictlab {

const char* to_string(Family f) {
    switch (f) {
    case Family::Torus: return "torus";
    case Family::Sphere: return "sphere";
    case Family::Hermite: return "hermite";
    }
    return "?";
}

ClusterBasis torus_cluster(double lambda, double w0, double w1) {
    if (!(w1 > w0)) throw DomainError("torus cluster window must have w0 < w1");
    const double lo = std::max(0.0, lambda + w0), hi = lambda + w1;
    const double lo2 = lo * lo, hi2 = hi * hi;
    ClusterBasis b;
    b.family = Family::Torus;
    b.lambda = lambda;
    const int kmax = static_cast<int>(std::floor(hi));
    auto inside = [&](long long k1, long long k2) {
        const double r2 = static_cast<double>(k1 * k1 + k2 * k2);
        return r2 >= lo2 && r2 <= hi2;
    };
    for (int k1 = -kmax; k1 <= kmax; ++k1) {
        const double rem_hi = hi2 - static_cast<double>(k1) * k1;
        if (rem_hi < 0) continue;
        int top = static_cast<int>(std::floor(std::sqrt(rem_hi)));
        while (!inside(k1, top) && static_cast<double>(k1) * k1 + static_cast<double>(top) * top > hi2) --top;
        while (static_cast<double>(k1) * k1 + static_cast<double>(top + 1) * (top + 1) <= hi2) ++top;
        const double rem_lo = lo2 - static_cast<double>(k1) * k1;
        int bottom = rem_lo <= 0 ? 0 : static_cast<int>(std::ceil(std::sqrt(rem_lo)));
        while (bottom > 0 && static_cast<double>(k1) * k1 + static_cast<double>(bottom - 1) * (bottom - 1) >= lo2) --bottom;
        while (static_cast<double>(k1) * k1 + static_cast<double>(bottom) * bottom < lo2) ++bottom;
        if (bottom > top) continue;
        auto add_row = [&](int a, int c) {
            b.rows.push_back({k1, a, c, b.indices.size()});
            for (int k2 = a; k2 <= c; ++k2) b.indices.push_back({k1, k2});
        };
        if (bottom == 0) {
            add_row(-top, top);
        } else {
            add_row(-top, -bottom);
            add_row(bottom, top);
        }
    }
    if (b.indices.empty()) throw EmptyClusterError("torus cluster at lambda = " + std::to_string(lambda) + " is empty");
    return b;
}

ClusterBasis torus_subset(const ClusterBasis& basis, const std::function<bool(int, int)>& keep) {
    if (basis.family != Family::Torus) throw DomainError("torus_subset needs a torus cluster");
    ClusterBasis out;
    out.family = Family::Torus;
    out.lambda = basis.lambda;
    for (const auto& k : basis.indices) {
        if (!keep(k[0], k[1])) continue;
        if (!out.rows.empty() && out.rows.back().k1 == k[0] && out.rows.back().k2hi + 1 == k[1]) {
            ++out.rows.back().k2hi;
        } else {
            out.rows.push_back({k[0], k[1], k[1], out.indices.size()});
        }
        out.indices.push_back(k);
    }
    if (out.indices.empty()) throw EmptyClusterError("torus sub-cluster is empty");
    return out;
}

ClusterBasis sphere_cluster(int l) {
    if (l < 1 || l > 5000) throw DomainError("sphere cluster degree must be in [1, 5000]");
    ClusterBasis b;
    b.family = Family::Sphere;
    b.degree = l;
    b.lambda = std::sqrt(static_cast<double>(l) * (l + 1));
    for (int m = -l; m <= l; ++m) b.indices.push_back({l, m});
    return b;
}

ClusterBasis hermite_cluster(int n) {
    if (n < 0 || n > 6000) throw DomainError("hermite cluster level must be in [0, 6000]");
    ClusterBasis b;
    b.family = Family::Hermite;
    b.degree = n;
    b.lambda = std::sqrt(2.0 * n + 2.0);
    for (int n1 = 0; n1 <= n; ++n1) b.indices.push_back({n1, n - n1});
    return b;
}

namespace {

constexpr double kBig = 0x1p+300;
constexpr double kLogBig = 207.94415416798358;  // 300 log 2

}  // namespace

std::vector<double> normalized_legendre_row(int l, double theta) {
    const double x = std::cos(theta), s = std::sin(theta);
    std::vector<double> out(static_cast<std::size_t>(l) + 1, 0.0);
    const bool pole = std::abs(s) == 0.0 || std::abs(x) == 1.0;
    for (int m = 0; m <= l; ++m) {
        if (pole && m > 0) continue;  // exact zero at the poles
        // log |P_m^m| = 1/2 log((2m+1)/(4 pi) prod_{k<=m} (2k-1)/(2k)) + m log sin
        double logv = 0.5 * std::log((2.0 * m + 1.0) / (4.0 * M_PI));
        for (int k = 1; k <= m; ++k) logv += 0.5 * std::log((2.0 * k - 1.0) / (2.0 * k));
        if (m > 0) logv += m * std::log(std::abs(s));
        const double sign = (m % 2 == 1 ? -1.0 : 1.0) * (s < 0 && m % 2 == 1 ? -1.0 : 1.0);
        // carry mantissa p with value p * exp(scale)
        double scale = logv;
        double p_prev = 0.0, p = sign;
        if (l > m) {
            double p1 = x * std::sqrt(2.0 * m + 3.0) * p;
            p_prev = p;
            p = p1;
            for (int j = m + 2; j <= l; ++j) {
                const double a = std::sqrt((4.0 * j * j - 1.0) / (static_cast<double>(j) * j - static_cast<double>(m) * m));
                const double bcoef = std::sqrt((static_cast<double>(j - 1) * (j - 1) - static_cast<double>(m) * m) /
                                               (4.0 * (j - 1) * (j - 1) - 1.0));
                const double next = a * (x * p - bcoef * p_prev);
                p_prev = p;
                p = next;
                if (std::abs(p) > kBig) {
                    p /= kBig;
                    p_prev /= kBig;
                    scale += kLogBig;
                }
            }
        }
        out[static_cast<std::size_t>(m)] = p * std::exp(scale);
    }
    return out;
}

void hermite_functions(int n, double x, double* out) {
    // h_0 = pi^{-1/4} e^{-x^2/2}; the mantissa starts at pi^{-1/4} with the
    // Gaussian kept in `scale` until the recurrence has grown enough.
    double scale = -0.5 * x * x;
    double prev = 0.0, cur = std::pow(M_PI, -0.25);
    double factor = std::exp(scale);
    out[0] = cur * factor;
    for (int j = 0; j < n; ++j) {
        const double next = x * std::sqrt(2.0 / (j + 1.0)) * cur - std::sqrt(j / (j + 1.0)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > kBig) {
            cur /= kBig;
            prev /= kBig;
            scale += kLogBig;
            factor = std::exp(scale);
        }
        out[j + 1] = cur * factor;
    }
}

std::vector<double> hermite_functions(int n, double x) {
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    hermite_functions(n, x, out.data());
    return out;
}

Eigen::MatrixXcd evaluate_basis(const ClusterBasis& basis, const std::vector<Eigen::Vector2d>& points) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(basis.dim()), n);
    switch (basis.family) {
    case Family::Torus:
        for (Eigen::Index j = 0; j < n; ++j) {
            for (std::size_t a = 0; a < basis.dim(); ++a) {
                const double ph = basis.indices[a][0] * points[j][0] + basis.indices[a][1] * points[j][1];
                out(static_cast<Eigen::Index>(a), j) = std::polar(1.0 / (2.0 * M_PI), ph);
            }
        }
        break;
    case Family::Sphere: {
        const int l = basis.degree;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto p = normalized_legendre_row(l, points[j][0]);
            for (std::size_t a = 0; a < basis.dim(); ++a) {
                const int m = basis.indices[a][1];
                // Y_l^{-m} = (-1)^m conj(Y_l^m)
                const double v = p[static_cast<std::size_t>(std::abs(m))] * (m < 0 && (-m) % 2 == 1 ? -1.0 : 1.0);
                out(static_cast<Eigen::Index>(a), j) = std::polar(1.0, m * points[j][1]) * v;
            }
        }
        break;
    }
    case Family::Hermite: {
        const int deg = basis.degree;
        std::vector<double> h1(static_cast<std::size_t>(deg) + 1), h2(static_cast<std::size_t>(deg) + 1);
        for (Eigen::Index j = 0; j < n; ++j) {
            hermite_functions(deg, points[j][0], h1.data());
            hermite_functions(deg, points[j][1], h2.data());
            for (std::size_t a = 0; a < basis.dim(); ++a) {
                out(static_cast<Eigen::Index>(a), j) = h1[basis.indices[a][0]] * h2[basis.indices[a][1]];
            }
        }
        break;
    }
    }
    return out;
}

}  // namespace restrictlab
