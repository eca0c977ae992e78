#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <type_traits>

#include <Eigen/Dense>

namespace restrictlab {

template <class Scalar>
struct LanczosResult {
    double top = 0.0;       // largest Ritz value
    double min_ritz = 0.0;  // smallest Ritz value seen in the last cycle
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;
    int iterations = 0;  // operator applications
    double residual = 0.0;  // |A v - top v| / |top|
    bool converged = false;
};

namespace detail {

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> random_start(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if constexpr (std::is_same_v<Scalar, std::complex<double>>) {
            const double re = nd(rng);
            v[i] = Scalar(re, nd(rng));
        } else {
            v[i] = nd(rng);
        }
    }
    return v.normalized();
}

}  // namespace detail

/// Largest eigenvalue of a Hermitian positive semidefinite operator given as
/// apply(x, y) : y = A x. Lanczos with full (twice repeated) Gram-Schmidt,
/// explicitly restarted from the current Ritz vector every `cycle` steps.
template <class Scalar, class Apply>
LanczosResult<Scalar> lanczos_top(Apply&& apply, Eigen::Index n, std::uint64_t seed, double tol = 1e-8,
                                  int max_iter = 500, int cycle = 80,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* start = nullptr) {
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    LanczosResult<Scalar> res;
    Vec v = (start != nullptr && start->size() == n && start->norm() > 0) ? Vec(start->normalized())
                                                                         : detail::random_start<Scalar>(n, seed);
    const int m_max = static_cast<int>(std::min<Eigen::Index>(cycle, n));
    Vec w(n);
    while (true) {
        Mat basis(n, m_max);
        std::vector<double> alpha, beta;
        basis.col(0) = v;
        int m = 0;
        bool invariant = false;
        double theta = 0.0, theta_min = 0.0, resid = 0.0;
        Eigen::VectorXd ritz_s;
        for (m = 0; m < m_max; ++m) {
            apply(basis.col(m), w);
            ++res.iterations;
            const double a = std::real(basis.col(m).dot(w));
            alpha.push_back(a);
            for (int pass = 0; pass < 2; ++pass) {
                const Vec h = basis.leftCols(m + 1).adjoint() * w;
                w.noalias() -= basis.leftCols(m + 1) * h;
            }
            const double b = w.norm();
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, m + 1);
            for (int i = 0; i <= m; ++i) {
                t(i, i) = alpha[i];
                if (i < m) t(i, i + 1) = t(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
            theta = es.eigenvalues()[m];
            theta_min = es.eigenvalues()[0];
            ritz_s = es.eigenvectors().col(m);
            resid = std::abs(b * ritz_s[m]);
            const double scale = std::max(std::abs(theta), 1e-300);
            if (resid <= tol * scale || b <= 1e-14 * scale || res.iterations >= max_iter) {
                invariant = b <= 1e-14 * scale;
                ++m;
                break;
            }
            if (m + 1 < m_max) {
                basis.col(m + 1) = w / b;
                beta.push_back(b);
            }
        }
        const int used = std::min(m, m_max);
        v = basis.leftCols(used) * ritz_s.head(used).cast<Scalar>();
        v.normalize();
        res.top = theta;
        res.min_ritz = theta_min;
        res.residual = resid / std::max(std::abs(theta), 1e-300);
        if (res.residual <= tol || invariant) {
            res.converged = true;
            break;
        }
        if (res.iterations >= max_iter) break;
    }
    res.vector = v;
    return res;
}

}  // namespace restrictlab
