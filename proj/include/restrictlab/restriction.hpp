#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "restrictlab/bases.hpp"
#include "restrictlab/curve.hpp"

namespace restrictlab {

enum class Metric { Euclidean, Sphere };

/// Composite Gauss-Legendre rule on a curve, weights carry the arclength
/// factor of the chosen metric (the round metric in the (theta, phi) chart
/// for Metric::Sphere).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<Eigen::Vector2d> points;
    double arclength = 0.0;
    double lambda_max = 0.0;
    int panels = 0;
    int refinements = 0;
    Metric metric = Metric::Euclidean;

    std::size_t size() const { return nodes.size(); }
};

QuadratureRule curve_quadrature(const Curve& curve, double lambda_max, Metric metric = Metric::Euclidean,
                                double nodes_per_wavelength = 12.0, int min_nodes = 64);

/// Curve as seen by the basis: sphere curves live in the chart, oscillator
/// curves are dilated by lambda.
CurvePtr model_curve(const ClusterBasis& basis, const CurvePtr& curve);
QuadratureRule model_quadrature(const ClusterBasis& basis, const CurvePtr& curve, double oversample = 1.0);

/// f(x_i) = sum_a c_a phi_a(x_i), matrix-free.
Eigen::VectorXcd basis_values(const ClusterBasis& basis, const Eigen::VectorXcd& coeffs,
                              const std::vector<Eigen::Vector2d>& points);
/// out_a = sum_i y_i conj(phi_a(x_i)), matrix-free.
Eigen::VectorXcd basis_adjoint(const ClusterBasis& basis, const Eigen::VectorXcd& y,
                               const std::vector<Eigen::Vector2d>& points);

struct NormSample {
    Family family = Family::Torus;
    double lambda = 0.0;
    double q = 2.0;
    double value = 0.0;
    std::map<std::string, double> meta;  // dim, quad_n, iterations, residual, min_ritz, trace, converged
    std::string method;                  // "lanczos", "latitude", "dense"
    bool flagged = false;                // non-converged estimate

    double group_lambda = 0.0;  // lambda of the jitter group this sample belongs to
};

struct GramOptions {
    std::uint64_t seed = 1;
    double tol = 1e-8;
    int max_iter = 500;
    bool allow_shortcut = true;
};

/// ||Pi||_{L2 -> L2(gamma)} as the square root of the top eigenvalue of the
/// curve Gram matrix, applied matrix-free. `curve` is the curve in model
/// coordinates (the quadrature points are used directly).
NormSample gram_operator_norm(const ClusterBasis& basis, const Curve& curve, const QuadratureRule& quad,
                              const GramOptions& opt = {});
/// Same quantity from the dense Gram matrix and a full eigensolve.
double dense_gram_norm(const ClusterBasis& basis, const QuadratureRule& quad);
/// Latitude closed form: 2 pi sin(theta0) max_m |N P_l^m(cos theta0)|^2, squared norm.
double latitude_norm_squared(int l, double theta0);
bool is_full_latitude(const Curve& curve, double* theta0 = nullptr);

/// (sum w |f|^q)^(1/q); q = infinity takes the max over a 4x refined rule.
double lq_restriction_norm(const Eigen::VectorXcd& coeffs, const ClusterBasis& basis, const Curve& curve, double q,
                           const QuadratureRule& quad);

struct CapResult {
    ClusterBasis basis;        // full cluster
    Eigen::VectorXcd coeffs;   // unit vector in the basis coordinates
    std::size_t cap_size = 0;
    double width = 0.0;        // angular half width used
    double c_width = 0.0;
    std::map<double, double> ratios;  // q -> ||f||_{L^q(gamma)} / ||f||_{L2}
};

CapResult cap_extremizer_torus(double lambda, const Curve& curve, double sigma, double c_width, double t0,
                               const std::vector<double>& qs, const QuadratureRule* quad = nullptr);

struct SearchResult {
    Eigen::VectorXcd coeffs;
    double ratio = 0.0;
    double init_ratio = 0.0;
    int accepted = 0;
    int steps = 0;
    std::vector<double> history;  // ratio after each accepted step
};

SearchResult lower_bound_search(const ClusterBasis& basis, const Curve& curve, double q, const QuadratureRule& quad,
                                const Eigen::VectorXcd& init, int steps);

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_ = 0.0;
    int n_points = 0;
    std::vector<double> residuals;
    std::vector<double> log_lambda;
    std::vector<double> log_value;
};

/// Groups consecutive samples in blocks of `jitter_group`, averages
/// geometrically, then fits log value against log lambda by least squares.
ExponentFit fit_exponent(const std::vector<NormSample>& samples, int jitter_group);

/// Geometric lambda grid with `groups` entries on [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, int groups);

}  // namespace restrictlab
