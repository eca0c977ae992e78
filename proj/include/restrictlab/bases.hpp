#pragma once

#include <array>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace restrictlab {

enum class Family { Torus, Sphere, Hermite };
const char* to_string(Family f);

/// Contiguous run of lattice points k = (k1, k2lo..k2hi) inside a torus cluster.
struct LatticeRow {
    int k1 = 0;
    int k2lo = 0;
    int k2hi = 0;
    std::size_t offset = 0;  // position of (k1, k2lo) in the index list
};

/// Orthonormal spectral cluster on one of the three models.
///  torus:   indices are k in Z^2, phi_k = e^{i k.x} / (2 pi) on [0, 2pi)^2
///  sphere:  indices are (l, m), Y_l^m in the chart (theta, phi)
///  hermite: indices are (n1, n2), n1 + n2 = n, h_{n1}(x1) h_{n2}(x2)
struct ClusterBasis {
    Family family = Family::Torus;
    double lambda = 0.0;
    int degree = 0;  // l for the sphere, n for hermite
    std::vector<std::array<int, 2>> indices;
    std::vector<LatticeRow> rows;  // torus only, ordered by k1 then k2

    std::size_t dim() const { return indices.size(); }
};

/// Lattice points with |k| in [lambda + w0, lambda + w1], by row scan.
/// Throws EmptyClusterError when no point qualifies.
ClusterBasis torus_cluster(double lambda, double w0 = -1.0, double w1 = 1.0);
/// Torus sub-cluster of the indices accepted by `keep` (rows rebuilt).
ClusterBasis torus_subset(const ClusterBasis& basis, const std::function<bool(int, int)>& keep);
/// Degree-l spherical harmonics, lambda = sqrt(l (l + 1)).
ClusterBasis sphere_cluster(int l);
/// Eigenspace of -Delta + |x|^2 with eigenvalue 2n + 2 = lambda^2.
ClusterBasis hermite_cluster(int n);

/// dim x n_points complex values of the basis at the points.
Eigen::MatrixXcd evaluate_basis(const ClusterBasis& basis, const std::vector<Eigen::Vector2d>& points);

/// N_l^m P_l^m(cos theta) for m = 0..l (normalized so that
/// Y_l^m = N P e^{i m phi} has unit L2 norm on S^2), evaluated with a
/// mantissa/exponent recurrence in l at fixed m.
std::vector<double> normalized_legendre_row(int l, double theta);

/// h_0(x) .. h_n(x), orthonormal Hermite functions on R, via the
/// three-term recurrence carried with a separate exponent.
std::vector<double> hermite_functions(int n, double x);
void hermite_functions(int n, double x, double* out);

}  // namespace restrictlab
