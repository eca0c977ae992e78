#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "restrictlab/symbol.hpp"

namespace restrictlab {

/// Bicharacteristic trajectory s -> kappa_s(origin) on [-s_max, s_max] with
/// quintic Hermite dense output built from (y, y', y'') at accepted steps.
class FlowTrajectory {
public:
    struct Sample {
        double s;
        Eigen::Vector4d state;
        Eigen::Vector4d d1;  // y'
        Eigen::Vector4d d2;  // y''
    };

    FlowTrajectory(PhaseSpacePoint origin, std::vector<Sample> samples, double energy_drift, bool left_region);

    const PhaseSpacePoint& origin() const { return origin_; }
    const std::vector<Sample>& samples() const { return samples_; }
    double energy_drift() const { return energy_drift_; }
    bool left_region() const { return left_region_; }
    double s_min() const { return samples_.front().s; }
    double s_max() const { return samples_.back().s; }

    /// Dense output; DomainError outside [s_min, s_max].
    PhaseSpacePoint at(double s) const;
    Eigen::Vector4d state_at(double s) const;

    /// CSV rows: s, x1, x2, xi1, xi2, p_value.
    void write_csv(std::ostream& os, const Symbol& sym) const;

private:
    PhaseSpacePoint origin_;
    std::vector<Sample> samples_;
    double energy_drift_;
    bool left_region_;
};

/// Adaptive Dormand-Prince 5(4) integration of x' = d_xi p, xi' = -d_x p.
/// tol in [1e-14, 1e-6] is used as both absolute and relative tolerance.
FlowTrajectory integrate_flow(const Symbol& sym, const PhaseSpacePoint& start, double s_max, double tol);

/// Second time derivative of the flow state, J_F(y) F(y).
Eigen::Vector4d flow_acceleration(const Symbol& sym, const PhaseSpacePoint& pt);

enum class JetMethod { Recursion, FiniteDifference };

std::string_view to_string(JetMethod m);

/// Derivatives d_s^j z_s and d_s^j zeta_s at s = 0, j = 0..order.
struct FlowJet {
    int order = 0;
    std::vector<Eigen::Vector2d> z;
    std::vector<Eigen::Vector2d> zeta;
    JetMethod method = JetMethod::Recursion;
};

/// Taylor coefficients of kappa_s(start) in s, to the given order, computed
/// by Taylor-mode differentiation of the Hamiltonian vector field.
std::array<Jet, 4> flow_series(const Symbol& sym, const PhaseArgs<Jet>& start, int order);

/// Jet of the flow at s = 0 by Taylor-mode recursion (order <= max_order - 2)
/// or by Richardson-extrapolated polynomial fits of the dense output
/// (order <= 8).
FlowJet flow_jet(const Symbol& sym, const PhaseSpacePoint& start, int order, JetMethod method);

/// Compares two jets entry-wise up to order j_max with tolerance
/// rtol * max(1, |reference|); JetInconsistencyError on mismatch.
void cross_check_jets(const FlowJet& reference, const FlowJet& other, int j_max, double rtol);

/// Smooth change of chart with its Jacobian.
struct Diffeomorphism {
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> map;
    std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> jacobian;

    static Diffeomorphism affine(const Eigen::Matrix2d& a, const Eigen::Vector2d& b);
};

/// (tau(x), (tau'(x)^T)^{-1} xi); DomainError when |det tau'(x)| < 1e-8.
PhaseSpacePoint cotangent_lift(const Diffeomorphism& diffeo, const PhaseSpacePoint& pt);

/// Symbol transported by an affine chart change y = A x + b:
/// q(y, eta) = p(A^{-1}(y - b), A^T eta).
class AffineTransportedSymbol final : public Symbol {
public:
    AffineTransportedSymbol(SymbolPtr inner, const Eigen::Matrix2d& a, const Eigen::Vector2d& b);

    std::string_view id() const override { return id_; }
    int max_order() const override { return inner_->max_order(); }
    double apply(const PhaseArgs<double>& a) const override { return inner_->apply(pull_back(a)); }
    Jet apply(const PhaseArgs<Jet>& a) const override { return inner_->apply(pull_back(a)); }
    GradScalar apply(const PhaseArgs<GradScalar>& a) const override { return inner_->apply(pull_back(a)); }
    HessScalar apply(const PhaseArgs<HessScalar>& a) const override { return inner_->apply(pull_back(a)); }
    JetGradScalar apply(const PhaseArgs<JetGradScalar>& a) const override { return inner_->apply(pull_back(a)); }
    HyperDual apply(const PhaseArgs<HyperDual>& a) const override { return inner_->apply(pull_back(a)); }

private:
    template <typename T>
    PhaseArgs<T> pull_back(const PhaseArgs<T>& a) const {
        const T y1 = a[0] - T(b_[0]);
        const T y2 = a[1] - T(b_[1]);
        return {T(ainv_(0, 0)) * y1 + T(ainv_(0, 1)) * y2, T(ainv_(1, 0)) * y1 + T(ainv_(1, 1)) * y2,
                T(a_(0, 0)) * a[2] + T(a_(1, 0)) * a[3], T(a_(0, 1)) * a[2] + T(a_(1, 1)) * a[3]};
    }

    SymbolPtr inner_;
    Eigen::Matrix2d a_;
    Eigen::Matrix2d ainv_;
    Eigen::Vector2d b_;
    std::string id_;
};

}  // namespace restrictlab
