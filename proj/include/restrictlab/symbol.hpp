#pragma once

#include <array>
#include <limits>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "restrictlab/dual.hpp"
#include "restrictlab/errors.hpp"
#include "restrictlab/expression.hpp"
#include "restrictlab/jet.hpp"

namespace restrictlab {

/// Phase-space arguments in the fixed order (x1, x2, xi1, xi2).
template <typename Scalar>
using PhaseArgs = std::array<Scalar, 4>;

using GradScalar = Dual<double, 4>;
using HessScalar = Dual<GradScalar, 4>;
using JetGradScalar = Dual<Jet, 4>;

struct PhaseSpacePoint {
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    Eigen::Vector2d xi = Eigen::Vector2d::Zero();

    PhaseSpacePoint() = default;
    PhaseSpacePoint(const Eigen::Vector2d& position, const Eigen::Vector2d& frequency) : x(position), xi(frequency) {}

    static PhaseSpacePoint from_state(const Eigen::Vector4d& s) { return {s.head<2>(), s.tail<2>()}; }
    Eigen::Vector4d state() const { return (Eigen::Vector4d() << x, xi).finished(); }
    PhaseArgs<double> args() const { return {x[0], x[1], xi[0], xi[1]}; }
    bool finite() const { return x.allFinite() && xi.allFinite(); }
};

/// Derivative orders over (x1, x2, xi1, xi2).
using MultiIndex = std::array<int, 4>;

inline int order_of(const MultiIndex& alpha) { return alpha[0] + alpha[1] + alpha[2] + alpha[3]; }

/// K = K_P x K_F: a position box (optionally clipped to a disk) and a
/// frequency annulus around a centroid, which doubles as the origin of the
/// rays used to locate the zero set.
struct SymbolRegion {
    Eigen::Vector2d position_lo{-1.0, -1.0};
    Eigen::Vector2d position_hi{1.0, 1.0};
    double position_radius = std::numeric_limits<double>::infinity();
    Eigen::Vector2d frequency_center = Eigen::Vector2d::Zero();
    double frequency_r_min = 0.5;
    double frequency_r_max = 2.0;

    bool contains_position(const Eigen::Vector2d& x) const;
    bool contains(const PhaseSpacePoint& pt) const;
};

/// Hamiltonian symbol p(x, xi) evaluated on every scalar type the library
/// differentiates with. Implementations are immutable after construction.
class Symbol {
public:
    virtual ~Symbol() = default;

    virtual std::string_view id() const = 0;
    virtual int max_order() const { return 12; }
    const SymbolRegion& region() const { return region_; }
    void set_region(const SymbolRegion& r) { region_ = r; }

    virtual double apply(const PhaseArgs<double>& a) const = 0;
    virtual Jet apply(const PhaseArgs<Jet>& a) const = 0;
    virtual GradScalar apply(const PhaseArgs<GradScalar>& a) const = 0;
    virtual HessScalar apply(const PhaseArgs<HessScalar>& a) const = 0;
    virtual JetGradScalar apply(const PhaseArgs<JetGradScalar>& a) const = 0;
    virtual HyperDual apply(const PhaseArgs<HyperDual>& a) const = 0;

    /// Exact partial derivative. The default differentiates apply() with
    /// nested dual numbers, one nesting level per derivative order.
    virtual double derivative(const PhaseSpacePoint& pt, const MultiIndex& alpha) const;

    /// True when derivative() is a closed-form formula rather than AD.
    virtual bool closed_form_derivatives() const { return false; }

protected:
    SymbolRegion region_;
};

/// Adapter turning a functor with a templated call operator into a Symbol.
template <typename Functor>
class FunctorSymbol : public Symbol {
public:
    explicit FunctorSymbol(Functor f = {}) : f_(std::move(f)) {}

    std::string_view id() const override { return f_.name(); }
    double apply(const PhaseArgs<double>& a) const override { return f_(a); }
    Jet apply(const PhaseArgs<Jet>& a) const override { return f_(a); }
    GradScalar apply(const PhaseArgs<GradScalar>& a) const override { return f_(a); }
    HessScalar apply(const PhaseArgs<HessScalar>& a) const override { return f_(a); }
    JetGradScalar apply(const PhaseArgs<JetGradScalar>& a) const override { return f_(a); }
    HyperDual apply(const PhaseArgs<HyperDual>& a) const override { return f_(a); }

protected:
    Functor f_;
};

// Built-in symbols ----------------------------------------------------------

/// Flat torus: |xi|^2 - 1.
struct TorusLaplaceFunctor {
    static std::string_view name() { return "torus_laplace"; }
    template <typename T>
    T operator()(const PhaseArgs<T>& a) const {
        return a[2] * a[2] + a[3] * a[3] - T(1.0);
    }
};

/// Round sphere in the chart (theta, phi): xi_theta^2 + xi_phi^2 / sin^2(theta) - 1.
struct SphereLaplaceFunctor {
    static std::string_view name() { return "sphere_laplace"; }
    template <typename T>
    T operator()(const PhaseArgs<T>& a) const {
        using std::sin;
        const T s = sin(a[0]);
        return a[2] * a[2] + a[3] * a[3] / (s * s) - T(1.0);
    }
};

/// Harmonic oscillator: |x|^2 + |xi|^2 - 1.
struct HermiteFunctor {
    static std::string_view name() { return "hermite"; }
    template <typename T>
    T operator()(const PhaseArgs<T>& a) const {
        return a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3] - T(1.0);
    }
};

class TorusLaplaceSymbol final : public FunctorSymbol<TorusLaplaceFunctor> {
public:
    TorusLaplaceSymbol();
    double derivative(const PhaseSpacePoint& pt, const MultiIndex& alpha) const override;
    bool closed_form_derivatives() const override { return true; }
};

class SphereLaplaceSymbol final : public FunctorSymbol<SphereLaplaceFunctor> {
public:
    SphereLaplaceSymbol();
    double derivative(const PhaseSpacePoint& pt, const MultiIndex& alpha) const override;
    bool closed_form_derivatives() const override { return true; }
};

class HermiteSymbol final : public FunctorSymbol<HermiteFunctor> {
public:
    HermiteSymbol();
    double derivative(const PhaseSpacePoint& pt, const MultiIndex& alpha) const override;
    bool closed_form_derivatives() const override { return true; }
};

/// User symbol parsed from an arithmetic expression in x1, x2, xi1, xi2.
class ExpressionSymbol final : public Symbol {
public:
    explicit ExpressionSymbol(std::string_view text);

    std::string_view id() const override { return id_; }
    double apply(const PhaseArgs<double>& a) const override { return expr_.evaluate(a); }
    Jet apply(const PhaseArgs<Jet>& a) const override { return expr_.evaluate(a); }
    GradScalar apply(const PhaseArgs<GradScalar>& a) const override { return expr_.evaluate(a); }
    HessScalar apply(const PhaseArgs<HessScalar>& a) const override { return expr_.evaluate(a); }
    JetGradScalar apply(const PhaseArgs<JetGradScalar>& a) const override { return expr_.evaluate(a); }
    HyperDual apply(const PhaseArgs<HyperDual>& a) const override { return expr_.evaluate(a); }

private:
    std::string id_;
    Expression expr_;
};

using SymbolPtr = std::shared_ptr<const Symbol>;

/// "torus_laplace" | "sphere_laplace" | "hermite" | "custom:<expression>".
SymbolPtr make_symbol(std::string_view spec);

// Evaluation -----------------------------------------------------------------

/// p(x, xi); DomainError when the value is not finite.
double eval_symbol(const Symbol& sym, const PhaseSpacePoint& pt);

/// Partial derivative d^alpha p; OrderError when |alpha| > max_order.
double symbol_derivative(const Symbol& sym, const PhaseSpacePoint& pt, const MultiIndex& alpha);

/// Full gradient (d_x1, d_x2, d_xi1, d_xi2).
Eigen::Vector4d gradient(const Symbol& sym, const PhaseSpacePoint& pt);
/// Full 4x4 Hessian.
Eigen::Matrix4d hessian(const Symbol& sym, const PhaseSpacePoint& pt);

inline Eigen::Vector2d grad_x(const Symbol& sym, const PhaseSpacePoint& pt) { return gradient(sym, pt).head<2>(); }
inline Eigen::Vector2d grad_xi(const Symbol& sym, const PhaseSpacePoint& pt) { return gradient(sym, pt).tail<2>(); }
inline Eigen::Matrix2d hess_xi(const Symbol& sym, const PhaseSpacePoint& pt) {
    return hessian(sym, pt).bottomRightCorner<2, 2>();
}

/// Right-hand side of the Hamiltonian system (d_xi p, -d_x p).
Eigen::Vector4d hamiltonian_field(const Symbol& sym, const PhaseSpacePoint& pt);

/// Gradient of p along phase-space Taylor series.
std::array<Jet, 4> gradient(const Symbol& sym, const PhaseArgs<Jet>& a);

/// Hamiltonian vector field along phase-space Taylor series.
std::array<Jet, 4> hamiltonian_field(const Symbol& sym, const PhaseArgs<Jet>& a);

// Admissibility ---------------------------------------------------------------

struct AdmissibilityReport {
    double a1_min = std::numeric_limits<double>::infinity();
    double a2_min = std::numeric_limits<double>::infinity();
    int a2_sign = 0;  // +1 / -1 when consistent, 0 when mixed or empty
    int samples = 0;
    int skipped_directions = 0;
    bool a1_pass = false;
    bool a2_pass = false;
};

inline constexpr double kTolA1 = 1e-6;
inline constexpr double kTolA2 = 1e-6;

/// Zero of p(x, .) on the ray centroid + r (cos angle, sin angle), r inside
/// the frequency annulus, by bisection to |p| <= 1e-12. Returns false when
/// p does not change sign along the ray.
bool zero_on_ray(const Symbol& sym, const Eigen::Vector2d& x, double angle, Eigen::Vector2d& xi_out);

/// Samples n_position^2 positions of K_P and n_angle rays per position;
/// records |d_xi p| and the tangential Hessian <w, d_xi^2 p w> on the zero set.
AdmissibilityReport check_admissible(const Symbol& sym, int n_position, int n_angle);

}  // namespace restrictlab
