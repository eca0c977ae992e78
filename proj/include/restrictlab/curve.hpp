#pragma once

#include <json.hpp>

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "restrictlab/expression.hpp"
#include "restrictlab/jet.hpp"

namespace restrictlab {

/// Parametric plane curve t -> gamma(t) on [a, b] with exact high-order
/// derivative oracles, exposed through its Taylor expansion at any t.
class Curve {
public:
    virtual ~Curve() = default;

    virtual std::string describe() const = 0;

    /// Taylor series of gamma(t + e) to the given order.
    virtual std::array<Jet, 2> jet(double t, int order) const = 0;

    double a() const { return a_; }
    double b() const { return b_; }
    void set_interval(double a, double b) {
        a_ = a;
        b_ = b;
    }

    Eigen::Vector2d point(double t) const;
    /// j-th derivative gamma^(j)(t).
    Eigen::Vector2d derivative(double t, int j) const;
    /// Minimum of |gamma'| over `samples` equispaced parameters.
    double min_speed(int samples = 257) const;

protected:
    Curve(double a, double b) : a_(a), b_(b) {}

private:
    double a_;
    double b_;
};

using CurvePtr = std::shared_ptr<const Curve>;

/// Components given as expressions in t (polynomials in practice).
class ExpressionCurve final : public Curve {
public:
    ExpressionCurve(std::string_view x_expr, std::string_view y_expr, double a, double b);
    /// Polynomial with ascending coefficient lists per component.
    static std::shared_ptr<ExpressionCurve> polynomial(const std::vector<double>& cx, const std::vector<double>& cy,
                                                       double a, double b);

    std::string describe() const override;
    std::array<Jet, 2> jet(double t, int order) const override;

private:
    Expression x_;
    Expression y_;
};

/// center + radius (cos t, sin t).
class CircleCurve final : public Curve {
public:
    CircleCurve(const Eigen::Vector2d& center, double radius, double a = 0.0, double b = 2.0 * M_PI);
    std::string describe() const override;
    std::array<Jet, 2> jet(double t, int order) const override;
    double radius() const { return radius_; }
    const Eigen::Vector2d& center() const { return center_; }

private:
    Eigen::Vector2d center_;
    double radius_;
};

/// Latitude circle (theta0, t) in the sphere chart (theta, phi).
class LatitudeCurve final : public Curve {
public:
    explicit LatitudeCurve(double theta0, double a = 0.0, double b = 2.0 * M_PI);
    std::string describe() const override;
    std::array<Jet, 2> jet(double t, int order) const override;
    double theta0() const { return theta0_; }

private:
    double theta0_;
};

/// Point table parametrized by cumulative chord length; jets come from the
/// interpolating polynomial of degree `degree` through the nearest nodes.
class TableCurve final : public Curve {
public:
    TableCurve(std::vector<Eigen::Vector2d> points, int degree);
    std::string describe() const override;
    std::array<Jet, 2> jet(double t, int order) const override;

private:
    std::vector<Eigen::Vector2d> points_;
    std::vector<double> params_;
    int degree_;
};

/// gamma(phi(t)) for a smooth orientation-preserving phi given as an
/// expression in t. The interval is supplied by the caller.
class ReparametrizedCurve final : public Curve {
public:
    ReparametrizedCurve(CurvePtr inner, std::string_view phi_expr, double a, double b);
    std::string describe() const override;
    std::array<Jet, 2> jet(double t, int order) const override;

private:
    CurvePtr inner_;
    Expression phi_;
};

/// A gamma + b for a fixed affine chart change.
class AffineImageCurve final : public Curve {
public:
    AffineImageCurve(CurvePtr inner, const Eigen::Matrix2d& a, const Eigen::Vector2d& b);
    std::string describe() const override;
    std::array<Jet, 2> jet(double t, int order) const override;

private:
    CurvePtr inner_;
    Eigen::Matrix2d a_;
    Eigen::Vector2d b_;
};

/// Dilation lambda * gamma (used by the oscillator model).
class DilatedCurve final : public Curve {
public:
    DilatedCurve(CurvePtr inner, double factor);
    std::string describe() const override;
    std::array<Jet, 2> jet(double t, int order) const override;

private:
    CurvePtr inner_;
    double factor_;
};

/// Parses the compact command-line form: "poly:<x(t)>,<y(t)>",
/// "circle:cx,cy,r", "latitude:theta0", "line:x0,y0,x1,y1", each with an
/// optional "@a,b" parameter interval. A spec starting with '{' is read as
/// the JSON object form (see parse_curve_json).
CurvePtr parse_curve_spec(std::string_view spec);
/// {"kind":"poly","coeffs":[[x0,x1,..],[y0,y1,..]]} | {"kind":"circle","center":[..],"radius":..}
/// | {"kind":"latitude","theta0":..} | {"kind":"table","points":[[x,y],..]}; optional "interval":[a,b].
CurvePtr parse_curve_json(const nlohmann::json& j);

}  // namespace restrictlab
