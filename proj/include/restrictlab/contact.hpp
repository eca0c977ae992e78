#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "restrictlab/curve.hpp"
#include "restrictlab/flow.hpp"
#include "restrictlab/symbol.hpp"

namespace restrictlab {

/// Rotation by +pi/2.
inline Eigen::Vector2d rot90(const Eigen::Vector2d& v) { return {-v[1], v[0]}; }

struct TangentSolution {
    Eigen::Vector2d xi = Eigen::Vector2d::Zero();
    double residual = 0.0;
    int iterations = 0;
    double condition = 0.0;
    bool ill_conditioned = false;  // Jacobian condition number above 1e8
};

/// Newton on xi -> (<d_xi p, R gamma'>, p) at gamma(t). Throws SeedError when
/// |Theta| <= 1e-12 is not reached within 50 iterations.
TangentSolution solve_tangential_frequency(const Symbol& sym, const Curve& curve, double t,
                                           const Eigen::Vector2d& seed);
Eigen::Vector2d tangential_frequency(const Symbol& sym, const Curve& curve, double t, const Eigen::Vector2d& seed);

/// All tangential frequencies at gamma(t) found by a 64-direction sweep of the
/// zero set, deduplicated, ordered by sweep angle.
std::vector<Eigen::Vector2d> seed_tangential_frequencies(const Symbol& sym, const Curve& curve, double t,
                                                         int directions = 64);

struct TangentBranch {
    std::vector<double> t_grid;
    std::vector<Eigen::Vector2d> xi;
    std::vector<double> residuals;
    int orientation = 1;  // sign of <d_xi p, gamma'>
};

/// Predictor-corrector continuation from t_grid[anchor], where `seed` is
/// corrected first. Steps that fail or jump are subdivided; BranchError
/// reports the parameter where subdivision gave up.
TangentBranch continue_branch(const Symbol& sym, const Curve& curve, const std::vector<double>& t_grid,
                              const Eigen::Vector2d& seed, std::size_t anchor = 0);

/// Taylor series in the flow-time offset e of the lifted curve
/// (gamma~(s0 + e), xi~(s0 + e)) at the point with curve parameter t.
struct LiftJets {
    double t = 0.0;
    std::array<Jet, 2> gamma;
    std::array<Jet, 2> xi;
    /// Series of the curve-parameter offset delta(e) = L(s0 + e) - t.
    Jet delta;
};

/// Curve reparametrized by flow time s along one branch: d/ds gamma(L(s))
/// = d_xi p(gamma(L(s)), xi(L(s))), with s = 0 at the anchor parameter.
class FlowTimeCurve {
public:
    FlowTimeCurve(SymbolPtr sym, CurvePtr curve, TangentBranch branch, double t_anchor);

    const Symbol& symbol() const { return *sym_; }
    const Curve& curve() const { return *curve_; }
    const TangentBranch& branch() const { return branch_; }

    /// xi(t) on the branch (Newton seeded from the nearest node).
    Eigen::Vector2d xi_at(double t) const;
    /// dL/ds at the curve parameter t (orientation-signed); throws
    /// AdmissibilityError when |d_xi p| < 1e-6.
    double speed_ratio(double t) const;
    double s_of_t(double t) const;
    double t_of_s(double s) const;
    double s_min() const;
    double s_max() const;

    PhaseSpacePoint lift_at_s(double s) const;
    LiftJets jets(double t, int order) const;

private:
    SymbolPtr sym_;
    CurvePtr curve_;
    TangentBranch branch_;
    double t_anchor_;
    std::vector<double> s_nodes_;
};

struct ContactOrder {
    int value = 0;
    bool at_least = false;  // ">= j_max": no jet gap above threshold
    bool operator==(const ContactOrder&) const = default;
    std::string to_string() const;
};

struct PointContact {
    double t = 0.0;
    ContactOrder sigma;
    double confidence = 0.0;
    bool uncertain = false;  // confidence below 2
    std::vector<double> jet_gaps;  // |D_j| for j = 1..j_max (index 0 is D_1)
    int branch = 0;
};

/// sigma at curve parameter t by comparing flow jets with the
/// reparametrized curve's jets up to j_max.
PointContact contact_order_at(const FlowTimeCurve& fc, double t, int j_max = 8, double rtol = 1e-5);

/// H(t) = xi~'(s) + d_x p(gamma~, xi~), the G2 defect.
Eigen::Vector2d g2_defect(const FlowTimeCurve& fc, double t);
bool g2_test(const FlowTimeCurve& fc, double t, double rtol = 1e-5);

struct G2Scan {
    std::vector<double> points;
    bool non_isolated = false;
};
G2Scan g2_scan(const FlowTimeCurve& fc, int n_grid, double rtol = 1e-5);

struct LeadingVector {
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    double pairing = 0.0;
    /// Least-squares coefficient of P_sigma in the flow-curve gap; it equals -b.
    Eigen::Vector2d fitted = Eigen::Vector2d::Zero();
    double fit_rel_error = 0.0;
    bool verified = false;
};

/// b = d_xi^2 p (xi~^(sigma) + d^(sigma-1) d_x p) at t0 and v = R d_xi p / |d_xi p|.
/// With `verify`, fits the flow-curve gap against P_sigma on a small (u, v)
/// box and throws LeadingVectorError on a mismatch above 2%.
LeadingVector leading_vector_b(const FlowTimeCurve& fc, double t0, int sigma, bool verify = true);

struct ContactConfig {
    int j_max = 8;
    double rtol = 1e-5;
    int n_grid = 31;
    int g2_grid = 201;
    std::optional<double> t_base;  // defaults to 0 clamped into [a, b]
    bool verify_b = true;
};

struct ContactReport {
    std::string symbol;
    std::string curve;
    double a = 0.0;
    double b = 0.0;
    int j_max = 8;
    double rtol = 1e-5;
    std::vector<PointContact> per_t;
    std::vector<double> g2_points;
    bool g2_non_isolated = false;
    ContactOrder sigma_global;
    double t_max_contact = 0.0;
    std::optional<LeadingVector> leading;
    int branches = 0;
    int uncertain_points = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    void write_csv(std::ostream& os) const;
};

ContactReport global_sigma(const SymbolPtr& sym, const CurvePtr& curve, const ContactConfig& cfg = {});

/// P_sigma(u, v) = sum_{j=2}^{sigma+1} (v-u)^j / j! * u^(sigma+1-j) / (sigma+1-j)!.
double p_sigma_value(int sigma, double u, double v);

}  // namespace restrictlab
