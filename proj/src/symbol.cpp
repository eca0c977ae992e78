#include "restrictlab/symbol.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace restrictlab {

bool SymbolRegion::contains_position(const Eigen::Vector2d& x) const {
    return (x.array() >= position_lo.array()).all() && (x.array() <= position_hi.array()).all() &&
           x.norm() <= position_radius;
}

bool SymbolRegion::contains(const PhaseSpacePoint& pt) const {
    const double r = (pt.xi - frequency_center).norm();
    return contains_position(pt.x) && r >= frequency_r_min && r <= frequency_r_max;
}

double Symbol::derivative(const PhaseSpacePoint& pt, const MultiIndex& alpha) const {
    const int k = order_of(alpha);
    const auto base = pt.args();
    PhaseArgs<HyperDual> a;
    for (int v = 0; v < 4; ++v) a[v] = HyperDual(base[v], k);
    int generator = 0;
    for (int v = 0; v < 4; ++v) {
        for (int rep = 0; rep < alpha[v]; ++rep) a[v].coeff(std::size_t{1} << generator++) = 1.0;
    }
    const HyperDual r = apply(a);
    return r.generators() == k ? r.top() : (k == 0 ? r.value() : 0.0);
}

namespace {

// d^b/dy^b of y^2.
double square_derivative(double y, int b) {
    switch (b) {
    case 0: return y * y;
    case 1: return 2.0 * y;
    case 2: return 2.0;
    default: return 0.0;
    }
}

}  // namespace

TorusLaplaceSymbol::TorusLaplaceSymbol() {
    region_.position_lo = {-std::numbers::pi, -std::numbers::pi};
    region_.position_hi = {std::numbers::pi, std::numbers::pi};
}

double TorusLaplaceSymbol::derivative(const PhaseSpacePoint& pt, const MultiIndex& alpha) const {
    if (alpha[0] + alpha[1] > 0) return 0.0;
    if (alpha[2] == 0 && alpha[3] == 0) return apply(pt.args());
    if (alpha[2] > 0 && alpha[3] > 0) return 0.0;
    return alpha[2] > 0 ? square_derivative(pt.xi[0], alpha[2]) : square_derivative(pt.xi[1], alpha[3]);
}

HermiteSymbol::HermiteSymbol() {
    region_.position_lo = {-0.95, -0.95};
    region_.position_hi = {0.95, 0.95};
    region_.position_radius = 0.95;
    region_.frequency_r_min = 0.1;
}

double HermiteSymbol::derivative(const PhaseSpacePoint& pt, const MultiIndex& alpha) const {
    const int k = order_of(alpha);
    if (k == 0) return apply(pt.args());
    // separable sum of squares: only pure derivatives survive
    int nonzero = 0, var = -1;
    for (int v = 0; v < 4; ++v) {
        if (alpha[v] > 0) {
            ++nonzero;
            var = v;
        }
    }
    if (nonzero != 1) return 0.0;
    const double y = var < 2 ? pt.x[var] : pt.xi[var - 2];
    return square_derivative(y, alpha[var]);
}

SphereLaplaceSymbol::SphereLaplaceSymbol() {
    region_.position_lo = {0.1, -2.0 * std::numbers::pi};
    region_.position_hi = {std::numbers::pi - 0.1, 4.0 * std::numbers::pi};
    region_.frequency_r_min = 0.05;
}

double SphereLaplaceSymbol::derivative(const PhaseSpacePoint& pt, const MultiIndex& alpha) const {
    // p = xi1^2 + xi2^2 csc^2(x1) - 1
    if (alpha[1] > 0) return 0.0;
    const int k = order_of(alpha);
    if (k == 0) return apply(pt.args());
    double out = 0.0;
    if (alpha[0] == 0 && alpha[3] == 0) out += square_derivative(pt.xi[0], alpha[2]);
    if (alpha[2] == 0) {
        // derivatives of csc^2 from its Taylor series about x1
        const Jet t = Jet::variable(pt.x[0], alpha[0]);
        const Jet s = sin(t);
        const Jet csc2 = Jet(1.0, alpha[0]) / (s * s);
        out += square_derivative(pt.xi[1], alpha[3]) * csc2.derivative(alpha[0]);
    }
    return out;
}

ExpressionSymbol::ExpressionSymbol(std::string_view text)
    : id_("custom:" + std::string(text)), expr_(Expression::parse(text, {"x1", "x2", "xi1", "xi2"})) {}

SymbolPtr make_symbol(std::string_view spec) {
    if (spec == "torus_laplace") return std::make_shared<TorusLaplaceSymbol>();
    if (spec == "sphere_laplace") return std::make_shared<SphereLaplaceSymbol>();
    if (spec == "hermite") return std::make_shared<HermiteSymbol>();
    constexpr std::string_view prefix = "custom:";
    if (spec.substr(0, prefix.size()) == prefix) return std::make_shared<ExpressionSymbol>(spec.substr(prefix.size()));
    throw ConfigError("unknown symbol '" + std::string(spec) + "'");
}

double eval_symbol(const Symbol& sym, const PhaseSpacePoint& pt) {
    const double v = sym.apply(pt.args());
    if (!std::isfinite(v)) throw DomainError("symbol " + std::string(sym.id()) + " is not finite at the query point");
    return v;
}

double symbol_derivative(const Symbol& sym, const PhaseSpacePoint& pt, const MultiIndex& alpha) {
    for (int a : alpha) {
        if (a < 0) throw OrderError("negative multi-index entry");
    }
    if (order_of(alpha) > sym.max_order()) {
        throw OrderError("derivative order " + std::to_string(order_of(alpha)) + " exceeds max_order " +
                         std::to_string(sym.max_order()));
    }
    const double v = sym.derivative(pt, alpha);
    if (!std::isfinite(v)) throw DomainError("symbol derivative is not finite");
    return v;
}

Eigen::Vector4d gradient(const Symbol& sym, const PhaseSpacePoint& pt) {
    const auto base = pt.args();
    PhaseArgs<GradScalar> a;
    for (int v = 0; v < 4; ++v) a[v] = GradScalar::seeded(base[v], v);
    const GradScalar r = sym.apply(a);
    return {r.d[0], r.d[1], r.d[2], r.d[3]};
}

Eigen::Matrix4d hessian(const Symbol& sym, const PhaseSpacePoint& pt) {
    const auto base = pt.args();
    PhaseArgs<HessScalar> a;
    for (int v = 0; v < 4; ++v) {
        a[v] = HessScalar::seeded(GradScalar::seeded(base[v], v), v);
    }
    const HessScalar r = sym.apply(a);
    Eigen::Matrix4d h;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) h(i, j) = r.d[i].d[j];
    }
    return h;
}

Eigen::Vector4d hamiltonian_field(const Symbol& sym, const PhaseSpacePoint& pt) {
    const Eigen::Vector4d g = gradient(sym, pt);
    return {g[2], g[3], -g[0], -g[1]};
}

std::array<Jet, 4> gradient(const Symbol& sym, const PhaseArgs<Jet>& a) {
    PhaseArgs<JetGradScalar> da;
    for (int v = 0; v < 4; ++v) da[v] = JetGradScalar::seeded(a[v], v);
    const JetGradScalar r = sym.apply(da);
    return {r.d[0], r.d[1], r.d[2], r.d[3]};
}

std::array<Jet, 4> hamiltonian_field(const Symbol& sym, const PhaseArgs<Jet>& a) {
    const auto g = gradient(sym, a);
    return {g[2], g[3], -g[0], -g[1]};
}

bool zero_on_ray(const Symbol& sym, const Eigen::Vector2d& x, double angle, Eigen::Vector2d& xi_out) {
    const SymbolRegion& reg = sym.region();
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    auto p_at = [&](double r) { return sym.apply(PhaseArgs<double>{x[0], x[1], reg.frequency_center[0] + r * dir[0], reg.frequency_center[1] + r * dir[1]}); };

    // scan for the first sign change, then bisect
    constexpr int kScan = 32;
    double lo = reg.frequency_r_min;
    double plo = p_at(lo);
    double hi = lo, phi = plo;
    bool bracketed = false;
    for (int i = 1; i <= kScan; ++i) {
        hi = reg.frequency_r_min + (reg.frequency_r_max - reg.frequency_r_min) * i / kScan;
        phi = p_at(hi);
        if (plo == 0.0 || (plo < 0.0) != (phi < 0.0)) {
            bracketed = true;
            break;
        }
        lo = hi;
        plo = phi;
    }
    if (!bracketed) return false;
    double root = plo == 0.0 ? lo : hi;
    if (plo != 0.0 && std::abs(phi) > 1e-12) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double pm = p_at(mid);
            root = mid;
            if (std::abs(pm) <= 1e-12 || hi - lo < 1e-16 * hi) break;
            if ((pm < 0.0) == (plo < 0.0)) {
                lo = mid;
                plo = pm;
            } else {
                hi = mid;
            }
        }
    }
    xi_out = reg.frequency_center + root * dir;
    return true;
}

AdmissibilityReport check_admissible(const Symbol& sym, int n_position, int n_angle) {
    AdmissibilityReport rep;
    const SymbolRegion& reg = sym.region();
    int positive = 0, negative = 0;
    double a2_abs_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_position; ++i) {
        for (int j = 0; j < n_position; ++j) {
            const double fx = n_position == 1 ? 0.5 : static_cast<double>(i) / (n_position - 1);
            const double fy = n_position == 1 ? 0.5 : static_cast<double>(j) / (n_position - 1);
            const Eigen::Vector2d x = reg.position_lo.array() + (reg.position_hi - reg.position_lo).array() * Eigen::Array2d(fx, fy);
            if (!reg.contains_position(x)) continue;
            for (int k = 0; k < n_angle; ++k) {
                const double angle = 2.0 * std::numbers::pi * k / n_angle;
                Eigen::Vector2d xi;
                if (!zero_on_ray(sym, x, angle, xi)) {
                    ++rep.skipped_directions;
                    continue;
                }
                const PhaseSpacePoint pt(x, xi);
                const Eigen::Vector2d g = grad_xi(sym, pt);
                const double gn = g.norm();
                rep.a1_min = std::min(rep.a1_min, gn);
                ++rep.samples;
                if (gn == 0.0) {
                    a2_abs_min = 0.0;
                    continue;
                }
                const Eigen::Vector2d w(-g[1] / gn, g[0] / gn);
                const double q = w.dot(hess_xi(sym, pt) * w);
                if (q > 0.0) ++positive;
                if (q < 0.0) ++negative;
                a2_abs_min = std::min(a2_abs_min, std::abs(q));
            }
        }
    }
    if (rep.samples == 0) {
        rep.a1_min = 0.0;
        rep.a2_min = 0.0;
        return rep;
    }
    rep.a2_sign = (negative == 0 && positive > 0) ? 1 : (positive == 0 && negative > 0 ? -1 : 0);
    rep.a2_min = rep.a2_sign == 0 ? std::min(0.0, a2_abs_min) : a2_abs_min;
    if (positive > 0 && negative > 0) rep.a2_min = 0.0;
    rep.a1_pass = rep.a1_min > kTolA1;
    rep.a2_pass = rep.a2_sign != 0 && rep.a2_min > kTolA2;
    return rep;
}

}  // namespace restrictlab
