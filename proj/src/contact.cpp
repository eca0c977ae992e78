#include "restrictlab/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include "restrictlab/errors.hpp"

namespace restrictlab {

using Eigen::Matrix2d;
using Eigen::Vector2d;

namespace {

constexpr double kNewtonTol = 1e-12;
constexpr int kNewtonMaxIter = 50;
constexpr double kCondWarn = 1e8;

struct Theta {
    Vector2d value;
    Matrix2d jacobian;
};

Theta theta(const Symbol& sym, const Vector2d& x, const Vector2d& gdot, const Vector2d& xi) {
    const PhaseSpacePoint pt{x, xi};
    const Eigen::Matrix4d h = hessian(sym, pt);
    const Vector2d g = gradient(sym, pt).tail<2>();
    const Vector2d n = rot90(gdot);
    Theta th;
    th.value = Vector2d(g.dot(n), eval_symbol(sym, pt));
    th.jacobian.row(0) = (h.bottomRightCorner<2, 2>() * n).transpose();
    th.jacobian.row(1) = g.transpose();
    return th;
}

// 30-point Gauss-Legendre on [a, b]; the integrands here are analytic on
// grid-sized segments
template <typename F>
double segment_integral(F f, double a, double b) {
    return boost::math::quadrature::gauss<double, 30>::integrate(f, a, b);
}

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

}  // namespace

TangentSolution solve_tangential_frequency(const Symbol& sym, const Curve& curve, double t, const Vector2d& seed) {
    const Vector2d x = curve.point(t);
    const Vector2d gdot = curve.derivative(t, 1);
    TangentSolution sol;
    sol.xi = seed;
    Theta th = theta(sym, x, gdot, sol.xi);
    double res = th.value.norm();
    for (int it = 0; it < kNewtonMaxIter && std::isfinite(res); ++it) {
        if (res <= kNewtonTol) {
            // one polishing step towards machine precision
            const Vector2d polished = sol.xi - th.jacobian.fullPivLu().solve(th.value);
            const Theta pth = theta(sym, x, gdot, polished);
            if (pth.value.norm() < res) {
                sol.xi = polished;
                th = pth;
                res = pth.value.norm();
            }
            sol.residual = res;
            sol.iterations = it;
            const Eigen::JacobiSVD<Matrix2d> svd(th.jacobian);
            const auto sv = svd.singularValues();
            sol.condition = sv[1] > 0.0 ? sv[0] / sv[1] : std::numeric_limits<double>::infinity();
            sol.ill_conditioned = sol.condition > kCondWarn;
            return sol;
        }
        const Vector2d step = th.jacobian.fullPivLu().solve(th.value);
        double damp = 1.0;
        Vector2d trial = sol.xi - step;
        Theta tth = theta(sym, x, gdot, trial);
        for (int k = 0; k < 20 && !(tth.value.norm() < res); ++k) {
            damp *= 0.5;
            trial = sol.xi - damp * step;
            tth = theta(sym, x, gdot, trial);
        }
        sol.xi = trial;
        th = tth;
        res = th.value.norm();
    }
    throw SeedError("tangential frequency: Newton did not converge at t = " + std::to_string(t) + " (|Theta| = " +
                    std::to_string(res) + ")");
}

Vector2d tangential_frequency(const Symbol& sym, const Curve& curve, double t, const Vector2d& seed) {
    return solve_tangential_frequency(sym, curve, t, seed).xi;
}

std::vector<Vector2d> seed_tangential_frequencies(const Symbol& sym, const Curve& curve, double t, int directions) {
    const Vector2d x = curve.point(t);
    const Vector2d n = rot90(curve.derivative(t, 1));
    std::vector<Vector2d> pts(static_cast<std::size_t>(directions));
    std::vector<double> res(pts.size(), std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k < directions; ++k) {
        const double ang = 2.0 * M_PI * k / directions;
        Vector2d xi;
        if (zero_on_ray(sym, x, ang, xi)) {
            pts[k] = xi;
            res[k] = grad_xi(sym, {x, xi}).dot(n);
        }
    }
    std::vector<Vector2d> out;
    for (int k = 0; k < directions; ++k) {
        const int k1 = (k + 1) % directions;
        if (!std::isfinite(res[k]) || !std::isfinite(res[k1])) continue;
        if ((res[k] <= 0.0) == (res[k1] <= 0.0) && res[k] != 0.0) continue;
        const Vector2d seed = std::abs(res[k]) <= std::abs(res[k1]) ? pts[k] : pts[k1];
        Vector2d xi;
        try {
            xi = tangential_frequency(sym, curve, t, seed);
        } catch (const SeedError&) {
            continue;
        }
        const bool dup = std::any_of(out.begin(), out.end(), [&](const Vector2d& o) {
            return (o - xi).norm() <= 1e-8 * std::max(1.0, xi.norm());
        });
        if (!dup) out.push_back(xi);
    }
    return out;
}

namespace {

// Taylor series of xi(t + delta) on the branch through xi0, by Newton with
// the Jacobian frozen at delta = 0; pass m fixes coefficient m.
std::array<Jet, 2> xi_series(const Symbol& sym, const std::array<Jet, 2>& g, const Vector2d& xi0, int order) {
    const Jet gp0 = differentiate(g[0]);
    const Jet gp1 = differentiate(g[1]);
    const Theta th0 = theta(sym, Vector2d(g[0][0], g[1][0]), Vector2d(gp0[0], gp1[0]), xi0);
    const Matrix2d jinv = th0.jacobian.inverse();
    std::array<Jet, 2> xi{Jet(xi0[0], order), Jet(xi0[1], order)};
    for (int pass = 1; pass <= order; ++pass) {
        const PhaseArgs<Jet> args{g[0].truncated(pass), g[1].truncated(pass), xi[0].truncated(pass),
                                  xi[1].truncated(pass)};
        const auto grad = gradient(sym, args);
        const Jet t1 = grad[3] * gp0.truncated(pass) - grad[2] * gp1.truncated(pass);
        const Jet t2 = sym.apply(args);
        for (int k = 0; k < 2; ++k) {
            const Jet corr = jinv(k, 0) * t1 + jinv(k, 1) * t2;
            for (int m = 1; m <= pass; ++m) xi[k][m] -= corr[m];
        }
    }
    return xi;
}

}  // namespace

TangentBranch continue_branch(const Symbol& sym, const Curve& curve, const std::vector<double>& t_grid,
                              const Vector2d& seed, std::size_t anchor) {
    if (t_grid.empty() || anchor >= t_grid.size()) throw DomainError("continue_branch: empty grid or bad anchor");
    TangentBranch br;
    br.t_grid = t_grid;
    br.xi.resize(t_grid.size());
    br.residuals.resize(t_grid.size());
    const auto first = solve_tangential_frequency(sym, curve, t_grid[anchor], seed);
    br.xi[anchor] = first.xi;
    br.residuals[anchor] = first.residual;
    br.orientation =
        grad_xi(sym, {curve.point(t_grid[anchor]), first.xi}).dot(curve.derivative(t_grid[anchor], 1)) >= 0.0 ? 1
                                                                                                              : -1;

    // One step t0 -> t1 with subdivision on failure.
    auto advance = [&](double t0, Vector2d xi0, double t1) {
        struct Pending {
            double target;
            int depth;
        };
        std::vector<Pending> stack{{t1, 0}};
        double t = t0;
        Vector2d xi = xi0;
        double last_res = 0.0;
        while (!stack.empty()) {
            const Pending p = stack.back();
            const double h = p.target - t;
            const auto g = curve.jet(t, 3);
            const auto xs = xi_series(sym, g, xi, 2);
            const Vector2d pred(xs[0][0] + h * xs[0][1] + h * h * xs[0][2], xs[1][0] + h * xs[1][1] + h * h * xs[1][2]);
            const double scale =
                std::max({std::abs(h) * Vector2d(xs[0][1], xs[1][1]).norm(), std::abs(h) * 1e-3 * xi.norm(), 1e-9});
            bool ok = true;
            TangentSolution sol;
            try {
                sol = solve_tangential_frequency(sym, curve, p.target, pred);
                ok = (sol.xi - pred).norm() <= 10.0 * scale;
            } catch (const SeedError&) {
                ok = false;
            }
            if (ok) {
                t = p.target;
                xi = sol.xi;
                last_res = sol.residual;
                stack.pop_back();
            } else {
                if (p.depth >= 12) {
                    throw BranchError("branch jump or corrector failure near t = " + std::to_string(t) + " (step to " +
                                      std::to_string(p.target) + ")");
                }
                stack.back().depth = p.depth + 1;
                stack.push_back({t + 0.5 * h, p.depth + 1});
            }
        }
        return std::pair<Vector2d, double>{xi, last_res};
    };

    for (std::size_t i = anchor + 1; i < t_grid.size(); ++i) {
        const auto [xi, res] = advance(t_grid[i - 1], br.xi[i - 1], t_grid[i]);
        br.xi[i] = xi;
        br.residuals[i] = res;
    }
    for (std::size_t i = anchor; i-- > 0;) {
        const auto [xi, res] = advance(t_grid[i + 1], br.xi[i + 1], t_grid[i]);
        br.xi[i] = xi;
        br.residuals[i] = res;
    }
    return br;
}

FlowTimeCurve::FlowTimeCurve(SymbolPtr sym, CurvePtr curve, TangentBranch branch, double t_anchor)
    : sym_(std::move(sym)), curve_(std::move(curve)), branch_(std::move(branch)), t_anchor_(t_anchor) {
    // cumulative flow time at the branch nodes, relative to the anchor
    const auto& tg = branch_.t_grid;
    auto inv_speed = [this](double t) { return 1.0 / speed_ratio(t); };
    std::vector<double> seg(tg.size(), 0.0);
    for (std::size_t i = 1; i < tg.size(); ++i) {
        seg[i] = segment_integral(inv_speed, tg[i - 1], tg[i]);
    }
    s_nodes_.assign(tg.size(), 0.0);
    for (std::size_t i = 1; i < tg.size(); ++i) s_nodes_[i] = s_nodes_[i - 1] + seg[i];
    // shift so that s(t_anchor) = 0
    const auto it = std::lower_bound(tg.begin(), tg.end(), t_anchor_);
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - tg.begin()), tg.size() - 1);
    const double at_anchor =
        s_nodes_[k] + (tg[k] == t_anchor_ ? 0.0
                                          : segment_integral(inv_speed, tg[k], t_anchor_));
    for (double& s : s_nodes_) s -= at_anchor;
}

Vector2d FlowTimeCurve::xi_at(double t) const {
    const auto& tg = branch_.t_grid;
    const auto it = std::lower_bound(tg.begin(), tg.end(), t);
    std::size_t k = static_cast<std::size_t>(it - tg.begin());
    if (k == tg.size()) k = tg.size() - 1;
    if (k > 0 && std::abs(tg[k - 1] - t) < std::abs(tg[k] - t)) --k;
    if (tg[k] == t) return branch_.xi[k];
    const double h = t - tg[k];
    const auto g = curve_->jet(tg[k], 3);
    const auto xs = xi_series(*sym_, g, branch_.xi[k], 2);
    const Vector2d pred(xs[0][0] + h * xs[0][1] + h * h * xs[0][2], xs[1][0] + h * xs[1][1] + h * h * xs[1][2]);
    return tangential_frequency(*sym_, *curve_, t, pred);
}

double FlowTimeCurve::speed_ratio(double t) const {
    const Vector2d xi = xi_at(t);
    const Vector2d g = grad_xi(*sym_, {curve_->point(t), xi});
    if (g.norm() < kTolA1) {
        throw AdmissibilityError("|d_xi p| below 1e-6 on the lift at t = " + std::to_string(t));
    }
    const Vector2d gd = curve_->derivative(t, 1);
    return g.dot(gd) / gd.squaredNorm();
}

double FlowTimeCurve::s_of_t(double t) const {
    const auto& tg = branch_.t_grid;
    const auto it = std::lower_bound(tg.begin(), tg.end(), t);
    std::size_t k = static_cast<std::size_t>(it - tg.begin());
    if (k == tg.size()) k = tg.size() - 1;
    if (k > 0 && std::abs(tg[k - 1] - t) < std::abs(tg[k] - t)) --k;
    if (tg[k] == t) return s_nodes_[k];
    auto inv_speed = [this](double u) { return 1.0 / speed_ratio(u); };
    return s_nodes_[k] + segment_integral(inv_speed, tg[k], t);
}

double FlowTimeCurve::t_of_s(double s) const {
    // Newton on s_of_t, started from linear interpolation of the nodes
    const auto& tg = branch_.t_grid;
    double t = tg.front();
    if (tg.size() > 1) {
        std::size_t k = 0;
        const bool inc = s_nodes_.back() >= s_nodes_.front();
        while (k + 2 < tg.size() && (inc ? s_nodes_[k + 1] < s : s_nodes_[k + 1] > s)) ++k;
        const double w = (s - s_nodes_[k]) / (s_nodes_[k + 1] - s_nodes_[k]);
        t = tg[k] + w * (tg[k + 1] - tg[k]);
    }
    for (int it = 0; it < 30; ++it) {
        const double f = s_of_t(t) - s;
        const double dt = f * speed_ratio(t);
        t -= dt;
        if (std::abs(dt) <= 1e-15 * std::max(1.0, std::abs(t))) break;
    }
    return t;
}

double FlowTimeCurve::s_min() const { return std::min(s_nodes_.front(), s_nodes_.back()); }
double FlowTimeCurve::s_max() const { return std::max(s_nodes_.front(), s_nodes_.back()); }

PhaseSpacePoint FlowTimeCurve::lift_at_s(double s) const {
    const double t = t_of_s(s);
    return {curve_->point(t), xi_at(t)};
}

LiftJets FlowTimeCurve::jets(double t, int order) const {
    const Vector2d xi0 = xi_at(t);
    const auto g = curve_->jet(t, order + 1);
    const auto xs = xi_series(*sym_, g, xi0, order);
    // ds-speed of the curve parameter: delta' = <d_xi p, gamma'> / |gamma'|^2 at t + delta
    const PhaseArgs<Jet> args{g[0].truncated(order), g[1].truncated(order), xs[0], xs[1]};
    const auto grad = gradient(*sym_, args);
    const Jet gp0 = differentiate(g[0]);
    const Jet gp1 = differentiate(g[1]);
    const Jet ratio = (grad[2] * gp0 + grad[3] * gp1) / (gp0 * gp0 + gp1 * gp1);
    if (std::abs(ratio[0]) * std::sqrt(gp0[0] * gp0[0] + gp1[0] * gp1[0]) < kTolA1) {
        throw AdmissibilityError("|d_xi p| below 1e-6 on the lift at t = " + std::to_string(t));
    }
    Jet delta(0.0, order);
    for (int m = 0; m < order; ++m) {
        const Jet c = compose(ratio, delta.truncated(m));
        delta[m + 1] = c[m] / (m + 1);
    }
    LiftJets out;
    out.t = t;
    out.delta = delta;
    for (int k = 0; k < 2; ++k) {
        out.gamma[k] = compose(g[k].truncated(order), delta);
        out.xi[k] = compose(xs[k], delta);
    }
    return out;
}

std::string ContactOrder::to_string() const {
    return at_least ? ">=" + std::to_string(value) : std::to_string(value);
}

PointContact contact_order_at(const FlowTimeCurve& fc, double t, int j_max, double rtol) {
    if (j_max < 2 || j_max > fc.symbol().max_order() - 2) throw OrderError("contact_order_at: j_max out of range");
    const LiftJets lj = fc.jets(t, j_max);
    PhaseArgs<Jet> start{Jet(lj.gamma[0][0], j_max), Jet(lj.gamma[1][0], j_max), Jet(lj.xi[0][0], j_max),
                         Jet(lj.xi[1][0], j_max)};
    const auto z = flow_series(fc.symbol(), start, j_max);
    PointContact pc;
    pc.t = t;
    std::vector<double> rel;
    for (int j = 1; j <= j_max; ++j) {
        const Vector2d gj(lj.gamma[0].derivative(j), lj.gamma[1].derivative(j));
        const Vector2d zj(z[0].derivative(j), z[1].derivative(j));
        const double gap = (zj - gj).norm();
        pc.jet_gaps.push_back(gap);
        rel.push_back(gap / std::max(1.0, gj.norm()));
    }
    constexpr double kFloor = 1e-16;
    int first = -1;
    for (int j = 2; j <= j_max; ++j) {
        if (rel[j - 1] > rtol) {
            first = j;
            break;
        }
    }
    double below = kFloor;
    const int last_below = first < 0 ? j_max : first - 1;
    for (int j = 1; j <= last_below; ++j) below = std::max(below, rel[j - 1]);
    if (first < 0) {
        pc.sigma = {j_max, true};
        pc.confidence = std::log10(rtol / below);
    } else {
        pc.sigma = {first - 1, false};
        pc.confidence = std::log10(rel[first - 1] / below);
    }
    pc.uncertain = pc.confidence < 2.0;
    return pc;
}

Vector2d g2_defect(const FlowTimeCurve& fc, double t) {
    const LiftJets lj = fc.jets(t, 1);
    const PhaseSpacePoint pt{{lj.gamma[0][0], lj.gamma[1][0]}, {lj.xi[0][0], lj.xi[1][0]}};
    return Vector2d(lj.xi[0][1], lj.xi[1][1]) + grad_x(fc.symbol(), pt);
}

namespace {

double g2_scale(const FlowTimeCurve& fc, double t) {
    const Vector2d xi = fc.xi_at(t);
    return std::max(1.0, grad_x(fc.symbol(), {fc.curve().point(t), xi}).norm());
}

}  // namespace

bool g2_test(const FlowTimeCurve& fc, double t, double rtol) { return g2_defect(fc, t).norm() <= rtol * g2_scale(fc, t); }

G2Scan g2_scan(const FlowTimeCurve& fc, int n_grid, double rtol) {
    const double a = fc.curve().a(), b = fc.curve().b();
    std::vector<double> ts(static_cast<std::size_t>(n_grid));
    std::vector<double> hn(ts.size());
    for (int i = 0; i < n_grid; ++i) {
        ts[i] = a + (b - a) * i / (n_grid - 1);
        hn[i] = g2_defect(fc, ts[i]).norm();
    }
    G2Scan out;
    int run = 0;
    for (int i = 0; i < n_grid; ++i) {
        run = hn[i] <= 1e-10 ? run + 1 : 0;
        if (run >= 3) out.non_isolated = true;
    }
    if (out.non_isolated) return out;
    for (int i = 0; i < n_grid; ++i) {
        const bool left = i == 0 || hn[i] <= hn[i - 1];
        const bool right = i == n_grid - 1 || hn[i] < hn[i + 1];
        if (!(left && right)) continue;
        const double lo = ts[std::max(i - 1, 0)];
        const double hi = ts[std::min(i + 1, n_grid - 1)];
        double t = ts[i];
        double val = hn[i];
        if (val > 0.0) {
            const auto r = boost::math::tools::brent_find_minima(
                [&](double u) { return g2_defect(fc, u).norm(); }, lo, hi, std::numeric_limits<double>::digits);
            if (r.second < val) {
                t = r.first;
                val = r.second;
            }
        }
        if (val <= rtol * g2_scale(fc, t)) out.points.push_back(t);
    }
    return out;
}

double p_sigma_value(int sigma, double u, double v) {
    double s = 0.0;
    for (int j = 2; j <= sigma + 1; ++j) {
        s += std::pow(v - u, j) / factorial(j) * std::pow(u, sigma + 1 - j) / factorial(sigma + 1 - j);
    }
    return s;
}

LeadingVector leading_vector_b(const FlowTimeCurve& fc, double t0, int sigma, bool verify) {
    if (sigma < 1) throw LeadingVectorError("leading vector needs sigma >= 1");
    const Symbol& sym = fc.symbol();
    const int order = sigma + 1;
    const LiftJets lj = fc.jets(t0, order);
    const PhaseArgs<Jet> args{lj.gamma[0], lj.gamma[1], lj.xi[0], lj.xi[1]};
    const auto grad = gradient(sym, args);
    // H(e) = xi~'(e) + d_x p along the lift; b = d_xi^2 p H^(sigma-1)(0)
    const Jet h0 = differentiate(lj.xi[0]) + grad[0].truncated(order - 1);
    const Jet h1 = differentiate(lj.xi[1]) + grad[1].truncated(order - 1);
    const Vector2d hs(h0.derivative(sigma - 1), h1.derivative(sigma - 1));
    const PhaseSpacePoint pt{{lj.gamma[0][0], lj.gamma[1][0]}, {lj.xi[0][0], lj.xi[1][0]}};
    LeadingVector lv;
    lv.b = hess_xi(sym, pt) * hs;
    const Vector2d gx = grad_xi(sym, pt);
    lv.v = rot90(gx) / gx.norm();
    lv.pairing = lv.b.dot(lv.v);
    if (!verify) return lv;

    // gap G(u, w) = z_{w-u}(lift(s0+u)) - gamma~(s0+w) on a small box, fitted by
    // c P_sigma(u, w) plus all monomials of total degree sigma+2 .. sigma+4
    const double s0 = fc.s_of_t(t0);
    const double eps = 0.05;
    const double lo = std::max(fc.s_min(), s0 - eps), hi = std::min(fc.s_max(), s0 + eps);
    const int m = 11;
    std::vector<double> grid(m);
    for (int i = 0; i < m; ++i) grid[i] = lo + (hi - lo) * i / (m - 1) - s0;
    std::vector<std::pair<int, int>> mono;
    for (int d = sigma + 2; d <= sigma + 4; ++d)
        for (int i = 0; i <= d; ++i) mono.emplace_back(i, d - i);
    const double scale = std::max(hi - s0, s0 - lo);
    Eigen::MatrixXd design(m * m, 1 + static_cast<int>(mono.size()));
    Eigen::MatrixXd rhs(m * m, 2);
    std::vector<PhaseSpacePoint> lifts(m);
    std::vector<Vector2d> curve_pts(m);
    for (int i = 0; i < m; ++i) {
        lifts[i] = fc.lift_at_s(s0 + grid[i]);
        curve_pts[i] = lifts[i].x;
    }
    int row = 0;
    for (int i = 0; i < m; ++i) {
        const double u = grid[i];
        const double span = std::max(std::abs(grid.front() - u), std::abs(grid.back() - u));
        const auto traj = integrate_flow(sym, lifts[i], span + 1e-12, 1e-14);
        for (int k = 0; k < m; ++k) {
            const double w = grid[k];
            const Vector2d gap = traj.at(w - u).x - curve_pts[k];
            const double us = u / scale, ws = w / scale;
            design(row, 0) = p_sigma_value(sigma, us, ws);
            for (std::size_t c = 0; c < mono.size(); ++c) {
                design(row, 1 + static_cast<int>(c)) = std::pow(us, mono[c].first) * std::pow(ws, mono[c].second);
            }
            rhs.row(row) = gap.transpose();
            ++row;
        }
    }
    const Eigen::MatrixXd coef = design.colPivHouseholderQr().solve(rhs);
    lv.fitted = Vector2d(coef(0, 0), coef(0, 1)) / std::pow(scale, sigma + 1);
    lv.fit_rel_error = (lv.fitted + lv.b).norm() / lv.b.norm();
    lv.verified = lv.fit_rel_error <= 0.02;
    if (!lv.verified) {
        throw LeadingVectorError("leading vector cross-check mismatch " + std::to_string(100.0 * lv.fit_rel_error) +
                                 "% at t = " + std::to_string(t0));
    }
    return lv;
}

ContactReport global_sigma(const SymbolPtr& sym, const CurvePtr& curve, const ContactConfig& cfg) {
    ContactReport rep;
    rep.symbol = std::string(sym->id());
    rep.curve = curve->describe();
    rep.a = curve->a();
    rep.b = curve->b();
    rep.j_max = cfg.j_max;
    rep.rtol = cfg.rtol;
    if (cfg.n_grid < 2) throw ConfigError("contact grid needs at least two points");
    if (!(curve->min_speed() > 0.0)) throw DomainError("curve is not regular (zero speed)");

    std::vector<double> grid(static_cast<std::size_t>(cfg.n_grid));
    for (int i = 0; i < cfg.n_grid; ++i) grid[i] = rep.a + (rep.b - rep.a) * i / (cfg.n_grid - 1);
    const double t_base = std::clamp(cfg.t_base.value_or(0.0), rep.a, rep.b);
    const std::size_t anchor = static_cast<std::size_t>(
        std::min_element(grid.begin(), grid.end(),
                         [&](double x, double y) { return std::abs(x - t_base) < std::abs(y - t_base); }) -
        grid.begin());
    grid[anchor] = t_base;

    const auto seeds = seed_tangential_frequencies(*sym, *curve, t_base);
    if (seeds.empty()) throw SeedError("no tangential frequency found at the base point");
    rep.branches = static_cast<int>(seeds.size());

    std::vector<FlowTimeCurve> lifts;
    for (const auto& seed : seeds) {
        lifts.emplace_back(sym, curve, continue_branch(*sym, *curve, grid, seed, anchor), t_base);
    }

    // per-t classification: maximum over branches
    for (std::size_t i = 0; i < grid.size(); ++i) {
        PointContact best;
        bool have = false;
        for (std::size_t br = 0; br < lifts.size(); ++br) {
            PointContact pc = contact_order_at(lifts[br], grid[i], cfg.j_max, cfg.rtol);
            pc.branch = static_cast<int>(br);
            auto key = [](const PointContact& p) { return p.sigma.value + (p.sigma.at_least ? 1000 : 0); };
            if (!have || key(pc) > key(best)) {
                best = pc;
                have = true;
            }
        }
        if (best.uncertain) ++rep.uncertain_points;
        rep.per_t.push_back(best);
    }

    // G2 points: union over branches
    for (const auto& fc : lifts) {
        const G2Scan sc = g2_scan(fc, cfg.g2_grid, cfg.rtol);
        rep.g2_non_isolated = rep.g2_non_isolated || sc.non_isolated;
        for (double t : sc.points) {
            const bool dup = std::any_of(rep.g2_points.begin(), rep.g2_points.end(),
                                         [&](double o) { return std::abs(o - t) <= 1e-6 * (rep.b - rep.a); });
            if (!dup) rep.g2_points.push_back(t);
        }
    }
    std::sort(rep.g2_points.begin(), rep.g2_points.end());
    if (rep.g2_non_isolated) rep.warnings.push_back("G2 set not isolated at grid resolution (possible flow line)");

    const auto inf_it = std::find_if(rep.per_t.begin(), rep.per_t.end(), [](const PointContact& p) { return p.sigma.at_least; });
    if (inf_it != rep.per_t.end()) {
        rep.sigma_global = inf_it->sigma;
        rep.t_max_contact = inf_it->t;
    } else {
        const PointContact* best = &rep.per_t[anchor];
        for (const auto& p : rep.per_t) {
            if (p.sigma.value > best->sigma.value) best = &p;
        }
        rep.sigma_global = best->sigma;
        rep.t_max_contact = best->t;
        rep.leading = leading_vector_b(lifts[static_cast<std::size_t>(best->branch)], best->t, best->sigma.value,
                                       cfg.verify_b);
    }
    if (rep.uncertain_points > 0) {
        rep.warnings.push_back(std::to_string(rep.uncertain_points) + " points with classification confidence below 2");
    }
    return rep;
}

nlohmann::json ContactReport::to_json() const {
    nlohmann::json j;
    j["symbol"] = symbol;
    j["curve"] = curve;
    j["interval"] = {a, b};
    j["j_max"] = j_max;
    j["rtol"] = rtol;
    j["branches"] = branches;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& p : per_t) {
        per.push_back({{"t", p.t},
                       {"sigma", p.sigma.to_string()},
                       {"confidence", p.confidence},
                       {"uncertain", p.uncertain},
                       {"jet_gaps", p.jet_gaps},
                       {"branch", p.branch}});
    }
    j["per_t"] = per;
    j["g2_points"] = g2_points;
    j["g2_non_isolated"] = g2_non_isolated;
    j["sigma_global"] = sigma_global.at_least ? "inf-flag (>=" + std::to_string(sigma_global.value) + ")"
                                              : std::to_string(sigma_global.value);
    j["t_max_contact"] = t_max_contact;
    if (leading) {
        j["b_vec"] = {leading->b[0], leading->b[1]};
        j["v_vec"] = {leading->v[0], leading->v[1]};
        j["b_dot_v"] = leading->pairing;
        j["b_fit_rel_error"] = leading->fit_rel_error;
    } else {
        j["b_vec"] = nullptr;
        j["v_vec"] = nullptr;
        j["b_dot_v"] = nullptr;
    }
    j["warnings"] = warnings;
    return j;
}

void ContactReport::write_csv(std::ostream& os) const {
    os << "t,sigma,confidence\n";
    char buf[64];
    for (const auto& p : per_t) {
        std::snprintf(buf, sizeof buf, "%.17g", p.t);
        os << buf << ',' << p.sigma.to_string() << ',';
        std::snprintf(buf, sizeof buf, "%.6f", p.confidence);
        os << buf << '\n';
    }
}

}  // namespace restrictlab
