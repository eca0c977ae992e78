#include "restrictlab/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include <boost/numeric/odeint.hpp>

namespace restrictlab {

namespace {

using State = std::array<double, 4>;

Eigen::Vector4d to_vec(const State& s) { return {s[0], s[1], s[2], s[3]}; }

std::vector<FlowTrajectory::Sample> integrate_one_side(const Symbol& sym, const PhaseSpacePoint& start, double s_end,
                                                       double tol, double& drift, bool& left_region) {
    namespace odeint = boost::numeric::odeint;
    const double p0 = sym.apply(start.args());
    const SymbolRegion& reg = sym.region();
    const Eigen::Vector2d center = 0.5 * (reg.position_lo + reg.position_hi);
    const Eigen::Vector2d half = (reg.position_hi - reg.position_lo);  // doubled half-width

    auto rhs = [&sym](const State& y, State& dy, double /*s*/) {
        const Eigen::Vector4d f = hamiltonian_field(sym, PhaseSpacePoint::from_state(to_vec(y)));
        for (int i = 0; i < 4; ++i) dy[i] = f[i];
    };
    auto sample_of = [&sym](double s, const State& y) {
        const PhaseSpacePoint pt = PhaseSpacePoint::from_state(to_vec(y));
        return FlowTrajectory::Sample{s, to_vec(y), hamiltonian_field(sym, pt), flow_acceleration(sym, pt)};
    };

    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    State y{start.x[0], start.x[1], start.xi[0], start.xi[1]};
    double s = 0.0;
    const double dir = s_end >= 0.0 ? 1.0 : -1.0;
    double ds = dir * std::min(1e-3, std::max(std::abs(s_end), 1e-12));
    std::vector<FlowTrajectory::Sample> out{sample_of(0.0, y)};
    if (s_end == 0.0) return out;
    int guard = 0;
    while (dir * (s_end - s) > 0.0) {
        if (dir * (s + ds - s_end) > 0.0) ds = s_end - s;
        const double s_before = s;
        const auto res = stepper.try_step(rhs, y, s, ds);
        if (res == odeint::fail) {
            if (std::abs(ds) < 1e-13 * std::max(1.0, std::abs(s))) {
                throw IntegrationError("step size collapse at s = " + std::to_string(s));
            }
            if (++guard > 100000) throw IntegrationError("too many rejected steps");
            continue;
        }
        if (s == s_before) throw IntegrationError("integrator made no progress");
        out.push_back(sample_of(s, y));
        const Eigen::Vector2d pos(y[0], y[1]);
        if (((pos - center).cwiseAbs().array() > half.array()).any()) left_region = true;
        drift = std::max(drift, std::abs(sym.apply(PhaseArgs<double>{y[0], y[1], y[2], y[3]}) - p0));
    }
    return out;
}

}  // namespace

Eigen::Vector4d flow_acceleration(const Symbol& sym, const PhaseSpacePoint& pt) {
    const Eigen::Matrix4d h = hessian(sym, pt);
    Eigen::Matrix4d jf;
    jf.topRows<2>() = h.bottomRows<2>();
    jf.bottomRows<2>() = -h.topRows<2>();
    return jf * hamiltonian_field(sym, pt);
}

FlowTrajectory::FlowTrajectory(PhaseSpacePoint origin, std::vector<Sample> samples, double energy_drift,
                               bool left_region)
    : origin_(std::move(origin)), samples_(std::move(samples)), energy_drift_(energy_drift), left_region_(left_region) {}

Eigen::Vector4d FlowTrajectory::state_at(double s) const {
    if (s < s_min() - 1e-15 || s > s_max() + 1e-15) {
        throw DomainError("dense output requested outside the integrated interval");
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                               [](double v, const Sample& smp) { return v < smp.s; });
    if (it == samples_.begin()) return samples_.front().state;
    if (it == samples_.end()) return samples_.back().state;
    const Sample& a = *(it - 1);
    const Sample& b = *it;
    const double h = b.s - a.s;
    const double u = (s - a.s) / h;
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    // quintic Hermite basis on [0, 1]
    const double h00 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
    const double h10 = u - 6 * u3 + 8 * u4 - 3 * u5;
    const double h20 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
    const double h01 = 10 * u3 - 15 * u4 + 6 * u5;
    const double h11 = -4 * u3 + 7 * u4 - 3 * u5;
    const double h21 = 0.5 * u3 - u4 + 0.5 * u5;
    return h00 * a.state + h * h10 * a.d1 + h * h * h20 * a.d2 + h01 * b.state + h * h11 * b.d1 + h * h * h21 * b.d2;
}

PhaseSpacePoint FlowTrajectory::at(double s) const { return PhaseSpacePoint::from_state(state_at(s)); }

void FlowTrajectory::write_csv(std::ostream& os, const Symbol& sym) const {
    os << "s,x1,x2,xi1,xi2,p_value\n";
    os.precision(17);
    for (const auto& smp : samples_) {
        const auto& y = smp.state;
        os << smp.s << ',' << y[0] << ',' << y[1] << ',' << y[2] << ',' << y[3] << ','
           << sym.apply(PhaseArgs<double>{y[0], y[1], y[2], y[3]}) << '\n';
    }
}

FlowTrajectory integrate_flow(const Symbol& sym, const PhaseSpacePoint& start, double s_max, double tol) {
    if (!(tol >= 1e-14 && tol <= 1e-6)) throw DomainError("integration tolerance must lie in [1e-14, 1e-6]");
    if (!start.finite()) throw DomainError("non-finite start point");
    double drift = 0.0;
    bool left = false;
    auto back = integrate_one_side(sym, start, -std::abs(s_max), tol, drift, left);
    auto fwd = integrate_one_side(sym, start, std::abs(s_max), tol, drift, left);
    std::vector<FlowTrajectory::Sample> all;
    all.reserve(back.size() + fwd.size());
    for (auto it = back.rbegin(); it != back.rend(); ++it) all.push_back(*it);
    all.insert(all.end(), fwd.begin() + 1, fwd.end());
    return FlowTrajectory(start, std::move(all), drift, left);
}

std::string_view to_string(JetMethod m) {
    return m == JetMethod::Recursion ? "recursion" : "finite-difference";
}

std::array<Jet, 4> flow_series(const Symbol& sym, const PhaseArgs<Jet>& start, int order) {
    // y(s) = sum_j y_j s^j with y_{m+1} = [F(y)]_m / (m + 1); each pass fixes
    // one more coefficient. The constant terms of `start` seed y_0; the
    // higher terms of `start` are ignored.
    std::array<Jet, 4> y;
    for (int v = 0; v < 4; ++v) y[v] = Jet(start[v][0], order);
    for (int m = 0; m < order; ++m) {
        PhaseArgs<Jet> args;
        for (int v = 0; v < 4; ++v) args[v] = y[v].truncated(m);
        const auto f = hamiltonian_field(sym, args);
        for (int v = 0; v < 4; ++v) y[v][m + 1] = f[v][m] / (m + 1);
    }
    return y;
}

namespace {

FlowJet recursion_jet(const Symbol& sym, const PhaseSpacePoint& start, int order) {
    if (order > sym.max_order() - 2) throw OrderError("recursion jet order exceeds max_order - 2");
    const auto a = start.args();
    PhaseArgs<Jet> args;
    for (int v = 0; v < 4; ++v) args[v] = Jet(a[v], order);
    const auto y = flow_series(sym, args, order);
    FlowJet jet;
    jet.order = order;
    jet.method = JetMethod::Recursion;
    for (int j = 0; j <= order; ++j) {
        jet.z.emplace_back(y[0].derivative(j), y[1].derivative(j));
        jet.zeta.emplace_back(y[2].derivative(j), y[3].derivative(j));
    }
    return jet;
}

// Least-squares Taylor coefficients (derivatives) of the dense output on
// Chebyshev points of [-h, h], fitted by a degree `degree` polynomial.
Eigen::MatrixXd fitted_derivatives(const FlowTrajectory& traj, double h, int degree) {
    const int m = 2 * degree + 7;
    Eigen::MatrixXd vander(m, degree + 1);
    Eigen::MatrixXd values(m, 4);
    for (int i = 0; i < m; ++i) {
        const double u = std::cos(M_PI * (i + 0.5) / m);
        double p = 1.0;
        for (int d = 0; d <= degree; ++d, p *= u) vander(i, d) = p;
        values.row(i) = traj.state_at(u * h).transpose();
    }
    Eigen::MatrixXd coeffs = vander.colPivHouseholderQr().solve(values);
    double fact = 1.0, hp = 1.0;
    for (int d = 0; d <= degree; ++d) {
        if (d > 0) {
            fact *= d;
            hp *= h;
        }
        coeffs.row(d) *= fact / hp;
    }
    return coeffs;
}

FlowJet finite_difference_jet(const Symbol& sym, const PhaseSpacePoint& start, int order) {
    if (order > 8) throw OrderError("finite-difference jet order is limited to 8");
    const double h = std::max(1e-2, std::pow(1e-10, 1.0 / (order + 3)));
    const int degree = order + 2;
    const FlowTrajectory traj = integrate_flow(sym, start, h, 1e-14);
    const Eigen::MatrixXd d1 = fitted_derivatives(traj, h, degree);
    const Eigen::MatrixXd d2 = fitted_derivatives(traj, 0.5 * h, degree);
    FlowJet jet;
    jet.order = order;
    jet.method = JetMethod::FiniteDifference;
    for (int j = 0; j <= order; ++j) {
        const double w = std::pow(2.0, degree + 1 - j);
        const Eigen::Vector4d r = (w * d2.row(j) - d1.row(j)).transpose() / (w - 1.0);
        jet.z.emplace_back(r[0], r[1]);
        jet.zeta.emplace_back(r[2], r[3]);
    }
    return jet;
}

}  // namespace

FlowJet flow_jet(const Symbol& sym, const PhaseSpacePoint& start, int order, JetMethod method) {
    if (order < 0) throw OrderError("negative jet order");
    return method == JetMethod::Recursion ? recursion_jet(sym, start, order) : finite_difference_jet(sym, start, order);
}

void cross_check_jets(const FlowJet& reference, const FlowJet& other, int j_max, double rtol) {
    const int n = std::min({j_max, reference.order, other.order});
    for (int j = 0; j <= n; ++j) {
        for (int c = 0; c < 2; ++c) {
            const double pairs[2][2] = {{reference.z[j][c], other.z[j][c]}, {reference.zeta[j][c], other.zeta[j][c]}};
            for (const auto& p : pairs) {
                if (std::abs(p[0] - p[1]) > rtol * std::max(1.0, std::abs(p[0]))) {
                    throw JetInconsistencyError("jet order " + std::to_string(j) + ": " + std::to_string(p[0]) + " (" +
                                                std::string(to_string(reference.method)) + ") vs " +
                                                std::to_string(p[1]) + " (" + std::string(to_string(other.method)) +
                                                ")");
                }
            }
        }
    }
}

Diffeomorphism Diffeomorphism::affine(const Eigen::Matrix2d& a, const Eigen::Vector2d& b) {
    return {[a, b](const Eigen::Vector2d& x) -> Eigen::Vector2d { return a * x + b; },
            [a](const Eigen::Vector2d&) -> Eigen::Matrix2d { return a; }};
}

PhaseSpacePoint cotangent_lift(const Diffeomorphism& diffeo, const PhaseSpacePoint& pt) {
    const Eigen::Matrix2d j = diffeo.jacobian(pt.x);
    if (std::abs(j.determinant()) < 1e-8) throw DomainError("singular chart Jacobian in cotangent lift");
    return {diffeo.map(pt.x), j.transpose().partialPivLu().solve(pt.xi)};
}

AffineTransportedSymbol::AffineTransportedSymbol(SymbolPtr inner, const Eigen::Matrix2d& a, const Eigen::Vector2d& b)
    : inner_(std::move(inner)), a_(a), ainv_(a.inverse()), b_(b), id_("affine(" + std::string(inner_->id()) + ")") {
    const SymbolRegion& r = inner_->region();
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector2d hi = -lo;
    for (int c = 0; c < 4; ++c) {
        const Eigen::Vector2d corner((c & 1) ? r.position_hi[0] : r.position_lo[0],
                                     (c & 2) ? r.position_hi[1] : r.position_lo[1]);
        const Eigen::Vector2d y = a * corner + b;
        lo = lo.cwiseMin(y);
        hi = hi.cwiseMax(y);
    }
    region_.position_lo = lo;
    region_.position_hi = hi;
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(a);
    region_.frequency_center = a.transpose().partialPivLu().solve(r.frequency_center);
    region_.frequency_r_min = r.frequency_r_min / svd.singularValues()[0];
    region_.frequency_r_max = r.frequency_r_max / svd.singularValues()[1];
}

}  // namespace restrictlab
