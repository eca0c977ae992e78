#include "restrictlab/curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "restrictlab/errors.hpp"

namespace restrictlab {

Eigen::Vector2d Curve::point(double t) const {
    const auto j = jet(t, 0);
    return {j[0][0], j[1][0]};
}

Eigen::Vector2d Curve::derivative(double t, int j) const {
    const auto s = jet(t, j);
    return {s[0].derivative(j), s[1].derivative(j)};
}

double Curve::min_speed(int samples) const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double t = a() + (b() - a()) * i / (samples - 1);
        m = std::min(m, derivative(t, 1).norm());
    }
    return m;
}

ExpressionCurve::ExpressionCurve(std::string_view x_expr, std::string_view y_expr, double a, double b)
    : Curve(a, b), x_(Expression::parse(x_expr, {"t"})), y_(Expression::parse(y_expr, {"t"})) {}

std::shared_ptr<ExpressionCurve> ExpressionCurve::polynomial(const std::vector<double>& cx,
                                                             const std::vector<double>& cy, double a, double b) {
    auto render = [](const std::vector<double>& c) {
        std::ostringstream os;
        os.precision(17);
        if (c.empty()) return std::string("0");
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (k) os << " + ";
            os << "(" << c[k] << ")";
            if (k) os << "*t^" << k;
        }
        return os.str();
    };
    return std::make_shared<ExpressionCurve>(render(cx), render(cy), a, b);
}

std::string ExpressionCurve::describe() const { return "poly:" + x_.source() + "," + y_.source(); }

std::array<Jet, 2> ExpressionCurve::jet(double t, int order) const {
    const std::array<Jet, 1> var{Jet::variable(t, order)};
    return {x_.evaluate(var).truncated(order), y_.evaluate(var).truncated(order)};
}

CircleCurve::CircleCurve(const Eigen::Vector2d& center, double radius, double a, double b)
    : Curve(a, b), center_(center), radius_(radius) {
    if (!(radius > 0.0)) throw DomainError("circle radius must be positive");
}

std::string CircleCurve::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "circle:" << center_[0] << "," << center_[1] << "," << radius_;
    return os.str();
}

std::array<Jet, 2> CircleCurve::jet(double t, int order) const {
    const Jet v = Jet::variable(t, order);
    return {center_[0] + radius_ * cos(v), center_[1] + radius_ * sin(v)};
}

LatitudeCurve::LatitudeCurve(double theta0, double a, double b) : Curve(a, b), theta0_(theta0) {}

std::string LatitudeCurve::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "latitude:" << theta0_;
    return os.str();
}

std::array<Jet, 2> LatitudeCurve::jet(double t, int order) const { return {Jet(theta0_, order), Jet::variable(t, order)}; }

TableCurve::TableCurve(std::vector<Eigen::Vector2d> points, int degree)
    : Curve(0.0, 0.0), points_(std::move(points)), degree_(degree) {
    if (points_.size() < 2) throw DomainError("table curve needs at least two points");
    params_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const double d = (points_[i] - points_[i - 1]).norm();
        if (d == 0.0) throw DomainError("table curve has repeated points");
        params_.push_back(params_.back() + d);
    }
    degree_ = std::min<int>(degree_, static_cast<int>(points_.size()) - 1);
    set_interval(0.0, params_.back());
}

std::string TableCurve::describe() const { return "table:" + std::to_string(points_.size()) + " points"; }

std::array<Jet, 2> TableCurve::jet(double t, int order) const {
    // window of degree+1 nodes centered on t
    const auto it = std::lower_bound(params_.begin(), params_.end(), t);
    const int n = static_cast<int>(params_.size());
    int center = static_cast<int>(it - params_.begin());
    int lo = std::clamp(center - (degree_ + 1) / 2, 0, n - degree_ - 1);
    const int m = degree_ + 1;
    const double scale = std::max(params_[lo + m - 1] - params_[lo], 1e-300);
    Eigen::MatrixXd v(m, m);
    Eigen::MatrixXd rhs(m, 2);
    for (int i = 0; i < m; ++i) {
        const double u = (params_[lo + i] - t) / scale;
        double p = 1.0;
        for (int k = 0; k < m; ++k, p *= u) v(i, k) = p;
        rhs.row(i) = points_[lo + i].transpose();
    }
    const Eigen::MatrixXd c = v.partialPivLu().solve(rhs);
    std::array<Jet, 2> out{Jet(0.0, order), Jet(0.0, order)};
    double sp = 1.0;
    for (int k = 0; k <= order; ++k, sp /= scale) {
        if (k < m) {
            out[0][k] = c(k, 0) * sp;
            out[1][k] = c(k, 1) * sp;
        }
    }
    return out;
}

ReparametrizedCurve::ReparametrizedCurve(CurvePtr inner, std::string_view phi_expr, double a, double b)
    : Curve(a, b), inner_(std::move(inner)), phi_(Expression::parse(phi_expr, {"t"})) {}

std::string ReparametrizedCurve::describe() const { return inner_->describe() + " o (" + phi_.source() + ")"; }

std::array<Jet, 2> ReparametrizedCurve::jet(double t, int order) const {
    const std::array<Jet, 1> var{Jet::variable(t, order)};
    const Jet phi = phi_.evaluate(var).truncated(order);
    const auto g = inner_->jet(phi[0], order);
    return {compose(g[0], phi), compose(g[1], phi)};
}

AffineImageCurve::AffineImageCurve(CurvePtr inner, const Eigen::Matrix2d& a, const Eigen::Vector2d& b)
    : Curve(inner->a(), inner->b()), inner_(std::move(inner)), a_(a), b_(b) {}

std::string AffineImageCurve::describe() const { return "affine(" + inner_->describe() + ")"; }

std::array<Jet, 2> AffineImageCurve::jet(double t, int order) const {
    const auto g = inner_->jet(t, order);
    return {a_(0, 0) * g[0] + a_(0, 1) * g[1] + b_[0], a_(1, 0) * g[0] + a_(1, 1) * g[1] + b_[1]};
}

DilatedCurve::DilatedCurve(CurvePtr inner, double factor)
    : Curve(inner->a(), inner->b()), inner_(std::move(inner)), factor_(factor) {}

std::string DilatedCurve::describe() const { return std::to_string(factor_) + "*" + inner_->describe(); }

std::array<Jet, 2> DilatedCurve::jet(double t, int order) const {
    const auto g = inner_->jet(t, order);
    return {factor_ * g[0], factor_ * g[1]};
}

namespace {

std::vector<double> parse_numbers(std::string_view s, std::string_view what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = std::min(s.find(',', pos), s.size());
        std::string_view tok = s.substr(pos, comma - pos);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
            throw ParseError("curve spec '" + std::string(what) + "': bad number '" + std::string(tok) + "'");
        }
        out.push_back(v);
        pos = comma + 1;
    }
    return out;
}

}  // namespace

namespace {

std::shared_ptr<Curve> parse_curve_body(std::string_view spec) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string_view::npos) throw ParseError("curve spec '" + std::string(spec) + "' lacks a kind prefix");
    const std::string_view kind = spec.substr(0, colon);
    const std::string_view body = spec.substr(colon + 1);
    if (kind == "poly") {
        // split on the comma at parenthesis depth zero
        int depth = 0;
        std::size_t split = std::string_view::npos;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (body[i] == '(') ++depth;
            if (body[i] == ')') --depth;
            if (body[i] == ',' && depth == 0) {
                if (split != std::string_view::npos) throw ParseError("poly curve spec needs exactly two components");
                split = i;
            }
        }
        if (split == std::string_view::npos) throw ParseError("poly curve spec needs two comma-separated components");
        return std::make_shared<ExpressionCurve>(body.substr(0, split), body.substr(split + 1), -0.3, 0.3);
    }
    if (kind == "circle") {
        const auto v = parse_numbers(body, spec);
        if (v.size() != 3) throw ParseError("circle curve spec needs cx,cy,r");
        return std::make_shared<CircleCurve>(Eigen::Vector2d(v[0], v[1]), v[2]);
    }
    if (kind == "latitude") {
        const auto v = parse_numbers(body, spec);
        if (v.size() != 1) throw ParseError("latitude curve spec needs theta0");
        return std::make_shared<LatitudeCurve>(v[0]);
    }
    if (kind == "line") {
        const auto v = parse_numbers(body, spec);
        if (v.size() != 4) throw ParseError("line curve spec needs x0,y0,x1,y1");
        return ExpressionCurve::polynomial({v[0], v[2] - v[0]}, {v[1], v[3] - v[1]}, 0.0, 1.0);
    }
    throw ParseError("unknown curve kind '" + std::string(kind) + "'");
}

}  // namespace

CurvePtr parse_curve_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind");
        std::shared_ptr<Curve> c;
        if (kind == "poly") {
            const auto coeffs = j.at("coeffs").get<std::vector<std::vector<double>>>();
            if (coeffs.size() != 2 || coeffs[0].empty() || coeffs[1].empty())
                throw ParseError("poly curve needs coeffs [[x...],[y...]]");
            c = ExpressionCurve::polynomial(coeffs[0], coeffs[1], -0.3, 0.3);
        } else if (kind == "circle") {
            const auto ctr = j.at("center").get<std::vector<double>>();
            if (ctr.size() != 2) throw ParseError("circle center needs two coordinates");
            c = std::make_shared<CircleCurve>(Eigen::Vector2d(ctr[0], ctr[1]), j.at("radius").get<double>());
        } else if (kind == "latitude") {
            c = std::make_shared<LatitudeCurve>(j.at("theta0").get<double>());
        } else if (kind == "table") {
            std::vector<Eigen::Vector2d> pts;
            for (const auto& p : j.at("points")) {
                if (p.size() != 2) throw ParseError("table points are [x, y] pairs");
                pts.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
            c = std::make_shared<TableCurve>(std::move(pts), j.value("degree", 11));
        } else {
            throw ParseError("unknown curve kind '" + kind + "'");
        }
        if (j.contains("interval")) {
            const auto iv = j["interval"].get<std::vector<double>>();
            if (iv.size() != 2 || !(iv[1] > iv[0])) throw ParseError("curve interval needs [a, b] with a < b");
            c->set_interval(iv[0], iv[1]);
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("curve object: ") + e.what());
    }
}

CurvePtr parse_curve_spec(std::string_view spec) {
    if (!spec.empty() && spec.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(spec);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("curve object: ") + e.what());
        }
        return parse_curve_json(j);
    }
    const std::size_t at = spec.rfind('@');
    if (at == std::string_view::npos) return parse_curve_body(spec);
    const auto iv = parse_numbers(spec.substr(at + 1), spec);
    if (iv.size() != 2 || !(iv[1] > iv[0])) throw ParseError("curve interval suffix needs @a,b with a < b");
    auto c = parse_curve_body(spec.substr(0, at));
    c->set_interval(iv[0], iv[1]);
    return c;
}

}  // namespace restrictlab
