#include "restrictlab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include "restrictlab/errors.hpp"
#include "restrictlab/flow.hpp"
#include "restrictlab/schema_data.hpp"
#include "restrictlab/symbol.hpp"

namespace restrictlab {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_node(const json& node, const json& schema, const std::string& path) {
    if (schema.contains("type")) {
        const json types = schema["type"].is_array() ? schema["type"] : json::array({schema["type"]});
        bool ok = false;
        for (const std::string t : types)
            ok = ok || (t == "string" && node.is_string()) || (t == "number" && node.is_number()) ||
                 (t == "integer" && node.is_number_integer()) || (t == "array" && node.is_array()) ||
                 (t == "object" && node.is_object()) || (t == "boolean" && node.is_boolean());
        if (!ok) throw ConfigError(path + ": expected " + schema["type"].dump());
    }
    if (node.is_number()) {
        const double v = node.get<double>();
        if (schema.contains("minimum") && v < schema["minimum"].get<double>())
            throw ConfigError(path + ": below minimum " + schema["minimum"].dump());
        if (schema.contains("maximum") && v > schema["maximum"].get<double>())
            throw ConfigError(path + ": above maximum " + schema["maximum"].dump());
        if (schema.contains("exclusiveMinimum") && v <= schema["exclusiveMinimum"].get<double>())
            throw ConfigError(path + ": must exceed " + schema["exclusiveMinimum"].dump());
    }
    if (node.is_string() && schema.contains("pattern")) {
        if (!std::regex_match(node.get<std::string>(), std::regex(schema["pattern"].get<std::string>())))
            throw ConfigError(path + ": '" + node.get<std::string>() + "' does not match " + schema["pattern"].dump());
    }
    if (node.is_array()) {
        if (schema.contains("minItems") && node.size() < schema["minItems"].get<std::size_t>())
            throw ConfigError(path + ": too few items");
        if (schema.contains("maxItems") && node.size() > schema["maxItems"].get<std::size_t>())
            throw ConfigError(path + ": too many items");
        if (schema.contains("items"))
            for (std::size_t i = 0; i < node.size(); ++i)
                check_node(node[i], schema["items"], path + "[" + std::to_string(i) + "]");
    }
    if (node.is_object() && schema.contains("properties")) {
        const json& props = schema["properties"];
        for (auto it = node.begin(); it != node.end(); ++it) {
            if (!props.contains(it.key())) {
                if (schema.value("additionalProperties", true) == false)
                    throw ConfigError(path + ": unknown key '" + it.key() + "'");
                continue;
            }
            check_node(it.value(), props[it.key()], path + "." + it.key());
        }
    }
}

json schema_defaults(const json& schema) {
    json out = json::object();
    for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it) {
        const json& p = it.value();
        if (p.contains("properties")) {
            out[it.key()] = schema_defaults(p);
        } else if (p.contains("default")) {
            out[it.key()] = p["default"];
        }
    }
    return out;
}

}  // namespace

const json& experiment_schema() {
    static const json schema = json::parse(kExperimentSchema);
    return schema;
}

void validate_config(const json& doc) { check_node(doc, experiment_schema(), "config"); }

json ExperimentConfig::to_json() const {
    return json{{"symbol", symbol},
                {"curve", !curve.empty() && curve.front() == '{' ? json::parse(curve) : json(curve)},
                {"lambda_grid",
                 {{"min", lambda_grid.min},
                  {"max", lambda_grid.max},
                  {"points_per_decade", lambda_grid.points_per_decade},
                  {"jitter_group", lambda_grid.jitter_group}}},
                {"window", {window[0], window[1]}},
                {"q_list", q_list},
                {"sigma_list", sigma_list},
                {"j_max", j_max},
                {"rtol", rtol},
                {"seed", seed},
                {"output", output},
                {"jobs", jobs},
                {"tolerance", tolerance},
                {"sigma_max", sigma_max},
                {"sigma", sigma},
                {"lambda", lambda},
                {"c_width", c_width},
                {"t0", t0},
                {"search_steps", search_steps},
                {"flow_starts", flow_starts}};
}

ExperimentConfig load_config(const std::string& command, const json& user) {
    if (!user.is_object()) throw ConfigError("config: expected a JSON object");
    validate_config(user);
    const json& schema = experiment_schema();
    json doc = schema_defaults(schema);
    const json& per_cmd = schema["x-command-defaults"];
    if (per_cmd.contains(command)) doc.merge_patch(per_cmd[command]);
    doc.merge_patch(user);
    validate_config(doc);

    ExperimentConfig c;
    c.symbol = doc["symbol"];
    c.curve = doc["curve"].is_object() ? doc["curve"].dump() : doc["curve"].get<std::string>();
    const json& g = doc["lambda_grid"];
    c.lambda_grid = {g["min"], g["max"], g["points_per_decade"], g["jitter_group"]};
    if (!(c.lambda_grid.max > c.lambda_grid.min)) throw ConfigError("config.lambda_grid: max must exceed min");
    c.window = {doc["window"][0], doc["window"][1]};
    if (!(c.window[1] > c.window[0])) throw ConfigError("config.window: need w0 < w1");
    c.q_list = doc["q_list"].get<std::vector<std::string>>();
    for (const auto& q : c.q_list)
        if (q_value(q) < 2) throw ConfigError("config.q_list: q must lie in [2, inf]");
    c.sigma_list = doc["sigma_list"].get<std::vector<std::string>>();
    c.j_max = doc["j_max"];
    c.rtol = doc["rtol"];
    c.seed = doc["seed"];
    c.output = doc["output"];
    c.jobs = doc["jobs"];
    c.tolerance = doc["tolerance"];
    c.sigma_max = doc["sigma_max"];
    c.sigma = doc["sigma"];
    c.lambda = doc["lambda"];
    c.c_width = doc["c_width"];
    c.t0 = doc["t0"];
    c.search_steps = doc["search_steps"];
    c.flow_starts = doc["flow_starts"];

    // family feasibility
    if (command.rfind("verify-", 0) == 0 || command == "extremize") {
        const Family fam = command == "extremize" ? Family::Torus : family_of_symbol(c.symbol);
        const double cap = fam == Family::Torus ? 1e4 : fam == Family::Sphere ? 5000 : 6000;
        const double lo = fam == Family::Torus ? 5 : fam == Family::Sphere ? 1 : 0;
        if (c.lambda_grid.max > cap || c.lambda_grid.min < lo)
            throw ConfigError("config.lambda_grid: outside the feasible range for " + std::string(to_string(fam)));
    }
    return c;
}

Family family_of_symbol(const std::string& symbol) {
    if (symbol == "torus_laplace") return Family::Torus;
    if (symbol == "sphere_laplace") return Family::Sphere;
    if (symbol == "hermite") return Family::Hermite;
    throw ConfigError("no spectral model for symbol '" + symbol + "'");
}

int resolve_jobs(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RESTRICTLAB_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

double q_value(const std::string& text) {
    const ExponentQ q = ExponentQ::parse(text);
    return q.infinite ? std::numeric_limits<double>::infinity() : q.to_double();
}

std::vector<double> grid_levels(const LambdaGrid& grid, Family family) {
    const double decades = std::log10(grid.max / grid.min);
    const int groups = std::max(4, static_cast<int>(std::lround(grid.points_per_decade * decades)) + 1);
    std::vector<double> out;
    for (double v : geometric_grid(grid.min, grid.max, groups)) {
        if (family != Family::Torus) v = std::round(v);
        if (out.empty() || v > out.back()) out.push_back(v);
    }
    return out;
}

std::vector<double> jitter_levels(double base, int jitter_group, Family family) {
    std::vector<double> out;
    for (int j = 0; j < jitter_group; ++j) out.push_back(family == Family::Torus ? base + 0.3 * j : base + j);
    return out;
}

NormSample measure_norm(Family family, double level, const CurvePtr& curve, const std::array<double, 2>& window,
                        std::uint64_t seed) {
    ClusterBasis basis;
    switch (family) {
    case Family::Torus: basis = torus_cluster(level, window[0], window[1]); break;
    case Family::Sphere: basis = sphere_cluster(static_cast<int>(level)); break;
    case Family::Hermite: basis = hermite_cluster(static_cast<int>(level)); break;
    }
    const CurvePtr mc = model_curve(basis, curve);
    // the latitude shortcut needs no quadrature beyond its bookkeeping
    const QuadratureRule quad = model_quadrature(basis, curve);
    GramOptions opt;
    opt.seed = seed;
    NormSample s = gram_operator_norm(basis, *mc, quad, opt);
    s.meta["level"] = level;
    return s;
}

std::vector<NormSample> sweep_norms(Family family, const std::vector<double>& base_levels, int jitter_group,
                                    const CurvePtr& curve, const std::array<double, 2>& window, std::uint64_t seed,
                                    int jobs) {
    struct Job {
        double level, group;
    };
    std::vector<Job> todo;
    for (double b : base_levels)
        for (double l : jitter_levels(b, jitter_group, family)) todo.push_back({l, b});
    std::vector<NormSample> out(todo.size());
    std::vector<std::exception_ptr> errors(todo.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            try {
                out[i] = measure_norm(family, todo[i].level, curve, window, seed);
                out[i].group_lambda = todo[i].group;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(todo.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

void write_samples_csv(std::ostream& os, const std::vector<NormSample>& samples, const std::string& sigma_predicted,
                       const std::string& header) {
    if (!header.empty()) os << "# " << header << "\n";
    os << "family,lambda,q,sigma_predicted,value,dim,quad_n,iterations,flag\n";
    for (const auto& s : samples) {
        os << to_string(s.family) << ',' << fmt_double(s.lambda) << ',' << fmt_double(s.q) << ',' << sigma_predicted
           << ',' << fmt_double(s.value) << ',' << static_cast<long long>(s.meta.at("dim")) << ','
           << static_cast<long long>(s.meta.at("quad_n")) << ',' << static_cast<long long>(s.meta.at("iterations"))
           << ',' << (s.flagged ? "nonconverged" : s.method) << '\n';
    }
}

ContactSigma sigma_from_report(const ContactReport& r) {
    if (r.sigma_global.at_least) return ContactSigma::inf();
    return {static_cast<long>(r.sigma_global.value), false};
}

json VerdictReport::to_json() const {
    json j{{"family", family},
           {"symbol", symbol},
           {"curve", curve},
           {"sigma_detected", sigma_detected},
           {"rho_target", rational_string(rho_target)},
           {"rho_target_float", rational_double(rho_target)},
           {"target_kind", target_kind},
           {"slope", slope},
           {"stderr", stderr_},
           {"tolerance", tolerance},
           {"pass", pass},
           {"raw", raw},
           {"warnings", warnings}};
    if (fit) {
        j["n_points"] = fit->n_points;
        j["intercept"] = fit->intercept;
        j["residuals"] = fit->residuals;
    }
    return j;
}

json VerdictReport::fit_json() const {
    return json{{"slope", slope}, {"stderr", stderr_}, {"target_rho", rational_double(rho_target)}, {"pass", pass}};
}

VerdictReport run_verify(Family family, const ExperimentConfig& cfg, std::vector<NormSample>* samples_out) {
    VerdictReport v;
    v.family = to_string(family);
    v.symbol = cfg.symbol;
    v.curve = cfg.curve;
    v.tolerance = cfg.tolerance;
    if (family_of_symbol(cfg.symbol) != family)
        throw ConfigError("symbol '" + cfg.symbol + "' does not belong to the " + v.family + " model");
    const CurvePtr curve = parse_curve_spec(cfg.curve);
    const SymbolPtr sym = make_symbol(cfg.symbol);

    ContactConfig cc;
    cc.j_max = cfg.j_max;
    cc.rtol = cfg.rtol;
    cc.verify_b = false;
    const ContactReport contact = global_sigma(sym, curve, cc);
    const ContactSigma sigma = sigma_from_report(contact);
    v.sigma_detected = contact.sigma_global.to_string();
    for (const auto& w : contact.warnings) v.warnings.push_back("contact: " + w);
    if (contact.uncertain_points > 0) v.warnings.push_back("contact: uncertain classification at some grid points");

    const ExponentQ q2{Rational(2), false};
    const RhoValue rv = rho_exponent(q2, sigma);
    if (rv.infinite_caveat) v.warnings.push_back("sigma = inf: exponent holds up to lambda^eps losses");
    if (rv.transverse_fallback) v.warnings.push_back("transverse curve: baseline exponent used");
    if (family == Family::Hermite) {
        v.rho_target = hermite_exponent(q2, sigma);
        v.target_kind = "hermite_exponent";
    } else {
        v.rho_target = rv.value;
        v.target_kind = "rho";
    }

    const auto levels = grid_levels(cfg.lambda_grid, family);
    const auto samples = sweep_norms(family, levels, cfg.lambda_grid.jitter_group, curve, cfg.window, cfg.seed,
                                     resolve_jobs(cfg.jobs));
    for (const auto& s : samples)
        if (s.flagged) v.warnings.push_back("lanczos did not converge at lambda = " + fmt_double(s.lambda));
    if (samples_out) *samples_out = samples;

    const bool write = !cfg.output.empty();
    std::filesystem::path dir(cfg.output);
    if (write) {
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "contact.json") << contact.to_json().dump(2) << "\n";
        std::ofstream os(dir / "samples.csv");
        write_samples_csv(os, samples, sigma.to_string(), "verify " + v.family + " seed=" + std::to_string(cfg.seed));
        v.raw = (dir / "samples.csv").string();
    }
    v.fit = fit_exponent(samples, cfg.lambda_grid.jitter_group);
    v.slope = v.fit->slope;
    v.stderr_ = v.fit->stderr_;
    v.pass = std::abs(v.slope - rational_double(v.rho_target)) <= cfg.tolerance;
    if (write) {
        std::ofstream(dir / "fit.json") << v.fit_json().dump(2) << "\n";
        std::ofstream(dir / "verdict.json") << v.to_json().dump(2) << "\n";
    }
    return v;
}

// ---------------------------------------------------------------------------

json FlowCheckReport::to_json() const {
    json arr = json::array();
    for (const auto& s : symbols)
        arr.push_back({{"symbol", s.symbol},
                       {"starts", s.starts},
                       {"max_energy_drift", s.max_energy_drift},
                       {"max_reversal_error", s.max_reversal_error},
                       {"max_jet_rel_error", s.max_jet_rel_error}});
    return json{{"symbols", arr},
                {"energy_tol", energy_tol},
                {"reversal_tol", reversal_tol},
                {"jet_tol", jet_tol},
                {"pass", pass}};
}

FlowCheckReport run_flowcheck(int starts, std::uint64_t seed) {
    FlowCheckReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double s_max = 0.3;
    for (const char* spec : {"torus_laplace", "sphere_laplace", "hermite"}) {
        const auto sym = make_symbol(spec);
        FlowCheckReport::PerSymbol ps;
        ps.symbol = spec;
        const bool sphere = std::string(spec) == "sphere_laplace";
        while (ps.starts < starts) {
            Eigen::Vector2d x(0.5 * u(rng), 0.5 * u(rng));
            if (sphere) x[0] = 1.3 + 0.3 * u(rng);
            Eigen::Vector2d xi;
            if (!zero_on_ray(*sym, x, M_PI * u(rng), xi)) continue;
            const PhaseSpacePoint p0{x, xi};
            const auto traj = integrate_flow(*sym, p0, s_max, 1e-12);
            const auto fwd = traj.at(s_max);
            const Eigen::Vector2d neg = -fwd.xi;
            const auto back = integrate_flow(*sym, {fwd.x, neg}, s_max, 1e-12).at(s_max);
            ps.max_energy_drift = std::max(ps.max_energy_drift, traj.energy_drift());
            ps.max_reversal_error =
                std::max({ps.max_reversal_error, (back.x - p0.x).norm(), (back.xi + p0.xi).norm()});
            const auto rec = flow_jet(*sym, p0, 5, JetMethod::Recursion);
            const auto fd = flow_jet(*sym, p0, 5, JetMethod::FiniteDifference);
            for (int j = 0; j <= 5; ++j) {
                const double ez = (rec.z[j] - fd.z[j]).norm() / std::max(1.0, rec.z[j].norm());
                const double ex = (rec.zeta[j] - fd.zeta[j]).norm() / std::max(1.0, rec.zeta[j].norm());
                ps.max_jet_rel_error = std::max({ps.max_jet_rel_error, ez, ex});
            }
            ++ps.starts;
        }
        rep.symbols.push_back(ps);
    }
    rep.pass = true;
    for (const auto& s : rep.symbols)
        rep.pass = rep.pass && s.max_energy_drift <= rep.energy_tol && s.max_reversal_error <= rep.reversal_tol &&
                   s.max_jet_rel_error <= rep.jet_tol;
    return rep;
}

// ---------------------------------------------------------------------------

json ExtremizeReport::to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows) {
        json rat = json::object();
        for (const auto& [q, v] : r.ratios) rat[fmt_double(q)] = v;
        rows_j.push_back({{"lambda", r.lambda},
                          {"cap_size", r.cap_size},
                          {"width", r.width},
                          {"ratios", rat},
                          {"search_ratio_q4", r.search_ratio_q4},
                          {"gram_norm", r.gram_norm}});
    }
    json fits = json::object();
    for (const auto& [q, f] : cap_fits) fits[fmt_double(q)] = {{"slope", f.slope}, {"stderr", f.stderr_}};
    json j{{"sigma", sigma}, {"rows", rows_j}, {"cap_fits", fits}};
    if (search_fit_q4) j["search_fit_q4"] = {{"slope", search_fit_q4->slope}, {"stderr", search_fit_q4->stderr_}};
    return j;
}

void ExtremizeReport::write_csv(std::ostream& os) const {
    os << "lambda,cap_size,width,q,cap_ratio,search_ratio_q4,gram_norm\n";
    for (const auto& r : rows)
        for (const auto& [q, v] : r.ratios)
            os << fmt_double(r.lambda) << ',' << r.cap_size << ',' << fmt_double(r.width) << ',' << fmt_double(q)
               << ',' << fmt_double(v) << ',' << fmt_double(r.search_ratio_q4) << ',' << fmt_double(r.gram_norm)
               << '\n';
}

ExtremizeReport run_extremize(const ExperimentConfig& cfg, bool with_norm) {
    ExtremizeReport rep;
    const ContactSigma cs = ContactSigma::parse(cfg.sigma);
    rep.sigma = cs.infinite ? std::numeric_limits<double>::infinity() : static_cast<double>(cs.value);
    const CurvePtr curve = parse_curve_spec(cfg.curve);
    std::vector<double> qs;
    for (const auto& q : cfg.q_list) qs.push_back(q_value(q));
    std::vector<double> lambdas;
    int group = cfg.lambda_grid.jitter_group;
    if (cfg.lambda > 0) {
        lambdas = {cfg.lambda};
        group = 1;
    } else {
        for (double b : grid_levels(cfg.lambda_grid, Family::Torus))
            for (double l : jitter_levels(b, group, Family::Torus)) lambdas.push_back(l);
    }
    const Eigen::Vector2d tangent = curve->derivative(cfg.t0, 1).normalized();
    rep.rows.resize(lambdas.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(lambdas.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < lambdas.size(); i = next++) {
            try {
                const double lam = lambdas[i];
                const QuadratureRule quad = curve_quadrature(*curve, lam);
                const CapResult cap = cap_extremizer_torus(lam, *curve, rep.sigma, cfg.c_width, cfg.t0, qs, &quad);
                ExtremizeRow row;
                row.lambda = lam;
                row.cap_size = cap.cap_size;
                row.width = cap.width;
                row.ratios = cap.ratios;
                if (cfg.search_steps > 0) {
                    // ascent inside the frequencies within four cap widths of the tangent
                    const double cosw = std::cos(std::min(4.0 * cap.width, M_PI / 2));
                    const ClusterBasis sub = torus_subset(cap.basis, [&](int k1, int k2) {
                        return tangent.dot(Eigen::Vector2d(k1, k2)) >= cosw * std::hypot(k1, k2);
                    });
                    Eigen::VectorXcd init(static_cast<Eigen::Index>(sub.dim()));
                    const Eigen::Vector2d x0 = curve->point(cfg.t0);
                    const double amp = 1.0 / std::sqrt(static_cast<double>(cap.cap_size));
                    for (std::size_t a = 0; a < sub.dim(); ++a) {
                        const Eigen::Vector2d k(sub.indices[a][0], sub.indices[a][1]);
                        init[static_cast<Eigen::Index>(a)] =
                            tangent.dot(k) >= std::cos(cap.width) * k.norm() ? std::polar(amp, -k.dot(x0)) : 0.0;
                    }
                    row.search_ratio_q4 = lower_bound_search(sub, *curve, 4.0, quad, init, cfg.search_steps).ratio;
                }
                if (with_norm) {
                    GramOptions opt;
                    opt.seed = cfg.seed;
                    row.gram_norm = gram_operator_norm(cap.basis, *curve, quad, opt).value;
                }
                rep.rows[i] = row;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(resolve_jobs(cfg.jobs), static_cast<int>(lambdas.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    if (lambdas.size() / group >= 4) {
        for (double q : qs) {
            std::vector<NormSample> s;
            for (const auto& r : rep.rows) {
                NormSample ns;
                ns.lambda = r.lambda;
                ns.value = r.ratios.at(q);
                s.push_back(ns);
            }
            rep.cap_fits[q] = fit_exponent(s, group);
        }
        if (cfg.search_steps > 0) {
            std::vector<NormSample> s;
            for (const auto& r : rep.rows) {
                NormSample ns;
                ns.lambda = r.lambda;
                ns.value = r.search_ratio_q4;
                s.push_back(ns);
            }
            rep.search_fit_q4 = fit_exponent(s, group);
        }
    }
    return rep;
}

}  // namespace restrictlab
