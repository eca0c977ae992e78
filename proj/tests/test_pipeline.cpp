#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "restrictlab/errors.hpp"
#include "restrictlab/pipeline.hpp"

using namespace restrictlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("restrictlab-test-" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("schema defaults and per-command layers") {
    const auto t = load_config("verify-torus", json::object());
    CHECK(t.symbol == "torus_laplace");
    CHECK(t.curve == "poly:t,t^2@-0.5,0.5");
    CHECK(t.lambda_grid.min == 100);
    CHECK(t.lambda_grid.max == 3200);
    CHECK(t.lambda_grid.jitter_group == 3);
    CHECK(t.window == std::array<double, 2>{-1, 1});
    CHECK(t.seed == 1);

    const auto s = load_config("verify-sphere", json::object());
    CHECK(s.symbol == "sphere_laplace");
    CHECK(s.curve.rfind("latitude:", 0) == 0);
    CHECK(s.tolerance == doctest::Approx(0.05));
    CHECK(s.lambda_grid.jitter_group == 1);

    const auto h = load_config("verify-hermite", json::object());
    CHECK(h.symbol == "hermite");
    CHECK(h.lambda_grid.min == 200);
    CHECK(h.lambda_grid.max == 5000);

    const auto u = load_config("verify-torus", json{{"seed", 7}, {"lambda_grid", {{"max", 800}}}});
    CHECK(u.seed == 7);
    CHECK(u.lambda_grid.max == 800);
    CHECK(u.lambda_grid.min == 100);  // untouched siblings keep their defaults
}

TEST_CASE("every schema property has a default and round-trips") {
    const json& schema = experiment_schema();
    for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it) {
        INFO(it.key());
        CHECK((it.value().contains("default") || it.value().contains("properties")));
    }
    for (const char* cmd : {"contact", "predict", "polylab", "flowcheck", "verify-torus", "verify-sphere",
                            "verify-hermite", "extremize"}) {
        INFO(cmd);
        const auto c = load_config(cmd, json::object());
        const json doc = c.to_json();
        CHECK_NOTHROW(validate_config(doc));
        CHECK(load_config(cmd, doc).to_json() == doc);
    }
}

TEST_CASE("config validation rejects bad documents") {
    CHECK_THROWS_AS(load_config("verify-torus", json{{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(load_config("verify-torus", json{{"seed", "one"}}), ConfigError);
    CHECK_THROWS_AS(load_config("verify-torus", json{{"lambda_grid", {{"jitter_group", 9}}}}), ConfigError);
    CHECK_THROWS_AS(load_config("verify-torus", json{{"lambda_grid", {{"min", 500}, {"max", 400}}}}), ConfigError);
    CHECK_THROWS_AS(load_config("verify-torus", json{{"lambda_grid", {{"max", 20000}}}}), ConfigError);
    CHECK_THROWS_AS(load_config("verify-sphere", json{{"lambda_grid", {{"max", 6000}}}}), ConfigError);
    CHECK_THROWS_AS(load_config("verify-hermite", json{{"lambda_grid", {{"max", 7000}}}}), ConfigError);
    CHECK_THROWS_AS(load_config("predict", json{{"q_list", {"3/2"}}}), ConfigError);
    CHECK_THROWS_AS(load_config("predict", json{{"q_list", {"two"}}}), ConfigError);
    CHECK_THROWS_AS(load_config("verify-torus", json{{"window", {1, -1}}}), ConfigError);
    CHECK_THROWS_AS(load_config("verify-torus", json::array()), ConfigError);
    CHECK_THROWS_AS(load_config("verify-torus", json{{"symbol", "custom:x1^2+xi1^2-1"}}), ConfigError);
    CHECK_THROWS_AS(family_of_symbol("custom:x1^2"), ConfigError);
    CHECK_NOTHROW(load_config("predict", json{{"q_list", {"2", "7/2", "inf"}}}));
    const auto obj = load_config("contact", json{{"curve", {{"kind", "circle"}, {"center", {0, 0}}, {"radius", 0.5}}}});
    CHECK(parse_curve_spec(obj.curve)->point(0.0).isApprox(Eigen::Vector2d(0.5, 0)));
}

TEST_CASE("lambda grid levels") {
    const auto lv = grid_levels({100, 3200, 5, 3}, Family::Torus);
    REQUIRE(lv.size() == 9);  // round(5 log10 32) + 1
    CHECK(lv.front() == doctest::Approx(100));
    CHECK(lv.back() == doctest::Approx(3200));
    for (std::size_t i = 1; i < lv.size(); ++i) CHECK(lv[i] / lv[i - 1] == doctest::Approx(lv[1] / lv[0]));

    const auto sp = grid_levels({50, 1600, 5, 1}, Family::Sphere);
    CHECK(sp.size() == 9);
    for (double v : sp) CHECK(v == std::round(v));
    CHECK(grid_levels({100, 110, 1, 1}, Family::Torus).size() == 4);  // never fewer than four groups

    const auto j = jitter_levels(200, 3, Family::Torus);
    CHECK(j == std::vector<double>{200, 200.3, 200.6});
    CHECK(jitter_levels(200, 2, Family::Hermite) == std::vector<double>{200, 201});
}

TEST_CASE("job count resolution") {
    ::unsetenv("RESTRICTLAB_JOBS");
    CHECK(resolve_jobs(0) == 1);
    CHECK(resolve_jobs(3) == 3);
    ::setenv("RESTRICTLAB_JOBS", "2", 1);
    CHECK(resolve_jobs(0) == 2);
    CHECK(resolve_jobs(5) == 5);
    ::setenv("RESTRICTLAB_JOBS", "junk", 1);
    CHECK(resolve_jobs(0) == 1);
    ::unsetenv("RESTRICTLAB_JOBS");
}

TEST_CASE("sweeps are ordered and byte-identical across runs and worker counts") {
    const auto curve = parse_curve_spec("poly:t,t^2@-0.5,0.5");
    const std::vector<double> base{20, 30, 45};
    const auto a = sweep_norms(Family::Torus, base, 2, curve, {-1, 1}, 5, 1);
    const auto b = sweep_norms(Family::Torus, base, 2, curve, {-1, 1}, 5, 3);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].lambda == jitter_levels(base[i / 2], 2, Family::Torus)[i % 2]);
        CHECK(a[i].group_lambda == base[i / 2]);
        CHECK(a[i].value > 0);
    }
    std::ostringstream sa, sb;
    write_samples_csv(sa, a, "1", "test");
    write_samples_csv(sb, b, "1", "test");
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("# test\nfamily,lambda,q,sigma_predicted,value,", 0) == 0);

    // the norm is the same as a direct measurement
    const auto direct = measure_norm(Family::Torus, 30.3, curve, {-1, 1}, 5);
    CHECK(direct.value == a[3].value);
}

TEST_CASE("verify pipeline writes its artifacts") {
    const fs::path dir = scratch("verify");
    auto cfg = load_config("verify-torus", json{{"lambda_grid", {{"min", 20}, {"max", 80}, {"jitter_group", 1}}},
                                                {"output", dir.string()}});
    std::vector<NormSample> samples;
    const VerdictReport v = run_verify(Family::Torus, cfg, &samples);
    CHECK(v.sigma_detected == "1");
    CHECK(v.rho_target == Rational(1, 6));
    CHECK(v.target_kind == "rho");
    CHECK(samples.size() == grid_levels(cfg.lambda_grid, Family::Torus).size());
    for (const char* f : {"contact.json", "samples.csv", "fit.json", "verdict.json"}) CHECK(fs::exists(dir / f));
    const json verdict = json::parse(slurp(dir / "verdict.json"));
    CHECK(verdict["slope"].get<double>() == doctest::Approx(v.slope));
    CHECK(verdict["rho_target"] == "1/6");
    CHECK(verdict["pass"].get<bool>() == v.pass);
    const json fit = json::parse(slurp(dir / "fit.json"));
    for (const char* k : {"slope", "stderr", "target_rho", "pass"}) CHECK(fit.contains(k));

    // rerun reproduces the samples byte for byte
    const std::string first = slurp(dir / "samples.csv");
    run_verify(Family::Torus, cfg);
    CHECK(slurp(dir / "samples.csv") == first);

    // mismatched symbol and model
    cfg.symbol = "sphere_laplace";
    CHECK_THROWS_AS(run_verify(Family::Torus, cfg), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("hermite verify targets the oscillator exponent") {
    auto cfg = load_config("verify-hermite", json{{"lambda_grid", {{"min", 20}, {"max", 60}}}, {"output", ""}});
    const VerdictReport v = run_verify(Family::Hermite, cfg);
    CHECK(v.rho_target == Rational(-1, 6));
    CHECK(v.target_kind == "hermite_exponent");
    CHECK(std::isfinite(v.slope));
}

TEST_CASE("flowcheck on a few starts") {
    const auto rep = run_flowcheck(4, 3);
    REQUIRE(rep.symbols.size() == 3);
    for (const auto& s : rep.symbols) CHECK(s.starts == 4);
    CHECK(rep.pass);
    CHECK(rep.to_json()["symbols"].size() == 3);
}

TEST_CASE("extremize at a single lambda") {
    auto cfg = load_config("extremize", json{{"sigma", "2"}, {"lambda", 300}, {"curve", "poly:t,t^3@-0.5,0.5"},
                                             {"search_steps", 5}});
    const auto rep = run_extremize(cfg, true);
    REQUIRE(rep.rows.size() == 1);
    const auto& r = rep.rows[0];
    CHECK(r.cap_size > 0);
    CHECK(r.ratios.count(2.0) == 1);
    CHECK(r.ratios.count(4.0) == 1);
    CHECK(r.ratios.at(2.0) <= r.gram_norm * (1 + 1e-6));
    CHECK(r.search_ratio_q4 >= r.ratios.at(4.0) * (1 - 1e-12));
    CHECK(rep.cap_fits.empty());
    std::ostringstream os;
    rep.write_csv(os);
    CHECK(os.str().rfind("lambda,cap_size,width,q,cap_ratio", 0) == 0);
}
