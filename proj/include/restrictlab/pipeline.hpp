#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "restrictlab/contact.hpp"
#include "restrictlab/exponents.hpp"
#include "restrictlab/restriction.hpp"

namespace restrictlab {

struct LambdaGrid {
    double min = 100;
    double max = 3200;
    double points_per_decade = 5;
    int jitter_group = 3;
};

/// Resolved experiment settings. Defaults live in the shipped JSON schema;
/// load_config layers schema defaults, per-command defaults and the user
/// document, then validates the result against the schema.
struct ExperimentConfig {
    std::string symbol;
    std::string curve;
    LambdaGrid lambda_grid;
    std::array<double, 2> window{-1.0, 1.0};
    std::vector<std::string> q_list;
    std::vector<std::string> sigma_list;
    int j_max = 8;
    double rtol = 1e-5;
    std::uint64_t seed = 1;
    std::string output;
    int jobs = 0;
    double tolerance = 0.04;
    int sigma_max = 20;
    std::string sigma = "1";
    double lambda = 0;
    double c_width = 1.0;
    double t0 = 0.0;
    int search_steps = 20;
    int flow_starts = 50;

    nlohmann::json to_json() const;
};

const nlohmann::json& experiment_schema();
/// Throws ConfigError with the offending path.
void validate_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& command, const nlohmann::json& user);

Family family_of_symbol(const std::string& symbol);
/// requested > 0 wins, then RESTRICTLAB_JOBS, then 1.
int resolve_jobs(int requested);

/// Base levels of the grid: lambda (torus), degree l (sphere), level n
/// (hermite). max(4, round(ppd * decades) + 1) geometric points, rounded
/// to integers for the discrete families.
std::vector<double> grid_levels(const LambdaGrid& grid, Family family);
/// Jittered realizations of one base level.
std::vector<double> jitter_levels(double base, int jitter_group, Family family);

/// One q = 2 projector norm; level is lambda, l or n depending on family.
NormSample measure_norm(Family family, double level, const CurvePtr& curve, const std::array<double, 2>& window,
                        std::uint64_t seed);
/// All jittered grid points, in grid order, on `jobs` worker threads.
std::vector<NormSample> sweep_norms(Family family, const std::vector<double>& base_levels, int jitter_group,
                                    const CurvePtr& curve, const std::array<double, 2>& window, std::uint64_t seed,
                                    int jobs);

void write_samples_csv(std::ostream& os, const std::vector<NormSample>& samples, const std::string& sigma_predicted,
                       const std::string& header);

struct VerdictReport {
    std::string family;
    std::string symbol;
    std::string curve;
    std::string sigma_detected;
    Rational rho_target;
    std::string target_kind;  // "rho" or "hermite_exponent"
    double slope = 0;
    double stderr_ = 0;
    double tolerance = 0;
    bool pass = false;
    std::string raw;
    std::vector<std::string> warnings;
    std::optional<ExponentFit> fit;

    nlohmann::json to_json() const;
    nlohmann::json fit_json() const;  // {slope, stderr, target_rho, pass}
};

/// Contact detection, target exponent, lambda sweep, fit. Raw samples are
/// flushed to `cfg.output` before fitting when the directory is non-empty.
VerdictReport run_verify(Family family, const ExperimentConfig& cfg, std::vector<NormSample>* samples_out = nullptr);

/// Contact order as the exponent model sees it.
ContactSigma sigma_from_report(const ContactReport& r);

struct FlowCheckReport {
    struct PerSymbol {
        std::string symbol;
        int starts = 0;
        double max_energy_drift = 0;
        double max_reversal_error = 0;
        double max_jet_rel_error = 0;
    };
    std::vector<PerSymbol> symbols;
    double energy_tol = 1e-8;
    double reversal_tol = 1e-7;
    double jet_tol = 1e-4;
    bool pass = false;

    nlohmann::json to_json() const;
};

/// Random admissible starts per built-in symbol: energy drift, time
/// reversal over s = 0.3, and recursion vs finite-difference jets for j <= 5.
FlowCheckReport run_flowcheck(int starts, std::uint64_t seed);

struct ExtremizeRow {
    double lambda = 0;
    std::size_t cap_size = 0;
    double width = 0;
    std::map<double, double> ratios;  // q -> cap ratio
    double search_ratio_q4 = 0;       // 0 when not run
    double gram_norm = 0;             // 0 when not computed
};

struct ExtremizeReport {
    double sigma = 1;
    std::vector<ExtremizeRow> rows;
    std::map<double, ExponentFit> cap_fits;  // per q
    std::optional<ExponentFit> search_fit_q4;

    nlohmann::json to_json() const;
    void write_csv(std::ostream& os) const;
};

/// Cap extremizers over the torus lambda grid (or the single cfg.lambda).
/// With `with_norm` the matrix-free operator norm is computed at each lambda
/// as well; `search_steps > 0` runs the cap-seeded q = 4 ascent inside a
/// sub-cluster of four cap widths.
ExtremizeReport run_extremize(const ExperimentConfig& cfg, bool with_norm);

/// Parses "2", "7/2", "inf" into a double exponent (inf allowed).
double q_value(const std::string& text);

}  // namespace restrictlab
