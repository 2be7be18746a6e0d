#pragma once

#include "ddctrl/deepc.hpp"
#include "ddctrl/indirect.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ddctrl {

enum class ScenarioKind { lambda_sweep, two_norm_vs_proj, hybrid_grid, data_length_sweep, noise_sweep, nonlinearity_sweep };
enum class PlantKind { benchmark, lotka_volterra };
enum class ReferenceKind { sine, equilibrium, zero };

const char* to_string(ScenarioKind k);
const char* to_string(PlantKind k);
const char* to_string(ReferenceKind k);

/// Method tags: direct_l1, direct_two_norm, direct_proj, direct_hybrid,
/// direct_none, spc, subspace_id.
bool is_known_method(const std::string& tag);

struct ExperimentConfig {
    ScenarioKind scenario = ScenarioKind::lambda_sweep;
    PlantKind plant = PlantKind::benchmark;
    Index data_length = 250;
    Index tini = 5;
    Index horizon = 20;
    std::vector<double> weights{0.01, 2000.0};  // per channel, inputs first
    ReferenceKind reference = ReferenceKind::sine;
    std::vector<double> nsr{0.05};
    std::vector<double> lambdas{1.0};
    std::vector<double> lambdas2{0.0};
    std::vector<Index> data_lengths;
    std::vector<double> epsilons{0.0};
    std::vector<Index> orders{5};
    Index trials = 20;
    std::uint64_t seed = 1;
    std::vector<std::string> methods{"direct_l1"};
    /// Fresh noise-free experiment per trial; otherwise one record from the
    /// master seed with fresh noise per trial.
    bool fresh_data = false;
    bool noisy_inputs = false;
    /// Measurement noise on the prefix w_ini as well as on the data.
    bool noisy_prefix = false;
    double input_std = 1.0;
    double lv_input_sigma = 0.1;
    double lv_initial_spread = 0.2;
    bool record_timing = false;

    /// Throws Error(config) on an invalid combination.
    void validate() const;
};

struct TrialResult {
    std::string scenario;
    Index trial = 0;
    std::uint64_t seed = 0;
    std::string method;
    double param1 = 0.0;
    double param2 = 0.0;
    double predicted_err_pct = 0.0;
    double realized_err_pct = 0.0;
    double wall_ms = 0.0;
    bool ok = true;
    std::string message;

    friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct AggregateRow {
    std::string method;
    double param1 = 0.0;
    double param2 = 0.0;
    Index count = 0;
    Index failures = 0;
    double realized_mean = 0.0;
    double realized_median = 0.0;
    double realized_q1 = 0.0;
    double realized_q3 = 0.0;
    double predicted_mean = 0.0;
    double predicted_median = 0.0;
};

/// Sample quantile with linear interpolation between order statistics
/// (h = (n - 1) p). `values` need not be sorted.
double quantile(std::vector<double> values, double p);

/// Per output channel, adds N(0, (nsr * rms)^2) where rms is the channel's RMS
/// in `w`. Inputs untouched unless `include_inputs`.
Trajectory add_measurement_noise(const Trajectory& w, double nsr, std::uint64_t seed, bool include_inputs = false);

/// Deterministic per-trial seed derived from the master seed.
std::uint64_t trial_seed(std::uint64_t master, Index trial);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// The reference trajectory and cost of a configuration.
ControlSpec make_control_spec(const ExperimentConfig& cfg);

/// Records of one trial in deterministic order.
std::vector<TrialResult> run_trial(const ExperimentConfig& cfg, Index trial);

/// All trials, in parallel over trials with `threads` workers (0 = OpenMP
/// default). Output is sorted by trial index and identical to the serial run.
std::vector<TrialResult> run_scenario(const ExperimentConfig& cfg, int threads = 0);

namespace reference {
std::vector<TrialResult> run_scenario(const ExperimentConfig& cfg);
}

std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& results);

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

std::string results_to_csv(const std::vector<TrialResult>& results);
std::vector<TrialResult> results_from_csv(const std::string& text);
std::string results_to_json(const std::vector<TrialResult>& results, const ExperimentConfig& cfg);
std::string aggregate_to_csv(const std::vector<AggregateRow>& rows);

enum class ResultFormat { csv, json };

/// Writes <dir>/results.{csv,json} and <dir>/aggregate.csv.
void emit_results(const std::vector<TrialResult>& results, const ExperimentConfig& cfg, ResultFormat format,
                  const std::filesystem::path& dir);

}  // namespace ddctrl
