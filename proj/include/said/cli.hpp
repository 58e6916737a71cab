#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "said/simgen.hpp"

namespace said {

// Everything a fit needs beyond the data file itself: column roles,
// preprocessing switches, basis sizes, sampler settings, and the selection
// cutoff.  The JSON round trip is canonical (sorted flat keys, every key
// emitted), so the config echoed into a run manifest is diffable across runs.
// The output directory is deliberately not part of the config: two runs of
// the same config and seed produce identical manifests wherever they land.
struct RunConfig {
    // column roles
    std::string response = "y";
    std::vector<std::string> exposures;               // at least two
    std::vector<std::string> numeric_covariates;
    std::vector<std::string> categorical_covariates;
    std::string flow_rate_column;                     // empty = no dilution adjustment
    std::string acr_column;                           // empty = no ACR filter
    std::string lod_column;                           // empty = no below-LOD indicator
    std::vector<std::string> baselines;               // "column=level" per categorical

    // preprocessing
    double acr_threshold = 30.0;
    bool drop_lod_responses = false;
    bool log_transform = true;
    bool cdf_transform = true;

    // bases
    int degree = 3;
    int main_basis_size = 6;                          // d
    int interaction_basis_size = 6;                   // m
    std::string constraint = "origin";                // origin | integral

    // sampler
    int iterations = 15000;
    int burnin = 5000;
    double hmc_step_size = 0.01;
    int hmc_leapfrog_steps = 10;
    int perturb_interval = 500;
    double perturb_low = 0.9;
    double perturb_high = 1.1;
    int rejection_cap = 10000;
    double lambda_a = 0.5;

    // selection
    double cutoff = 0.01;
    int selection_grid = 50;

    // run plumbing
    std::uint64_t seed = 1;
    int chains = 1;
};

// Parse a flat-key JSON config. Unknown keys, wrong types, and invariant
// violations (duplicate column roles, burnin >= iterations, ...) all throw
// ConfigError naming the offending key.
RunConfig config_from_json(const std::string& json_text);
std::string config_to_json(const RunConfig& config);

void validate_config(const RunConfig& config);

ScenarioKind scenario_kind_from_string(const std::string& name);
std::string to_string(ScenarioKind kind);

// Fit the model to a CSV file and write everything a reader or a rerun needs:
//   out/manifest.json             config echo + content hashes + chain seeds
//   out/dataset.csv               preprocessed data the chains actually saw
//   out/chain_k/samples.bin       posterior draws (binary, reloadable)
//   out/chain_k/meta.json         basis spec, seeds, response scale
//   out/chain_k/selection.{json,csv}    interaction classification
//   out/chain_k/diagnostics.json  ESS, coverage, residual summary
//   out/chain_k/residuals.csv     standardized residuals
//   out/chain_k/predictive.csv    per-point predictive mean/sd/interval
//   out/chain_k/summary.json      back-scaled intercept/covariate/error-sd
//   out/chain_k/main_effects.csv  back-scaled curves on a 100-point grid
//   out/chain_k/interactions.csv  back-scaled surfaces on a 30x30 grid
// Chains run concurrently, one thread each.
void cmd_fit(const std::string& data_path, const RunConfig& config, const std::string& out_dir);

// Draw a scenario dataset and write data.csv, x_test.csv, truth_train.csv,
// truth_test.csv, truth.json, and a ready-to-edit fit_config.json.
void cmd_simulate(const Scenario& scenario, const std::string& out_dir);

// Regenerate selection reports from stored samples without refitting. `dir`
// is either one chain directory or a fit directory containing chain_k
// subdirectories. Without an explicit cutoff the fit-time cutoff is reused,
// reproducing the fit-time report byte for byte.
void cmd_select(const std::string& dir, std::optional<double> cutoff);

// Regenerate diagnostics, residuals, and predictive summaries from stored
// samples; byte-identical to the fit-time reports.
void cmd_diagnose(const std::string& dir);

}  // namespace said
