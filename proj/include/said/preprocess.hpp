#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "said/model.hpp"

namespace said {

// One raw study record before any transformation.  NaN marks a missing
// numeric field and an empty string a missing categorical level; acr is
// optional metadata (records without it are exempt from the ACR filter).
struct RawRecord {
    double response = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd exposures;
    double flow_rate = 1.0;
    Eigen::VectorXd numeric_covariates;
    std::vector<std::string> categorical_covariates;
    std::optional<double> acr;
    bool response_below_lod = false;
};

// Point summaries of a fitted model on whatever response scale it was fit on.
// backscale multiplies every entry by the response scale factor.
struct EffectSummaries {
    double intercept = 0.0;
    double error_sd = 0.0;
    Eigen::VectorXd covariate_effects;
    Eigen::MatrixXd main_effects;                 // one column of curve values per exposure
    std::vector<Eigen::MatrixXd> interactions;    // one surface grid per pair
};

// Drop records that fail the albumin-creatinine filter (acr >= threshold) or
// have any missing field.  require_positive additionally drops nonpositive
// response/exposure values; it exists to keep the log transform defined and
// is skipped when that transform is off (simulated responses may be negative).
// Optionally also drop records whose response sits below the detection limit.
// Throws ConfigError when nothing survives or record shapes disagree.
std::vector<RawRecord> clean(const std::vector<RawRecord>& records, double acr_threshold = 30.0,
                             bool drop_lod_responses = false, bool require_positive = true);

// Urinary dilution adjustment: multiply the response and every exposure by
// the record's flow rate.  Throws ConfigError when the flow rate is not > 0.
RawRecord dilution_adjust(const RawRecord& record);

// Natural log of a strictly positive column.
Eigen::VectorXd log_column(const Eigen::VectorXd& column);

// Probability-scale transform of one exposure column: fit a Gaussian-kernel
// density with Silverman's bandwidth, integrate it to a CDF on a fine grid,
// and evaluate that CDF at each observation.  Outputs lie strictly in (0,1)
// and are strictly increasing in the input value.
Eigen::VectorXd cdf_transform(const Eigen::VectorXd& column);

// Scale-only standardization to unit sample variance; returns the transformed
// column and the scale divided out.  Throws ConfigError on zero variance.
std::pair<Eigen::VectorXd, double> standardize_column(const Eigen::VectorXd& column);
std::pair<Eigen::VectorXd, double> standardize_response(const Eigen::VectorXd& y);

// Map summaries from the standardized-response scale back to the original
// scale by multiplying every effect by y_scale.
EffectSummaries backscale(EffectSummaries summaries, double y_scale);

// Dummy coding for a categorical column against a declared baseline level
// (empty baseline = lexicographically smallest level).  Returns the indicator
// matrix and the encoded levels in sorted order, baseline excluded.
std::pair<Eigen::MatrixXd, std::vector<std::string>> one_hot(
    const std::vector<std::string>& column, const std::string& baseline = "");

struct PipelineOptions {
    double acr_threshold = 30.0;
    bool drop_lod_responses = false;
    bool dilution_adjust = true;
    bool log_transform = true;                // natural log of response and exposures
    bool cdf_transform = true;                // false requires exposures already in [0,1]
    std::vector<std::string> baselines;       // per categorical covariate; "" = smallest level
};

struct PipelineResult {
    Dataset data;                             // y standardized, x on (0,1), z encoded
    Eigen::VectorXd numeric_covariate_scales;
    std::vector<std::vector<std::string>> dummy_levels;   // per categorical covariate
};

// Full deterministic pipeline: clean -> dilution adjust -> log transform ->
// CDF transform of exposures, response standardization, covariate encoding.
PipelineResult build_dataset(const std::vector<RawRecord>& records,
                             const PipelineOptions& options = {});

}  // namespace said
