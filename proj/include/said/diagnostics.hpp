#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "said/rng.hpp"
#include "said/sampler.hpp"

namespace said {

// Effective sample size N / (1 + 2 * sum of autocorrelations), truncated by
// Geyer's initial-positive-sequence rule and capped at N.  A constant chain
// has no autocorrelation information and is reported as N; callers that care
// should warn on that case.  Throws ConfigError for chains shorter than 10.
double effective_sample_size(const Eigen::VectorXd& chain);

// Per-point posterior predictive summary over the kept draws: one simulated
// response per draw and training point, 95% central intervals, and residuals
// standardized by the per-point predictive spread (falling back to the global
// residual spread when a point's predictive draws are degenerate).
struct PredictiveSummary {
    Eigen::VectorXd mean;                     // predictive mean per point
    Eigen::VectorXd sd;                       // predictive spread per point
    Eigen::VectorXd lower, upper;             // central 95% interval bounds
    Eigen::VectorXd standardized_residuals;   // (y - mean) / sd
    double coverage = 0.0;                    // fraction of y inside [lower, upper]
};

PredictiveSummary posterior_predictive(const PosteriorSamples& samples, const Dataset& data,
                                       const ModelBases& bases, Rng& rng);

// Chain and fit diagnostics: ESS for a standard set of monitored scalars
// (error variance, intercept, global scale, covariate effects, per-pair
// penalty and scale parameters) plus predictive coverage and a standardized
// residual summary.
struct DiagnosticsReport {
    std::vector<std::string> monitored;
    Eigen::VectorXd ess;             // per monitored scalar, capped at kept draws
    Eigen::VectorXd ess_fraction;    // ess / kept draws
    double coverage95 = 0.0;
    double residual_mean = 0.0;
    double residual_variance = 0.0;
    double residual_q01 = 0.0;
    double residual_q99 = 0.0;
};

DiagnosticsReport diagnose(const PosteriorSamples& samples, const Dataset& data,
                           const ModelBases& bases, Rng& rng);

}  // namespace said
