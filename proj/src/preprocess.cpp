#include "said/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "said/errors.hpp"

namespace said {

namespace {

bool missing(double v) { return !std::isfinite(v); }

bool record_complete(const RawRecord& r) {
    if (missing(r.response) || missing(r.flow_rate)) return false;
    for (Eigen::Index j = 0; j < r.exposures.size(); ++j) {
        if (missing(r.exposures[j])) return false;
    }
    for (Eigen::Index j = 0; j < r.numeric_covariates.size(); ++j) {
        if (missing(r.numeric_covariates[j])) return false;
    }
    for (const auto& level : r.categorical_covariates) {
        if (level.empty()) return false;
    }
    if (r.acr && (missing(*r.acr) || *r.acr < 0.0)) return false;
    return true;
}

double sample_sd(const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::vector<double> sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<RawRecord> clean(const std::vector<RawRecord>& records, double acr_threshold,
                             bool drop_lod_responses, bool require_positive) {
    std::vector<RawRecord> kept;
    for (const auto& r : records) {
        if (r.exposures.size() != records.front().exposures.size() ||
            r.numeric_covariates.size() != records.front().numeric_covariates.size() ||
            r.categorical_covariates.size() != records.front().categorical_covariates.size()) {
            throw ConfigError("clean: records disagree on exposure/covariate counts");
        }
        if (!record_complete(r)) continue;
        if (r.acr && *r.acr >= acr_threshold) continue;
        if (drop_lod_responses && r.response_below_lod) continue;
        if (require_positive) {
            if (!(r.response > 0.0)) continue;
            if ((r.exposures.array() <= 0.0).any()) continue;
        }
        kept.push_back(r);
    }
    if (kept.empty()) throw ConfigError("clean: no records survive filtering");
    return kept;
}

RawRecord dilution_adjust(const RawRecord& record) {
    if (!(record.flow_rate > 0.0)) {
        throw ConfigError("dilution_adjust: flow rate must be positive");
    }
    RawRecord out = record;
    out.response *= record.flow_rate;
    out.exposures *= record.flow_rate;
    return out;
}

Eigen::VectorXd log_column(const Eigen::VectorXd& column) {
    if ((column.array() <= 0.0).any()) {
        throw ConfigError("log_column: values must be strictly positive");
    }
    return column.array().log();
}

Eigen::VectorXd cdf_transform(const Eigen::VectorXd& column) {
    const auto n = column.size();
    if (n < 10) throw ConfigError("cdf_transform: need at least 10 observations");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(column[i])) throw ConfigError("cdf_transform: non-finite value");
    }
    const double lo = column.minCoeff();
    const double hi = column.maxCoeff();
    if (!(hi > lo)) throw ConfigError("cdf_transform: degenerate (constant) exposure column");

    // Silverman's rule of thumb: 0.9 * min(sd, IQR/1.34) * n^(-1/5).
    std::vector<double> sorted(column.data(), column.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const double sd = sample_sd(column);
    const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    const double bw = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

    // Kernel density on a uniform grid spanning the data range plus three
    // bandwidths, integrated to a CDF by the trapezoidal rule.
    constexpr int kGrid = 2048;
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    const double g0 = lo - 3.0 * bw;
    const double g1 = hi + 3.0 * bw;
    const double dx = (g1 - g0) / (kGrid - 1);
    Eigen::VectorXd density(kGrid);
    for (int k = 0; k < kGrid; ++k) {
        const double g = g0 + k * dx;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = (g - column[i]) / bw;
            acc += std::exp(-0.5 * u * u);
        }
        density[k] = acc * kInvSqrt2Pi / (bw * static_cast<double>(n));
    }
    Eigen::VectorXd cum(kGrid);
    cum[0] = 0.0;
    for (int k = 1; k < kGrid; ++k) {
        cum[k] = cum[k - 1] + 0.5 * (density[k - 1] + density[k]) * dx;
    }

    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = (column[i] - g0) / dx;
        const int cell = std::clamp(static_cast<int>(t), 0, kGrid - 2);
        const double frac = t - cell;
        double f = cum[cell] + frac * (cum[cell + 1] - cum[cell]);
        // Data points sit well inside the grid, so f is already interior;
        // clamping only guards against rounding at the extremes.
        out[i] = std::clamp(f, std::numeric_limits<double>::min(), 1.0 - 1e-12);
    }
    return out;
}

std::pair<Eigen::VectorXd, double> standardize_column(const Eigen::VectorXd& column) {
    if (column.size() < 2) throw ConfigError("standardize: need at least 2 observations");
    const double sd = sample_sd(column);
    if (!(sd > 0.0)) throw ConfigError("standardize: column has zero variance");
    return {column / sd, sd};
}

std::pair<Eigen::VectorXd, double> standardize_response(const Eigen::VectorXd& y) {
    return standardize_column(y);
}

EffectSummaries backscale(EffectSummaries summaries, double y_scale) {
    summaries.intercept *= y_scale;
    summaries.error_sd *= y_scale;
    summaries.covariate_effects *= y_scale;
    summaries.main_effects *= y_scale;
    for (auto& surface : summaries.interactions) surface *= y_scale;
    return summaries;
}

std::pair<Eigen::MatrixXd, std::vector<std::string>> one_hot(
    const std::vector<std::string>& column, const std::string& baseline) {
    if (column.empty()) throw ConfigError("one_hot: empty column");
    std::set<std::string> levels(column.begin(), column.end());
    if (levels.count("")) throw ConfigError("one_hot: missing level in column");
    const std::string base = baseline.empty() ? *levels.begin() : baseline;
    if (!levels.count(base)) {
        throw ConfigError("one_hot: baseline level '" + base + "' not present in column");
    }
    std::vector<std::string> encoded;
    for (const auto& level : levels) {
        if (level != base) encoded.push_back(level);
    }
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(column.size()),
                                              static_cast<Eigen::Index>(encoded.size()));
    for (std::size_t i = 0; i < column.size(); ++i) {
        for (std::size_t j = 0; j < encoded.size(); ++j) {
            if (column[i] == encoded[j]) z(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(j)) = 1.0;
        }
    }
    return {z, encoded};
}

PipelineResult build_dataset(const std::vector<RawRecord>& records,
                             const PipelineOptions& options) {
    std::vector<RawRecord> rows = clean(records, options.acr_threshold,
                                        options.drop_lod_responses, options.log_transform);
    if (options.dilution_adjust) {
        for (auto& r : rows) r = dilution_adjust(r);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = rows.front().exposures.size();
    const auto n_num = rows.front().numeric_covariates.size();
    const auto n_cat = rows.front().categorical_covariates.size();

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = rows[i].response;
    if (options.log_transform) y = log_column(y);

    PipelineResult result;
    result.data.x.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::VectorXd col(n);
        for (Eigen::Index i = 0; i < n; ++i) col[i] = rows[i].exposures[j];
        if (options.log_transform) col = log_column(col);
        if (options.cdf_transform) {
            result.data.x.col(j) = cdf_transform(col);
        } else {
            if ((col.array() < 0.0).any() || (col.array() > 1.0).any()) {
                throw ConfigError(
                    "build_dataset: exposures must lie in [0,1] when the CDF transform is off");
            }
            result.data.x.col(j) = col;
        }
    }

    auto [y_std, y_scale] = standardize_response(y);
    result.data.y = y_std;
    result.data.y_scale = y_scale;

    result.numeric_covariate_scales.resize(n_num);
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::Index q = 0;
    for (Eigen::Index j = 0; j < n_num; ++j) {
        Eigen::VectorXd col(n);
        for (Eigen::Index i = 0; i < n; ++i) col[i] = rows[i].numeric_covariates[j];
        auto [std_col, scale] = standardize_column(col);
        result.numeric_covariate_scales[j] = scale;
        blocks.push_back(std_col);
        q += 1;
    }
    for (std::size_t j = 0; j < n_cat; ++j) {
        std::vector<std::string> col(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i].categorical_covariates[j];
        const std::string baseline = j < options.baselines.size() ? options.baselines[j] : "";
        auto [dummies, levels] = one_hot(col, baseline);
        result.dummy_levels.push_back(levels);
        blocks.push_back(dummies);
        q += dummies.cols();
    }
    result.data.z.resize(n, q);
    Eigen::Index at = 0;
    for (const auto& block : blocks) {
        result.data.z.middleCols(at, block.cols()) = block;
        at += block.cols();
    }
    return result;
}

}  // namespace said
