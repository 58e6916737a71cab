#include "said/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "said/errors.hpp"
#include "said/model.hpp"

namespace said {

namespace {

// Type-7 quantile of an already sorted vector.
double sorted_quantile(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

// Mean surface of one kept draw at the training points, covariates included.
Eigen::VectorXd draw_mean(const PosteriorSamples& s, int t, const Dataset& data,
                          const ModelBases& bases) {
    ModelState state;
    state.alpha = s.alpha[t];
    state.sigma2 = s.sigma2[t];
    for (int j = 0; j < s.p; ++j) {
        MainEffectState me;
        me.gamma = s.gamma_at(t, j);
        me.lambda = s.lambda(t, j);
        state.main_effects.push_back(me);
    }
    const int npairs = s.p * (s.p - 1) / 2;
    for (int k = 0; k < npairs; ++k) state.interactions.push_back(s.interaction_at(t, k));
    Eigen::VectorXd mu = eval_surface(state, data.x, bases.main_basis, bases.interaction_basis);
    if (s.q > 0) mu += data.z * s.eta.row(t).transpose();
    return mu;
}

}  // namespace

double effective_sample_size(const Eigen::VectorXd& chain) {
    const auto n = chain.size();
    if (n < 10) throw ConfigError("effective_sample_size: chain shorter than 10");
    const double mean = chain.mean();
    const Eigen::ArrayXd centered = chain.array() - mean;
    const double var = centered.square().sum() / static_cast<double>(n);
    if (!(var > 0.0)) return static_cast<double>(n);   // constant chain carries no signal

    // Autocovariances paired into Geyer's Gamma_m = gamma_{2m} + gamma_{2m+1};
    // the sum is truncated before the first non-positive pair.
    const auto autocov = [&](Eigen::Index lag) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i + lag < n; ++i) acc += centered[i] * centered[i + lag];
        return acc / static_cast<double>(n);
    };
    double tau = -1.0;               // head pair includes gamma_0 = var
    for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
        const double pair_sum = autocov(2 * m) + autocov(2 * m + 1);
        if (pair_sum <= 0.0) break;
        tau += 2.0 * pair_sum / var;
    }
    tau = std::max(tau, 1.0);
    return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

PredictiveSummary posterior_predictive(const PosteriorSamples& samples, const Dataset& data,
                                       const ModelBases& bases, Rng& rng) {
    const int kept = samples.kept();
    if (kept <= 0) throw ConfigError("posterior_predictive: no kept draws");
    const auto n = data.y.size();
    if (n == 0 || data.x.rows() != n) {
        throw ConfigError("posterior_predictive: dataset is empty or inconsistent");
    }

    Eigen::MatrixXd draws(kept, n);
    for (int t = 0; t < kept; ++t) {
        const Eigen::VectorXd mu = draw_mean(samples, t, data, bases);
        const double sd = std::sqrt(samples.sigma2[t]);
        for (Eigen::Index i = 0; i < n; ++i) draws(t, i) = mu[i] + sd * rng.normal();
    }

    PredictiveSummary out;
    out.mean = draws.colwise().mean().transpose();
    out.sd.resize(n);
    out.lower.resize(n);
    out.upper.resize(n);
    std::vector<double> column(kept);
    for (Eigen::Index i = 0; i < n; ++i) {
        // A literally constant predictive column has zero spread; computing it
        // through the rounded mean would leave ~1e-16 noise instead.
        if (draws.col(i).maxCoeff() == draws.col(i).minCoeff()) {
            out.mean[i] = draws(0, i);
            out.sd[i] = 0.0;
        } else {
            out.sd[i] = std::sqrt((draws.col(i).array() - out.mean[i]).square().sum() /
                                  std::max(kept - 1, 1));
        }
        for (int t = 0; t < kept; ++t) column[static_cast<std::size_t>(t)] = draws(t, i);
        std::sort(column.begin(), column.end());
        out.lower[i] = sorted_quantile(column, 0.025);
        out.upper[i] = sorted_quantile(column, 0.975);
    }

    const Eigen::VectorXd residual = data.y - out.mean;
    // Degenerate points (zero predictive spread) standardize by the spread of
    // the raw residuals instead.
    const double fallback =
        n > 1 ? std::sqrt((residual.array() - residual.mean()).square().sum() /
                          static_cast<double>(n - 1))
              : 1.0;
    out.standardized_residuals.resize(n);
    long covered = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sd = out.sd[i] > 0.0 ? out.sd[i] : fallback;
        out.standardized_residuals[i] = sd > 0.0 ? residual[i] / sd : 0.0;
        if (data.y[i] >= out.lower[i] && data.y[i] <= out.upper[i]) ++covered;
    }
    out.coverage = static_cast<double>(covered) / static_cast<double>(n);
    return out;
}

DiagnosticsReport diagnose(const PosteriorSamples& samples, const Dataset& data,
                           const ModelBases& bases, Rng& rng) {
    const int kept = samples.kept();
    if (kept < 10) throw ConfigError("diagnose: need at least 10 kept draws");

    DiagnosticsReport report;
    std::vector<std::pair<std::string, Eigen::VectorXd>> monitored;
    monitored.emplace_back("sigma2", samples.sigma2);
    monitored.emplace_back("alpha", samples.alpha);
    monitored.emplace_back("nu2", samples.nu2);
    for (int j = 0; j < samples.q; ++j) {
        monitored.emplace_back("eta" + std::to_string(j + 1), samples.eta.col(j));
    }
    const auto pairs = all_pairs(samples.p);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const std::string tag = "(" + std::to_string(pairs[k].first + 1) + "," +
                                std::to_string(pairs[k].second + 1) + ")";
        monitored.emplace_back("kappa" + tag, samples.kappa.col(static_cast<Eigen::Index>(k)));
        monitored.emplace_back("tau1" + tag, samples.tau1.col(static_cast<Eigen::Index>(k)));
        monitored.emplace_back("tau2" + tag, samples.tau2.col(static_cast<Eigen::Index>(k)));
    }

    report.ess.resize(static_cast<Eigen::Index>(monitored.size()));
    report.ess_fraction.resize(static_cast<Eigen::Index>(monitored.size()));
    for (std::size_t i = 0; i < monitored.size(); ++i) {
        report.monitored.push_back(monitored[i].first);
        report.ess[static_cast<Eigen::Index>(i)] = effective_sample_size(monitored[i].second);
        report.ess_fraction[static_cast<Eigen::Index>(i)] =
            report.ess[static_cast<Eigen::Index>(i)] / kept;
    }

    const PredictiveSummary predictive = posterior_predictive(samples, data, bases, rng);
    report.coverage95 = predictive.coverage;
    const Eigen::VectorXd& r = predictive.standardized_residuals;
    report.residual_mean = r.mean();
    report.residual_variance =
        (r.array() - r.mean()).square().sum() / std::max<double>(1.0, r.size() - 1.0);
    std::vector<double> sorted(r.data(), r.data() + r.size());
    std::sort(sorted.begin(), sorted.end());
    report.residual_q01 = sorted_quantile(sorted, 0.01);
    report.residual_q99 = sorted_quantile(sorted, 0.99);
    return report;
}

}  // namespace said
