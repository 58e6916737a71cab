// Chain diagnostics: effective sample size, posterior predictive intervals,
// and standardized-residual summaries.
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "said/diagnostics.hpp"
#include "said/errors.hpp"
#include "said/rng.hpp"
#include "said/sampler.hpp"
#include "said/simgen.hpp"

namespace {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Anderson-Darling normality test with estimated mean and variance
// (D'Agostino-Stephens case 3 p-value approximation).
double anderson_darling_pvalue(Eigen::VectorXd sample) {
    const auto n = sample.size();
    const double mean = sample.mean();
    const double sd = std::sqrt((sample.array() - mean).square().sum() /
                                static_cast<double>(n - 1));
    std::sort(sample.data(), sample.data() + n);
    double a2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double zi = (sample[i] - mean) / sd;
        const double zr = (sample[n - 1 - i] - mean) / sd;
        a2 += (2.0 * static_cast<double>(i) + 1.0) *
              (std::log(std_normal_cdf(zi)) + std::log1p(-std_normal_cdf(zr)));
    }
    a2 = -static_cast<double>(n) - a2 / static_cast<double>(n);
    const double nd = static_cast<double>(n);
    const double star = a2 * (1.0 + 0.75 / nd + 2.25 / (nd * nd));
    if (star >= 0.6) return std::exp(1.2937 - 5.709 * star + 0.0186 * star * star);
    if (star > 0.34) return std::exp(0.9177 - 4.279 * star - 1.38 * star * star);
    if (star > 0.2) return 1.0 - std::exp(-8.318 + 42.796 * star - 59.938 * star * star);
    return 1.0 - std::exp(-13.436 + 101.14 * star - 223.73 * star * star);
}

}  // namespace

TEST_CASE("effective sample size recovers known dependence structures") {
    std::mt19937 gen(31);
    std::normal_distribution<double> norm(0.0, 1.0);

    // White noise: every draw is effectively independent.
    Eigen::VectorXd iid(10000);
    for (int i = 0; i < 10000; ++i) iid[i] = norm(gen);
    const double ess_iid = said::effective_sample_size(iid);
    CHECK(ess_iid > 0.9 * 10000.0);
    CHECK(ess_iid <= 10000.0);

    // AR(1) with rho = 0.5 has integrated autocorrelation (1+rho)/(1-rho) = 3.
    const int n = 100000;
    Eigen::VectorXd ar(n);
    ar[0] = norm(gen);
    for (int i = 1; i < n; ++i) ar[i] = 0.5 * ar[i - 1] + norm(gen);
    const double ess_ar = said::effective_sample_size(ar);
    CHECK(ess_ar == doctest::Approx(n / 3.0).epsilon(0.10));

    // Repeating every draw stretches the lag structure without adding any
    // information, so the doubled chain stays below twice the single ESS.
    Eigen::VectorXd once = ar.head(5000);
    Eigen::VectorXd twice(10000);
    for (int i = 0; i < 5000; ++i) {
        twice[2 * i] = once[i];
        twice[2 * i + 1] = once[i];
    }
    CHECK(said::effective_sample_size(twice) < 2.0 * said::effective_sample_size(once));
    CHECK(said::effective_sample_size(twice) ==
          doctest::Approx(said::effective_sample_size(once)).epsilon(0.25));
}

TEST_CASE("effective sample size is affine invariant and handles edge cases") {
    std::mt19937 gen(77);
    std::normal_distribution<double> norm(0.0, 1.0);
    Eigen::VectorXd chain(2000);
    chain[0] = norm(gen);
    for (int i = 1; i < 2000; ++i) chain[i] = 0.7 * chain[i - 1] + norm(gen);

    const double base = said::effective_sample_size(chain);
    const double shifted = said::effective_sample_size((5.0 - 2.0 * chain.array()).matrix());
    CHECK(shifted == doctest::Approx(base).epsilon(1e-10));

    // Constant chain is reported as full size.
    CHECK(said::effective_sample_size(Eigen::VectorXd::Constant(50, 3.25)) == 50.0);

    CHECK_THROWS_AS(said::effective_sample_size(Eigen::VectorXd::Zero(9)), said::ConfigError);
}

TEST_CASE("posterior predictive intervals calibrate on data from the model") {
    said::Scenario sc;
    sc.kind = said::ScenarioKind::QR;
    sc.gamma0 = 1.0;
    sc.sigma0_sq = 0.3;
    sc.n_train = 200;
    sc.n_test = 10;
    sc.seed = 314;
    auto [data, truth] = said::generate(sc);

    const auto bases = said::make_bases(3, 4, 6, said::BasisConstraint::Origin);
    said::SamplerConfig config;
    config.iterations = 1200;
    config.burnin = 400;
    config.seed = 2718;
    const said::PosteriorSamples samples = said::run_chain(data, config, bases);

    said::Rng rng(555);
    const said::PredictiveSummary pred = said::posterior_predictive(samples, data, bases, rng);

    CHECK(pred.coverage >= 0.92);
    CHECK(pred.coverage <= 0.98);

    // Coverage is literally the count of points inside their intervals.
    long covered = 0;
    for (int i = 0; i < 200; ++i) {
        if (data.y[i] >= pred.lower[i] && data.y[i] <= pred.upper[i]) ++covered;
    }
    CHECK(pred.coverage == static_cast<double>(covered) / 200.0);

    // Standardized residuals of a correctly specified fit look Gaussian.
    CHECK(anderson_darling_pvalue(pred.standardized_residuals) > 0.01);
    CHECK(std::abs(pred.standardized_residuals.mean()) < 0.2);

    // Interval bounds are ordered and spreads positive.
    for (int i = 0; i < 200; ++i) {
        CHECK(pred.lower[i] < pred.upper[i]);
        CHECK(pred.sd[i] > 0.0);
    }
}

TEST_CASE("degenerate zero-noise samples standardize by the residual spread") {
    // Hand-built posterior with every draw identical and sigma2 = 0: the
    // predictive draws collapse onto mu, so residuals are (y - mu)/sd(y - mu).
    const auto bases = said::make_bases(3, 4, 6, said::BasisConstraint::Origin);
    const int m = static_cast<int>(bases.interaction_basis.size());
    const int d = static_cast<int>(bases.main_basis.size());
    const int n = 20, kept = 15;

    said::PosteriorSamples s;
    s.iterations = kept;
    s.burnin = 0;
    s.n = n;
    s.p = 2;
    s.q = 0;
    s.m = m;
    s.d = d;
    s.alpha = Eigen::VectorXd::Constant(kept, 0.8);
    s.sigma2 = Eigen::VectorXd::Zero(kept);
    s.nu2 = Eigen::VectorXd::Ones(kept);
    s.eta = Eigen::MatrixXd(kept, 0);
    s.gamma = Eigen::MatrixXd::Zero(kept, 2 * d);
    s.lambda = Eigen::MatrixXd::Ones(kept, 2);
    s.theta1 = Eigen::MatrixXd::Zero(kept, m);
    s.phi1 = Eigen::MatrixXd::Zero(kept, m);
    s.theta2 = Eigen::MatrixXd::Zero(kept, m);
    s.phi2 = Eigen::MatrixXd::Zero(kept, m);
    s.tau1 = Eigen::MatrixXd::Ones(kept, 1);
    s.tau2 = Eigen::MatrixXd::Ones(kept, 1);
    s.kappa = Eigen::MatrixXd::Ones(kept, 1);

    said::Dataset data;
    said::Rng data_rng(8);
    data.x.resize(n, 2);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        data.x(i, 0) = data_rng.uniform();
        data.x(i, 1) = data_rng.uniform();
        data.y[i] = 0.8 + 0.5 * data_rng.normal();
    }
    data.z = Eigen::MatrixXd(n, 0);

    said::Rng rng(99);
    const said::PredictiveSummary pred = said::posterior_predictive(s, data, bases, rng);

    // mu is exactly alpha for the zero-coefficient draws.
    const Eigen::VectorXd residual = data.y.array() - 0.8;
    const double spread = std::sqrt((residual.array() - residual.mean()).square().sum() /
                                    static_cast<double>(n - 1));
    for (int i = 0; i < n; ++i) {
        CHECK(pred.mean[i] == 0.8);
        CHECK(pred.sd[i] == 0.0);
        CHECK(pred.standardized_residuals[i] ==
              doctest::Approx(residual[i] / spread).epsilon(1e-12));
    }
    CHECK(pred.coverage == doctest::Approx(0.0));   // zero-width intervals miss noisy y
}

TEST_CASE("diagnostics report carries valid ESS fractions and residual summary") {
    said::Scenario sc;
    sc.kind = said::ScenarioKind::QR;
    sc.sigma0_sq = 0.2;
    sc.n_train = 80;
    sc.n_test = 10;
    sc.seed = 11;
    auto [data, truth] = said::generate(sc);

    const auto bases = said::make_bases(3, 4, 6, said::BasisConstraint::Origin);
    said::SamplerConfig config;
    config.iterations = 400;
    config.burnin = 150;
    config.seed = 21;
    const said::PosteriorSamples samples = said::run_chain(data, config, bases);

    said::Rng rng(3);
    const said::DiagnosticsReport report = said::diagnose(samples, data, bases, rng);

    REQUIRE(report.monitored.size() >= 6);
    CHECK(report.monitored[0] == "sigma2");
    REQUIRE(report.ess.size() == static_cast<Eigen::Index>(report.monitored.size()));
    for (Eigen::Index i = 0; i < report.ess.size(); ++i) {
        CHECK(report.ess[i] > 0.0);
        CHECK(report.ess[i] <= samples.kept());
        CHECK(report.ess_fraction[i] ==
              doctest::Approx(report.ess[i] / samples.kept()).epsilon(1e-12));
        CHECK(report.ess_fraction[i] <= 1.0);
    }
    CHECK(report.coverage95 >= 0.0);
    CHECK(report.coverage95 <= 1.0);
    CHECK(report.residual_q01 < report.residual_q99);
    CHECK(std::isfinite(report.residual_mean));
    CHECK(report.residual_variance > 0.0);

    // Same inputs and generator seed reproduce the report exactly.
    said::Rng rng_again(3);
    const said::DiagnosticsReport again = said::diagnose(samples, data, bases, rng_again);
    CHECK(again.coverage95 == report.coverage95);
    CHECK((again.ess - report.ess).cwiseAbs().maxCoeff() == 0.0);
    CHECK(again.residual_q99 == report.residual_q99);
}
