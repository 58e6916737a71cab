#include "said/sampler.hpp"

#include <cmath>
#include <string>

#include "said/errors.hpp"

namespace said {

namespace {

Eigen::VectorXd pack_state(const InteractionState& st) {
    const Eigen::Index m = st.theta1.size();
    Eigen::VectorXd z(4 * m + 3);
    z.segment(0, m) = st.theta1;
    z.segment(m, m) = st.phi1;
    z.segment(2 * m, m) = st.theta2;
    z.segment(3 * m, m) = st.phi2;
    z[4 * m] = std::log(st.tau1);
    z[4 * m + 1] = std::log(st.tau2);
    z[4 * m + 2] = std::log(st.kappa);
    return z;
}

InteractionState unpack_state(const Eigen::VectorXd& z, Eigen::Index m) {
    InteractionState st;
    st.theta1 = z.segment(0, m);
    st.phi1 = z.segment(m, m);
    st.theta2 = z.segment(2 * m, m);
    st.phi2 = z.segment(3 * m, m);
    st.tau1 = std::exp(z[4 * m]);
    st.tau2 = std::exp(z[4 * m + 1]);
    st.kappa = std::exp(z[4 * m + 2]);
    return st;
}

// Shared core of the linear-block draw, used by both the public operation and
// the chain's cached-design fast path.
LinearBlockDraw draw_linear_core(const Eigen::MatrixXd& btilde, const Eigen::MatrixXd& btb,
                                 const Eigen::VectorXd& xi, const std::vector<double>& lambda,
                                 const Eigen::MatrixXd& sigma_m_precision, double sigma2,
                                 int q, int d, Rng& rng) {
    const int p = static_cast<int>(lambda.size());
    const int dim = 1 + q + p * d;
    Eigen::MatrixXd a = btb / sigma2;
    a(0, 0) += 1e-4; // vague N(0, 1e4) intercept prior
    for (int i = 0; i < q; ++i) a(1 + i, 1 + i) += 1e-4;
    for (int j = 0; j < p; ++j)
        a.block(1 + q + j * d, 1 + q + j * d, d, d) += lambda[j] * sigma_m_precision;

    const Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericError("linear block normal matrix not positive definite (dim=" +
                           std::to_string(dim) + ", sigma2=" + std::to_string(sigma2) + ")");
    const Eigen::VectorXd b = btilde.transpose() * xi / sigma2;
    const Eigen::VectorXd mean = llt.solve(b);
    const Eigen::VectorXd draw = mean + llt.matrixU().solve(rng.normal_vec(dim));

    LinearBlockDraw out;
    out.alpha = draw[0];
    out.eta = draw.segment(1, q);
    out.gamma.resize(p);
    for (int j = 0; j < p; ++j) out.gamma[j] = draw.segment(1 + q + j * d, d);
    return out;
}

Eigen::MatrixXd assemble_btilde(const Dataset& data, const ModelBases& bases) {
    const Eigen::Index n = data.y.size();
    const int p = static_cast<int>(data.x.cols());
    const int q = static_cast<int>(data.z.cols());
    const int d = bases.main_basis.size();
    Eigen::MatrixXd btilde(n, 1 + q + p * d);
    btilde.col(0).setOnes();
    btilde.middleCols(1, q) = data.z;
    for (int j = 0; j < p; ++j)
        btilde.middleCols(1 + q + j * d, d) = eval_design(bases.main_basis, data.x.col(j));
    return btilde;
}

} // namespace

ModelBases make_bases(int degree, int main_size, int interaction_size,
                      BasisConstraint main_constraint) {
    if (main_size < degree + 0 || interaction_size < degree)
        throw ConfigError("basis size must be at least the spline degree");
    if (main_constraint == BasisConstraint::Interaction)
        throw ConfigError("main-effect basis must use the Origin or Integral constraint");
    ModelBases bases{
        make_basis(degree, main_size - degree, main_constraint),
        make_basis(degree, interaction_size - degree, BasisConstraint::Interaction),
        pspline_covariance(interaction_size),
        pspline_covariance(main_size),
        GramMatrix{},
        Eigen::MatrixXd()};
    bases.gram = gram_integral(bases.interaction_basis);
    bases.sigma0_chol = bases.sigma0.sigma0.llt().matrixL();
    return bases;
}

InteractionState PosteriorSamples::interaction_at(int draw, int pair) const {
    InteractionState st;
    st.theta1 = theta1.row(draw).segment(pair * m, m).transpose();
    st.phi1 = phi1.row(draw).segment(pair * m, m).transpose();
    st.theta2 = theta2.row(draw).segment(pair * m, m).transpose();
    st.phi2 = phi2.row(draw).segment(pair * m, m).transpose();
    st.tau1 = tau1(draw, pair);
    st.tau2 = tau2(draw, pair);
    st.kappa = kappa(draw, pair);
    return st;
}

Eigen::VectorXd PosteriorSamples::gamma_at(int draw, int exposure) const {
    return gamma.row(draw).segment(exposure * d, d).transpose();
}

LinearBlockDraw update_linear_block(const ModelState& state, const Dataset& data,
                                    const ModelBases& bases, Rng& rng) {
    if (!(state.sigma2 > 0.0)) throw ConfigError("update_linear_block requires sigma2 > 0");
    const int p = static_cast<int>(data.x.cols());
    const Eigen::MatrixXd btilde = assemble_btilde(data, bases);

    Eigen::VectorXd xi = data.y;
    std::vector<Eigen::MatrixXd> s(p);
    for (int j = 0; j < p; ++j) s[j] = eval_design(bases.interaction_basis, data.x.col(j));
    for (int u = 0; u < p; ++u)
        for (int v = u + 1; v < p; ++v)
            xi -= eval_interaction(state.interactions[pair_index(u, v, p)], s[u], s[v]);

    std::vector<double> lambda(p);
    for (int j = 0; j < p; ++j) lambda[j] = state.main_effects[j].lambda;
    return draw_linear_core(btilde, btilde.transpose() * btilde, xi, lambda,
                            bases.sigma_m.precision, state.sigma2,
                            static_cast<int>(data.z.cols()), bases.main_basis.size(), rng);
}

double update_lambda(const Eigen::VectorXd& gamma, const PSplineCovariance& sigma_m,
                     double a, Rng& rng) {
    if (!(a > 0.0)) throw ConfigError("lambda prior parameter a must be positive");
    const double quad = gamma.dot(sigma_m.precision * gamma);
    return rng.gamma(a + 0.5 * gamma.size(), a + 0.5 * quad);
}

std::vector<CoefficientQuadruple> sample_rejected(const InteractionState& state, double nu2,
                                                  const ModelBases& bases, int rejection_cap,
                                                  std::pair<int, int> pair, Rng& rng) {
    const int m = bases.sigma0.dimension;
    const double scale1 = std::sqrt(nu2) * state.tau1;
    const double scale2 = std::sqrt(nu2) * state.tau2;
    std::vector<CoefficientQuadruple> rejected;
    for (int trial = 0; trial < rejection_cap; ++trial) {
        CoefficientQuadruple y;
        y.theta1 = scale1 * (bases.sigma0_chol * rng.normal_vec(m));
        y.phi1 = scale1 * (bases.sigma0_chol * rng.normal_vec(m));
        y.theta2 = scale2 * (bases.sigma0_chol * rng.normal_vec(m));
        y.phi2 = scale2 * (bases.sigma0_chol * rng.normal_vec(m));
        const double q1 = y.theta1.dot(bases.gram.a * y.theta1);
        const double q2 = y.phi1.dot(bases.gram.a * y.phi1);
        const double q3 = y.theta2.dot(bases.gram.a * y.theta2);
        const double q4 = y.phi2.dot(bases.gram.a * y.phi2);
        const double accept_prob = std::exp(-state.kappa * q1 * q2 * q3 * q4);
        if (rng.uniform() < accept_prob) return rejected;
        rejected.push_back(std::move(y));
    }
    throw NumericError("rejection cap " + std::to_string(rejection_cap) +
                       " exceeded for pair (" + std::to_string(pair.first + 1) + "," +
                       std::to_string(pair.second + 1) +
                       ") at kappa=" + std::to_string(state.kappa));
}

LeapfrogResult leapfrog(Eigen::VectorXd z, Eigen::VectorXd rho, double step_size, int steps,
                        const std::function<LogTargetResult(const Eigen::VectorXd&)>& target,
                        const LogTargetResult* at_start) {
    LogTargetResult at = at_start ? *at_start : target(z);
    LeapfrogResult out{std::move(z), std::move(rho), at.value, std::isfinite(at.value)};
    if (!out.finite) return out;
    out.rho += 0.5 * step_size * at.gradient;
    for (int l = 0; l < steps; ++l) {
        out.z += step_size * out.rho;
        at = target(out.z);
        if (!std::isfinite(at.value)) {
            out.finite = false;
            return out;
        }
        out.value = at.value;
        out.rho += ((l + 1 < steps) ? step_size : 0.5 * step_size) * at.gradient;
    }
    return out;
}

HmcResult hmc_update_interaction(const InteractionState& state, const RejectedSummary& rejected,
                                 const Eigen::VectorXd& residual, double sigma2, double nu2,
                                 double step_size, int leapfrog_steps,
                                 const Eigen::MatrixXd& su, const Eigen::MatrixXd& sv,
                                 const ModelBases& bases, Rng& rng) {
    const Eigen::Index m = state.theta1.size();
    const Eigen::Index dim = 4 * m + 3;

    auto target = [&](const Eigen::VectorXd& z) {
        return log_target_interaction(unpack_state(z, m), rejected, residual, sigma2, nu2, su,
                                      sv, bases.gram, bases.gram, bases.sigma0);
    };

    const LogTargetResult at_start = target(pack_state(state));
    if (!std::isfinite(at_start.value))
        throw NumericError("non-finite HMC energy at the current state");

    const Eigen::VectorXd rho0 = rng.normal_vec(dim);
    const double h0 = -at_start.value + 0.5 * rho0.squaredNorm();

    const LeapfrogResult traj = leapfrog(pack_state(state), rho0, step_size, leapfrog_steps,
                                         target, &at_start);
    if (!traj.finite) return HmcResult{state, false};

    const double h1 = -traj.value + 0.5 * traj.rho.squaredNorm();
    if (std::log(rng.uniform()) < h0 - h1) return HmcResult{unpack_state(traj.z, m), true};
    return HmcResult{state, false};
}

double nu2_rate_terms(const InteractionState& state, const RejectedSummary& rejected,
                      const PSplineCovariance& sigma0) {
    const Eigen::MatrixXd& k0 = sigma0.precision;
    const double inv_t1 = 1.0 / (state.tau1 * state.tau1);
    const double inv_t2 = 1.0 / (state.tau2 * state.tau2);
    const double r_uv =
        (state.theta1.dot(k0 * state.theta1) + state.phi1.dot(k0 * state.phi1)) * inv_t1 +
        (state.theta2.dot(k0 * state.theta2) + state.phi2.dot(k0 * state.phi2)) * inv_t2;
    const double t_uv = rejected.mahal1 * inv_t1 + rejected.mahal2 * inv_t2;
    return r_uv + t_uv;
}

std::pair<double, double> update_nu2_w(const std::vector<InteractionState>& interactions,
                                       const std::vector<RejectedSummary>& rejected,
                                       int m, double w_aux, const PSplineCovariance& sigma0,
                                       Rng& rng) {
    if (interactions.size() != rejected.size())
        throw ConfigError("update_nu2_w: one rejected summary per interaction required");
    long n_rej = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < interactions.size(); ++i) {
        sum += nu2_rate_terms(interactions[i], rejected[i], sigma0);
        n_rej += rejected[i].count;
    }
    const double shape =
        0.5 + 2.0 * m * (static_cast<double>(interactions.size()) + static_cast<double>(n_rej));
    const double rate = 1.0 / w_aux + 0.5 * sum;
    const double nu2 = rng.inv_gamma(shape, rate);
    const double w = rng.inv_gamma(1.0, 1.0 + 1.0 / nu2);
    return {nu2, w};
}

double update_sigma2(const Eigen::VectorXd& residual, Rng& rng) {
    const Eigen::Index n = residual.size();
    if (n == 0) throw ConfigError("update_sigma2 requires a nonempty residual");
    const double ssr = residual.squaredNorm();
    if (!(ssr > 0.0))
        throw NumericError("degenerate zero residual sum of squares in sigma2 update");
    return rng.inv_gamma(0.5 * static_cast<double>(n), 0.5 * ssr);
}

namespace {

void validate_config(const SamplerConfig& config) {
    if (config.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (config.burnin < 0 || config.burnin >= config.iterations)
        throw ConfigError("burnin must satisfy 0 <= burnin < iterations");
    if (!(config.hmc_step_size > 0.0)) throw ConfigError("hmc step size e0 must be positive");
    if (config.hmc_leapfrog_steps < 1) throw ConfigError("leapfrog step count L0 must be >= 1");
    if (config.perturb_interval < 1) throw ConfigError("perturb_interval must be >= 1");
    if (!(config.perturb_low > 0.0) || config.perturb_low > config.perturb_high)
        throw ConfigError("perturb range must satisfy 0 < low <= high");
    if (config.rejection_cap < 1) throw ConfigError("rejection_cap must be >= 1");
    if (!(config.a > 0.0)) throw ConfigError("lambda prior parameter a must be positive");
}

void validate_data(const Dataset& data) {
    if (data.y.size() == 0) throw ConfigError("dataset is empty");
    if (data.x.rows() != data.y.size())
        throw ConfigError("exposure row count does not match response length");
    if (data.z.rows() != 0 && data.z.rows() != data.y.size())
        throw ConfigError("covariate row count does not match response length");
    if (data.x.size() > 0 && (data.x.minCoeff() < 0.0 || data.x.maxCoeff() > 1.0))
        throw ConfigError("exposures must lie in [0,1]");
}

} // namespace

PosteriorSamples run_chain(const Dataset& data, const SamplerConfig& config,
                           const ModelBases& bases) {
    validate_config(config);
    validate_data(data);

    const int n = static_cast<int>(data.y.size());
    const int p = static_cast<int>(data.x.cols());
    const int q = static_cast<int>(data.z.cols());
    const int m = bases.interaction_basis.size();
    const int d = bases.main_basis.size();
    const auto pairs = all_pairs(p);
    const int npairs = static_cast<int>(pairs.size());
    const int kept = config.iterations - config.burnin;

    Rng rng(config.seed);

    const Eigen::MatrixXd btilde = assemble_btilde(data, bases);
    const Eigen::MatrixXd btb = btilde.transpose() * btilde;
    std::vector<Eigen::MatrixXd> s(p);
    for (int j = 0; j < p; ++j) s[j] = eval_design(bases.interaction_basis, data.x.col(j));

    // Near-null start: intercept at the response mean, everything else tiny.
    ModelState st;
    st.alpha = data.y.mean();
    st.eta = 0.01 * rng.normal_vec(q);
    st.main_effects.resize(p);
    for (auto& me : st.main_effects) {
        me.gamma = 0.01 * rng.normal_vec(d);
        me.lambda = 1.0;
    }
    st.interactions.resize(npairs);
    for (auto& is : st.interactions) {
        is.theta1 = 0.01 * rng.normal_vec(m);
        is.phi1 = 0.01 * rng.normal_vec(m);
        is.theta2 = 0.01 * rng.normal_vec(m);
        is.phi2 = 0.01 * rng.normal_vec(m);
        is.tau1 = is.tau2 = is.kappa = 1.0;
    }

    PosteriorSamples out;
    out.iterations = config.iterations;
    out.burnin = config.burnin;
    out.n = n;
    out.p = p;
    out.q = q;
    out.m = m;
    out.d = d;
    out.seed = config.seed;
    out.pairs = pairs;
    out.alpha.resize(kept);
    out.nu2.resize(kept);
    out.w_aux.resize(kept);
    out.sigma2.resize(kept);
    out.eta.resize(kept, q);
    out.gamma.resize(kept, p * d);
    out.lambda.resize(kept, p);
    out.theta1.resize(kept, npairs * m);
    out.phi1.resize(kept, npairs * m);
    out.theta2.resize(kept, npairs * m);
    out.phi2.resize(kept, npairs * m);
    out.tau1.resize(kept, npairs);
    out.tau2.resize(kept, npairs);
    out.kappa.resize(kept, npairs);
    out.rejected_count.resize(kept, npairs);
    out.accepted.resize(kept, npairs);
    out.acceptance_rate = Eigen::VectorXd::Zero(npairs);

    Eigen::MatrixXd h_cols(n, npairs); // current h_uv column per pair
    for (int k = 0; k < npairs; ++k)
        h_cols.col(k) = eval_interaction(st.interactions[k], s[pairs[k].first], s[pairs[k].second]);

    Eigen::VectorXd additive_fit = Eigen::VectorXd::Zero(n);
    std::vector<double> lambda(p, 1.0);
    std::vector<RejectedSummary> summaries(npairs);
    double step_size = config.hmc_step_size;

    for (int iter = 0; iter < config.iterations; ++iter) {
        try {
            // Refresh the step size from the base value so perturbations stay
            // bounded instead of compounding.
            if (iter % config.perturb_interval == 0)
                step_size = config.hmc_step_size *
                            rng.uniform(config.perturb_low, config.perturb_high);

            Eigen::VectorXd total_h = h_cols.rowwise().sum();

            // Step 1: joint draw of (alpha, eta, Gamma).
            const Eigen::VectorXd xi = data.y - total_h;
            for (int j = 0; j < p; ++j) lambda[j] = st.main_effects[j].lambda;
            const LinearBlockDraw lin = draw_linear_core(btilde, btb, xi, lambda,
                                                         bases.sigma_m.precision, st.sigma2,
                                                         q, d, rng);
            st.alpha = lin.alpha;
            st.eta = lin.eta;
            additive_fit.setConstant(lin.alpha);
            if (q > 0) additive_fit.noalias() += data.z * lin.eta;
            for (int j = 0; j < p; ++j) {
                st.main_effects[j].gamma = lin.gamma[j];
                additive_fit.noalias() += btilde.middleCols(1 + q + j * d, d) * lin.gamma[j];
            }

            // Step 2: main-effect shrinkage scales.
            for (int j = 0; j < p; ++j)
                st.main_effects[j].lambda =
                    update_lambda(st.main_effects[j].gamma, bases.sigma_m, config.a, rng);

            // Step 3: per-pair augmentation and HMC, fixed lexicographic sweep.
            const Eigen::VectorXd base_resid = data.y - additive_fit;
            for (int k = 0; k < npairs; ++k) {
                const auto& pr = pairs[k];
                const Eigen::VectorXd delta = base_resid - total_h + h_cols.col(k);
                const auto rejected_draws =
                    sample_rejected(st.interactions[k], st.nu2, bases, config.rejection_cap,
                                    pr, rng);
                summaries[k] =
                    summarize_rejected(rejected_draws, bases.gram, bases.gram, bases.sigma0);
                const HmcResult hmc = hmc_update_interaction(
                    st.interactions[k], summaries[k], delta, st.sigma2, st.nu2, step_size,
                    config.hmc_leapfrog_steps, s[pr.first], s[pr.second], bases, rng);
                st.interactions[k] = hmc.state;
                out.acceptance_rate[k] += hmc.accepted ? 1.0 : 0.0;

                const Eigen::VectorXd new_h =
                    eval_interaction(st.interactions[k], s[pr.first], s[pr.second]);
                total_h += new_h - h_cols.col(k);
                h_cols.col(k) = new_h;

                if (iter >= config.burnin) {
                    const int ki = iter - config.burnin;
                    out.rejected_count(ki, k) = static_cast<double>(summaries[k].count);
                    out.accepted(ki, k) = hmc.accepted ? 1.0 : 0.0;
                }
            }

            // Step 4: global interaction scale and its auxiliary.
            std::tie(st.nu2, st.w_aux) =
                update_nu2_w(st.interactions, summaries, m, st.w_aux, bases.sigma0, rng);

            // Step 5: error variance.
            st.sigma2 = update_sigma2(base_resid - total_h, rng);
        } catch (const NumericError& err) {
            throw NumericError("iteration " + std::to_string(iter) + ": " + err.what());
        }

        if (iter >= config.burnin) {
            const int ki = iter - config.burnin;
            out.alpha[ki] = st.alpha;
            out.nu2[ki] = st.nu2;
            out.w_aux[ki] = st.w_aux;
            out.sigma2[ki] = st.sigma2;
            out.eta.row(ki) = st.eta.transpose();
            for (int j = 0; j < p; ++j) {
                out.gamma.row(ki).segment(j * d, d) = st.main_effects[j].gamma.transpose();
                out.lambda(ki, j) = st.main_effects[j].lambda;
            }
            for (int k = 0; k < npairs; ++k) {
                const auto& is = st.interactions[k];
                out.theta1.row(ki).segment(k * m, m) = is.theta1.transpose();
                out.phi1.row(ki).segment(k * m, m) = is.phi1.transpose();
                out.theta2.row(ki).segment(k * m, m) = is.theta2.transpose();
                out.phi2.row(ki).segment(k * m, m) = is.phi2.transpose();
                out.tau1(ki, k) = is.tau1;
                out.tau2(ki, k) = is.tau2;
                out.kappa(ki, k) = is.kappa;
            }
        }
    }

    out.acceptance_rate /= static_cast<double>(config.iterations);
    return out;
}

} // namespace said
