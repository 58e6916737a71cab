#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "said/model.hpp"
#include "said/rng.hpp"
#include "said/splines.hpp"

namespace said {

struct SamplerConfig {
    int iterations = 15000;
    int burnin = 5000;
    double hmc_step_size = 0.01;   // e0
    int hmc_leapfrog_steps = 10;   // L0
    int perturb_interval = 500;    // iterations between step-size refreshes
    double perturb_low = 0.9;      // step-size factor range
    double perturb_high = 1.1;
    int rejection_cap = 10000;
    double a = 0.5;                // Gamma(a, a) prior on each lambda_j
    std::uint64_t seed = 1;
};

// Bases and prior matrices shared across the whole fit. All exposures live on
// [0,1] after the CDF transform, so one basis of each kind serves every
// exposure and every pair shares the same Gram matrix.
struct ModelBases {
    SplineBasis main_basis;        // size d, Origin or Integral constraint
    SplineBasis interaction_basis; // size m, Interaction constraint
    PSplineCovariance sigma0;      // dimension m, interaction coefficient prior
    PSplineCovariance sigma_m;     // dimension d, main-effect prior covariance
    GramMatrix gram;               // Gram integrals of the interaction basis
    Eigen::MatrixXd sigma0_chol;   // lower Cholesky of sigma0, for prior draws
};

ModelBases make_bases(int degree, int main_size, int interaction_size,
                      BasisConstraint main_constraint);

// Post-burn-in draws, one row per kept iteration. Coefficient blocks are laid
// out exposure-major (gamma) and pair-major (interaction blocks).
struct PosteriorSamples {
    int iterations = 0;
    int burnin = 0;
    int n = 0, p = 0, q = 0, m = 0, d = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<int, int>> pairs;

    Eigen::VectorXd alpha, nu2, w_aux, sigma2;       // kept
    Eigen::MatrixXd eta;                             // kept x q
    Eigen::MatrixXd gamma;                           // kept x (p*d), col j*d+k
    Eigen::MatrixXd lambda;                          // kept x p
    Eigen::MatrixXd theta1, phi1, theta2, phi2;      // kept x (npairs*m), col pair*m+k
    Eigen::MatrixXd tau1, tau2, kappa;               // kept x npairs
    Eigen::MatrixXd rejected_count;                  // kept x npairs
    Eigen::MatrixXd accepted;                        // kept x npairs, 0/1 HMC outcome
    Eigen::VectorXd acceptance_rate;                 // per pair, over all iterations

    int kept() const { return iterations - burnin; }
    int num_pairs() const { return static_cast<int>(pairs.size()); }
    // Reassemble the interaction block of one kept draw for one pair.
    InteractionState interaction_at(int draw, int pair) const;
    // Reassemble main-effect coefficients of one kept draw for one exposure.
    Eigen::VectorXd gamma_at(int draw, int exposure) const;
};

struct LinearBlockDraw {
    double alpha = 0.0;
    Eigen::VectorXd eta;
    std::vector<Eigen::VectorXd> gamma;
};

// Joint conjugate draw of (alpha, eta, Gamma_1..Gamma_p) given everything
// else, from N(A^{-1} Btilde' xi / sigma2, A^{-1}) with
// A = Btilde'Btilde/sigma2 + M^{-1}, via one Cholesky factorization.
LinearBlockDraw update_linear_block(const ModelState& state, const Dataset& data,
                                    const ModelBases& bases, Rng& rng);

// lambda_j | Gamma_j ~ Gamma(a + d/2, a + Gamma' SigmaM^{-1} Gamma / 2), shape-rate.
double update_lambda(const Eigen::VectorXd& gamma, const PSplineCovariance& sigma_m,
                     double a, Rng& rng);

// Rejection-sampling augmentation for one pair: draw quadruples from the
// coefficient prior until one is accepted with probability exp(-kappa Q),
// return every rejected draw, discard the accepted one. Throws NumericError
// if rejection_cap draws all get rejected.
std::vector<CoefficientQuadruple> sample_rejected(const InteractionState& state, double nu2,
                                                  const ModelBases& bases, int rejection_cap,
                                                  std::pair<int, int> pair, Rng& rng);

struct HmcResult {
    InteractionState state;
    bool accepted = false;
};

struct LeapfrogResult {
    Eigen::VectorXd z;
    Eigen::VectorXd rho;
    double value = 0.0; // log target at the end point
    bool finite = true; // false if the trajectory hit a non-finite target value
};

// Leapfrog integration of dz/dt = rho, drho/dt = grad log target, identity
// mass. This is the integrator inside hmc_update_interaction, exposed so its
// energy conservation can be checked against analytic Hamiltonians. Pass
// at_start to reuse an already-computed target evaluation at z.
LeapfrogResult leapfrog(Eigen::VectorXd z, Eigen::VectorXd rho, double step_size, int steps,
                        const std::function<LogTargetResult(const Eigen::VectorXd&)>& target,
                        const LogTargetResult* at_start = nullptr);

// One HMC draw (L leapfrog steps, identity mass) of an interaction block in
// (Psi, log tau1, log tau2, log kappa) against log_target_interaction.
HmcResult hmc_update_interaction(const InteractionState& state, const RejectedSummary& rejected,
                                 const Eigen::VectorXd& residual, double sigma2, double nu2,
                                 double step_size, int leapfrog_steps,
                                 const Eigen::MatrixXd& su, const Eigen::MatrixXd& sv,
                                 const ModelBases& bases, Rng& rng);

// One pair's contribution r_uv + t_uv to the nu2 conditional rate: the
// Mahalanobis mass of the current coefficients plus that of the rejected
// proposals, each divided by its tau^2.
double nu2_rate_terms(const InteractionState& state, const RejectedSummary& rejected,
                      const PSplineCovariance& sigma0);

// Global-scale pair: nu2 ~ IG(1/2 + 2m(npairs + n_rejected), 1/W + sum/2),
// then W ~ IG(1, 1 + 1/nu2).
std::pair<double, double> update_nu2_w(const std::vector<InteractionState>& interactions,
                                       const std::vector<RejectedSummary>& rejected,
                                       int m, double w_aux, const PSplineCovariance& sigma0,
                                       Rng& rng);

// sigma2 ~ IG(n/2, SSR/2); a numerically zero SSR is a degeneracy error.
double update_sigma2(const Eigen::VectorXd& residual, Rng& rng);

// Full Gibbs chain: linear block, lambdas, per-pair augmentation + HMC in a
// fixed lexicographic sweep, global scale, then error variance; step size is
// refreshed to e0 * U(perturb range) every perturb_interval iterations.
PosteriorSamples run_chain(const Dataset& data, const SamplerConfig& config,
                           const ModelBases& bases);

} // namespace said
