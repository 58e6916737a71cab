#pragma once

#include <vector>

#include <Eigen/Dense>

#include "said/splines.hpp"

namespace said {

// Per-pair interaction block Theta_uv: coefficients of the two rank-1
// squared-spline products plus local scales and the repulsion penalty weight.
struct InteractionState {
    Eigen::VectorXd theta1, phi1, theta2, phi2; // each length m
    double tau1 = 1.0;
    double tau2 = 1.0;
    double kappa = 1.0;
};

// Main-effect block for one exposure: spline coefficients and their
// local shrinkage scale.
struct MainEffectState {
    Eigen::VectorXd gamma; // length d
    double lambda = 1.0;
};

// Full parameter state of the regression model.
struct ModelState {
    double alpha = 0.0;
    Eigen::VectorXd eta;                        // covariate coefficients, length q
    std::vector<MainEffectState> main_effects;  // length p
    std::vector<InteractionState> interactions; // length p(p-1)/2, pairs (u,v) u<v in
                                                // lexicographic order
    double nu2 = 1.0;   // global interaction scale nu^2
    double w_aux = 1.0; // auxiliary W in the half-Cauchy mixture for nu
    double sigma2 = 1.0;
};

// Index of pair (u,v), u < v, within the lexicographic pair list for p exposures.
int pair_index(int u, int v, int p);
// All pairs (u,v), u < v, in lexicographic order.
std::vector<std::pair<int, int>> all_pairs(int p);

struct Dataset {
    Eigen::VectorXd y;  // standardized response, length n
    Eigen::MatrixXd x;  // exposures in [0,1], n x p
    Eigen::MatrixXd z;  // covariates, n x q (q may be 0)
    double y_scale = 1.0; // multiply model-scale quantities by this to undo standardization
};

// One proposal from the coefficient prior, kept when the rejection sampler
// discards it. Same layout as the coefficient part of InteractionState.
struct CoefficientQuadruple {
    Eigen::VectorXd theta1, phi1, theta2, phi2;
};

// Sufficient statistics of a rejected-proposal set for log-target evaluation:
// the prior Mahalanobis masses per scale block and each proposal's penalty value.
struct RejectedSummary {
    int count = 0;
    double mahal1 = 0.0;         // sum_j theta1_j' K0 theta1_j + phi1_j' K0 phi1_j
    double mahal2 = 0.0;         // sum_j theta2_j' K0 theta2_j + phi2_j' K0 phi2_j
    std::vector<double> qtilde;  // penalty Q of each rejected proposal
};

struct LogTargetResult {
    double value = 0.0;
    // Gradient in the sampling coordinates
    // [theta1, phi1, theta2, phi2, log tau1, log tau2, log kappa], length 4m+3.
    Eigen::VectorXd gradient;
};

// h_uv rows: (Su theta1)^2 (Sv phi1)^2 - (Su theta2)^2 (Sv phi2)^2, elementwise.
Eigen::VectorXd eval_interaction(const InteractionState& state,
                                 const Eigen::MatrixXd& su, const Eigen::MatrixXd& sv);

// Repulsion penalty Q = (th1'Au th1)(ph1'Av ph1)(th2'Au th2)(ph2'Av ph2),
// the product of integrals of the positive and negative interaction parts.
double penalty_Q(const InteractionState& state, const GramMatrix& au, const GramMatrix& av);

// Exposure-response surface H(x) = alpha + sum_j f_j(x_j) + sum_{u<v} h_uv(x_u,x_v)
// per row of x. Covariate contributions are added separately by callers.
Eigen::VectorXd eval_surface(const ModelState& state, const Eigen::MatrixXd& x,
                             const SplineBasis& main_basis,
                             const SplineBasis& interaction_basis);

// Log prior density of the four coefficient vectors:
// theta1, phi1 ~ N(0, nu2 tau1^2 Sigma0); theta2, phi2 ~ N(0, nu2 tau2^2 Sigma0).
double log_prior_pi0(const Eigen::VectorXd& theta1, const Eigen::VectorXd& phi1,
                     const Eigen::VectorXd& theta2, const Eigen::VectorXd& phi2,
                     double tau1, double tau2, double nu2, const PSplineCovariance& sigma0);

RejectedSummary summarize_rejected(const std::vector<CoefficientQuadruple>& rejected,
                                   const GramMatrix& au, const GramMatrix& av,
                                   const PSplineCovariance& sigma0);

// Log density (up to nothing: all constants included) of the augmented full
// conditional of one interaction block in the coordinates
// (Psi, log tau1, log tau2, log kappa), with its exact gradient:
//   log pi0(Psi | tau, nu) - kappa Q(Psi)
//   + sum_j [ log pi0(Y_j | tau, nu) + log(1 - exp(-kappa Q(Y_j))) ]
//   + log C+(tau1) + log tau1 + log C+(tau2) + log tau2
//   + log lognormal(kappa) + log kappa
//   + log N(residual | h_uv, sigma2 I).
// A rejected proposal with Q(Y_j) = 0 makes the target -infinity; the result
// then carries value = -inf and a zero gradient (HMC treats it as reject).
LogTargetResult log_target_interaction(const InteractionState& state,
                                       const RejectedSummary& rejected,
                                       const Eigen::VectorXd& residual,
                                       double sigma2, double nu2,
                                       const Eigen::MatrixXd& su, const Eigen::MatrixXd& sv,
                                       const GramMatrix& au, const GramMatrix& av,
                                       const PSplineCovariance& sigma0);

LogTargetResult log_target_interaction(const InteractionState& state,
                                       const std::vector<CoefficientQuadruple>& rejected,
                                       const Eigen::VectorXd& residual,
                                       double sigma2, double nu2,
                                       const Eigen::MatrixXd& su, const Eigen::MatrixXd& sv,
                                       const GramMatrix& au, const GramMatrix& av,
                                       const PSplineCovariance& sigma0);

// log(1 - exp(-x)) for x > 0, stable for both tails.
double log1mexp(double x);
// log(1 + exp(x)), overflow-safe.
double log1pexp(double x);

} // namespace said
