#include "said/model.hpp"

#include <cmath>
#include <limits>

#include "said/errors.hpp"

namespace said {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// log N(x; 0, c * Sigma0) given the precision K0 = Sigma0^{-1} and log|Sigma0|.
double mvn_log_density(const Eigen::VectorXd& x, double c,
                       const Eigen::MatrixXd& k0, double logdet_sigma0) {
    const double m = static_cast<double>(x.size());
    return -0.5 * (m * kLog2Pi + m * std::log(c) + logdet_sigma0 + x.dot(k0 * x) / c);
}

double logdet_sigma0_of(const PSplineCovariance& sigma0) {
    // log|Sigma0| = -log|K|; K is positive definite by construction.
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma0.precision);
    if (llt.info() != Eigen::Success)
        throw NumericError("P-spline precision matrix is not positive definite");
    double logdet_k = 0.0;
    for (int j = 0; j < sigma0.dimension; ++j)
        logdet_k += 2.0 * std::log(llt.matrixL()(j, j));
    return -logdet_k;
}

} // namespace

int pair_index(int u, int v, int p) {
    if (!(0 <= u && u < v && v < p)) throw ConfigError("pair_index requires 0 <= u < v < p");
    // Pairs (0,1), (0,2), ..., (0,p-1), (1,2), ... in lexicographic order.
    return u * p - u * (u + 1) / 2 + (v - u - 1);
}

std::vector<std::pair<int, int>> all_pairs(int p) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(p) * (p - 1) / 2);
    for (int u = 0; u < p; ++u)
        for (int v = u + 1; v < p; ++v) pairs.emplace_back(u, v);
    return pairs;
}

Eigen::VectorXd eval_interaction(const InteractionState& state,
                                 const Eigen::MatrixXd& su, const Eigen::MatrixXd& sv) {
    if (su.rows() != sv.rows()) throw ConfigError("interaction design row counts differ");
    if (su.cols() != state.theta1.size() || sv.cols() != state.phi1.size() ||
        su.cols() != state.theta2.size() || sv.cols() != state.phi2.size())
        throw ConfigError("interaction design column count does not match coefficient length");
    const Eigen::ArrayXd a1 = (su * state.theta1).array();
    const Eigen::ArrayXd b1 = (sv * state.phi1).array();
    const Eigen::ArrayXd a2 = (su * state.theta2).array();
    const Eigen::ArrayXd b2 = (sv * state.phi2).array();
    return (a1.square() * b1.square() - a2.square() * b2.square()).matrix();
}

double penalty_Q(const InteractionState& state, const GramMatrix& au, const GramMatrix& av) {
    if (au.a.rows() != state.theta1.size() || av.a.rows() != state.phi1.size())
        throw ConfigError("Gram matrix dimension does not match coefficient length");
    const double q1 = state.theta1.dot(au.a * state.theta1);
    const double q2 = state.phi1.dot(av.a * state.phi1);
    const double q3 = state.theta2.dot(au.a * state.theta2);
    const double q4 = state.phi2.dot(av.a * state.phi2);
    return q1 * q2 * q3 * q4;
}

Eigen::VectorXd eval_surface(const ModelState& state, const Eigen::MatrixXd& x,
                             const SplineBasis& main_basis,
                             const SplineBasis& interaction_basis) {
    const int p = static_cast<int>(x.cols());
    const Eigen::Index n = x.rows();
    if (static_cast<int>(state.main_effects.size()) != p)
        throw ConfigError("main-effect count does not match exposure count");
    if (state.interactions.size() != static_cast<std::size_t>(p) * (p - 1) / 2)
        throw ConfigError("interaction count does not match exposure pair count");

    Eigen::VectorXd out = Eigen::VectorXd::Constant(n, state.alpha);
    std::vector<Eigen::MatrixXd> s(p);
    for (int j = 0; j < p; ++j) {
        const Eigen::MatrixXd b = eval_design(main_basis, x.col(j));
        if (state.main_effects[j].gamma.size() != b.cols())
            throw ConfigError("main-effect coefficient length does not match basis size");
        out.noalias() += b * state.main_effects[j].gamma;
        s[j] = eval_design(interaction_basis, x.col(j));
    }
    for (int u = 0; u < p; ++u)
        for (int v = u + 1; v < p; ++v)
            out += eval_interaction(state.interactions[pair_index(u, v, p)], s[u], s[v]);
    return out;
}

double log_prior_pi0(const Eigen::VectorXd& theta1, const Eigen::VectorXd& phi1,
                     const Eigen::VectorXd& theta2, const Eigen::VectorXd& phi2,
                     double tau1, double tau2, double nu2, const PSplineCovariance& sigma0) {
    if (!(tau1 > 0.0 && tau2 > 0.0 && nu2 > 0.0))
        throw ConfigError("log_prior_pi0 requires positive tau1, tau2, nu2");
    const double logdet = logdet_sigma0_of(sigma0);
    const double c1 = nu2 * tau1 * tau1;
    const double c2 = nu2 * tau2 * tau2;
    return mvn_log_density(theta1, c1, sigma0.precision, logdet) +
           mvn_log_density(phi1, c1, sigma0.precision, logdet) +
           mvn_log_density(theta2, c2, sigma0.precision, logdet) +
           mvn_log_density(phi2, c2, sigma0.precision, logdet);
}

RejectedSummary summarize_rejected(const std::vector<CoefficientQuadruple>& rejected,
                                   const GramMatrix& au, const GramMatrix& av,
                                   const PSplineCovariance& sigma0) {
    RejectedSummary out;
    out.count = static_cast<int>(rejected.size());
    out.qtilde.reserve(rejected.size());
    const Eigen::MatrixXd& k0 = sigma0.precision;
    for (const auto& y : rejected) {
        out.mahal1 += y.theta1.dot(k0 * y.theta1) + y.phi1.dot(k0 * y.phi1);
        out.mahal2 += y.theta2.dot(k0 * y.theta2) + y.phi2.dot(k0 * y.phi2);
        const double q1 = y.theta1.dot(au.a * y.theta1);
        const double q2 = y.phi1.dot(av.a * y.phi1);
        const double q3 = y.theta2.dot(au.a * y.theta2);
        const double q4 = y.phi2.dot(av.a * y.phi2);
        out.qtilde.push_back(q1 * q2 * q3 * q4);
    }
    return out;
}

double log1mexp(double x) {
    // log(1 - e^{-x}), x > 0; switch branches at log 2 to keep precision.
    if (x <= 0.0) return -std::numeric_limits<double>::infinity();
    if (x < 0.6931471805599453) return std::log(-std::expm1(-x));
    return std::log1p(-std::exp(-x));
}

double log1pexp(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

LogTargetResult log_target_interaction(const InteractionState& state,
                                       const RejectedSummary& rejected,
                                       const Eigen::VectorXd& residual,
                                       double sigma2, double nu2,
                                       const Eigen::MatrixXd& su, const Eigen::MatrixXd& sv,
                                       const GramMatrix& au, const GramMatrix& av,
                                       const PSplineCovariance& sigma0) {
    const Eigen::Index n = residual.size();
    const Eigen::Index m = state.theta1.size();
    if (n == 0) throw ConfigError("log_target_interaction requires a nonempty residual");
    if (su.rows() != n || sv.rows() != n)
        throw ConfigError("design row count does not match residual length");
    if (su.cols() != m || sv.cols() != m)
        throw ConfigError("design column count does not match coefficient length");
    if (!(sigma2 > 0.0 && nu2 > 0.0))
        throw ConfigError("log_target_interaction requires positive sigma2 and nu2");

    LogTargetResult out;
    out.gradient = Eigen::VectorXd::Zero(4 * m + 3);

    // A rejected proposal lying exactly on the penalty null set has acceptance
    // probability 1, so its presence in the rejected set has density zero.
    for (double q : rejected.qtilde) {
        if (q <= 0.0) {
            out.value = -std::numeric_limits<double>::infinity();
            return out;
        }
    }

    const double tau1 = state.tau1, tau2 = state.tau2, kappa = state.kappa;
    const double ltau1 = std::log(tau1), ltau2 = std::log(tau2), lkappa = std::log(kappa);
    const double c1 = nu2 * tau1 * tau1;
    const double c2 = nu2 * tau2 * tau2;
    const Eigen::MatrixXd& k0 = sigma0.precision;
    const double logdet = logdet_sigma0_of(sigma0);
    const double md = static_cast<double>(m);
    const double big_j = static_cast<double>(rejected.count);

    const Eigen::VectorXd k_theta1 = k0 * state.theta1;
    const Eigen::VectorXd k_phi1 = k0 * state.phi1;
    const Eigen::VectorXd k_theta2 = k0 * state.theta2;
    const Eigen::VectorXd k_phi2 = k0 * state.phi2;
    const double quad1 = state.theta1.dot(k_theta1) + state.phi1.dot(k_phi1);
    const double quad2 = state.theta2.dot(k_theta2) + state.phi2.dot(k_phi2);

    // Coefficient prior of the current state and of every rejected proposal.
    double value = -(1.0 + big_j) * (2.0 * md * kLog2Pi + 2.0 * logdet +
                                     md * std::log(c1) + md * std::log(c2));
    value += -0.5 * (quad1 + rejected.mahal1) / c1 - 0.5 * (quad2 + rejected.mahal2) / c2;

    // Penalty on the current state.
    const Eigen::VectorXd au_theta1 = au.a * state.theta1;
    const Eigen::VectorXd av_phi1 = av.a * state.phi1;
    const Eigen::VectorXd au_theta2 = au.a * state.theta2;
    const Eigen::VectorXd av_phi2 = av.a * state.phi2;
    const double q1 = state.theta1.dot(au_theta1);
    const double q2 = state.phi1.dot(av_phi1);
    const double q3 = state.theta2.dot(au_theta2);
    const double q4 = state.phi2.dot(av_phi2);
    const double qtilde = q1 * q2 * q3 * q4;
    value -= kappa * qtilde;

    // Rejected proposals' acceptance complements.
    double grad_lkappa_rej = 0.0;
    for (double q : rejected.qtilde) {
        const double xq = kappa * q;
        if (xq <= 0.0) { // kappa*q underflowed: rejection had probability ~0
            out.value = -std::numeric_limits<double>::infinity();
            out.gradient.setZero();
            return out;
        }
        value += log1mexp(xq);
        grad_lkappa_rej += xq / std::expm1(xq); // -> 0 as xq -> inf, -> 1 as xq -> 0
    }

    // Half-Cauchy scales with log-scale Jacobian: log 2/pi + log tau - log(1+tau^2).
    const double klog_half_cauchy = std::log(2.0 / M_PI);
    value += klog_half_cauchy + ltau1 - log1pexp(2.0 * ltau1);
    value += klog_half_cauchy + ltau2 - log1pexp(2.0 * ltau2);

    // Standard lognormal kappa with Jacobian: the 1/kappa cancels, leaving a
    // standard normal density in log kappa.
    value += -0.5 * kLog2Pi - 0.5 * lkappa * lkappa;

    // Gaussian likelihood of the partial residual.
    const Eigen::ArrayXd a1 = (su * state.theta1).array();
    const Eigen::ArrayXd b1 = (sv * state.phi1).array();
    const Eigen::ArrayXd a2 = (su * state.theta2).array();
    const Eigen::ArrayXd b2 = (sv * state.phi2).array();
    const Eigen::ArrayXd h = a1.square() * b1.square() - a2.square() * b2.square();
    const Eigen::ArrayXd r = residual.array() - h;
    value += -0.5 * static_cast<double>(n) * (kLog2Pi + std::log(sigma2)) -
             0.5 * r.matrix().squaredNorm() / sigma2;

    out.value = value;

    // Gradient: coefficient blocks.
    const double lik_scale = 2.0 / sigma2;
    out.gradient.segment(0, m) =
        -k_theta1 / c1 - (2.0 * kappa * q2 * q3 * q4) * au_theta1 +
        lik_scale * (su.transpose() * (r * a1 * b1.square()).matrix());
    out.gradient.segment(m, m) =
        -k_phi1 / c1 - (2.0 * kappa * q1 * q3 * q4) * av_phi1 +
        lik_scale * (sv.transpose() * (r * b1 * a1.square()).matrix());
    out.gradient.segment(2 * m, m) =
        -k_theta2 / c2 - (2.0 * kappa * q1 * q2 * q4) * au_theta2 -
        lik_scale * (su.transpose() * (r * a2 * b2.square()).matrix());
    out.gradient.segment(3 * m, m) =
        -k_phi2 / c2 - (2.0 * kappa * q1 * q2 * q3) * av_phi2 -
        lik_scale * (sv.transpose() * (r * b2 * a2.square()).matrix());

    // Gradient: log tau blocks; -tanh(log tau) is (1-tau^2)/(1+tau^2), overflow-safe.
    out.gradient[4 * m] =
        -2.0 * md * (1.0 + big_j) + (quad1 + rejected.mahal1) / c1 - std::tanh(ltau1);
    out.gradient[4 * m + 1] =
        -2.0 * md * (1.0 + big_j) + (quad2 + rejected.mahal2) / c2 - std::tanh(ltau2);

    // Gradient: log kappa.
    out.gradient[4 * m + 2] = -kappa * qtilde - lkappa + grad_lkappa_rej;

    return out;
}

LogTargetResult log_target_interaction(const InteractionState& state,
                                       const std::vector<CoefficientQuadruple>& rejected,
                                       const Eigen::VectorXd& residual,
                                       double sigma2, double nu2,
                                       const Eigen::MatrixXd& su, const Eigen::MatrixXd& sv,
                                       const GramMatrix& au, const GramMatrix& av,
                                       const PSplineCovariance& sigma0) {
    return log_target_interaction(state, summarize_rejected(rejected, au, av, sigma0),
                                  residual, sigma2, nu2, su, sv, au, av, sigma0);
}

} // namespace said
