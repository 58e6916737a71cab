#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "said/errors.hpp"
#include "said/model.hpp"
#include "said/rng.hpp"
#include "said/splines.hpp"

namespace {

// Independent oracle: multivariate normal log-density via Cholesky of the
// covariance, no reuse of library internals.
double mvn_logpdf_oracle(const Eigen::VectorXd& x, const Eigen::MatrixXd& cov) {
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    REQUIRE(llt.info() == Eigen::Success);
    const Eigen::VectorXd alpha = llt.matrixL().solve(x);
    double logdet = 0.0;
    for (int j = 0; j < cov.rows(); ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));
    return -0.5 * (x.size() * std::log(2.0 * M_PI) + logdet + alpha.squaredNorm());
}

said::InteractionState random_state(said::Rng& rng, int m, double scale) {
    said::InteractionState st;
    st.theta1 = scale * rng.normal_vec(m);
    st.phi1 = scale * rng.normal_vec(m);
    st.theta2 = scale * rng.normal_vec(m);
    st.phi2 = scale * rng.normal_vec(m);
    st.tau1 = std::exp(0.4 * rng.normal());
    st.tau2 = std::exp(0.4 * rng.normal());
    st.kappa = std::exp(0.5 * rng.normal());
    return st;
}

// Independent oracle: the penalty as the product of the integrals of the
// positive and negative interaction parts, by 200x200 midpoint Riemann sums.
double penalty_riemann_oracle(const said::InteractionState& st, const said::SplineBasis& basis) {
    const int grid = 200;
    std::vector<Eigen::VectorXd> s(grid);
    for (int i = 0; i < grid; ++i) s[i] = basis.eval((i + 0.5) / grid);
    double pos = 0.0, neg = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double a1 = s[i].dot(st.theta1), a2 = s[i].dot(st.theta2);
        for (int j = 0; j < grid; ++j) {
            const double b1 = s[j].dot(st.phi1), b2 = s[j].dot(st.phi2);
            pos += a1 * a1 * b1 * b1;
            neg += a2 * a2 * b2 * b2;
        }
    }
    const double cell = 1.0 / (static_cast<double>(grid) * grid);
    return (pos * cell) * (neg * cell);
}

} // namespace

TEST_CASE("pair_index enumerates unordered pairs lexicographically") {
    const auto pairs = said::all_pairs(5);
    REQUIRE(pairs.size() == 10);
    CHECK(pairs.front() == std::make_pair(0, 1));
    CHECK(pairs.back() == std::make_pair(3, 4));
    for (int k = 0; k < 10; ++k)
        CHECK(said::pair_index(pairs[k].first, pairs[k].second, 5) == k);
    CHECK_THROWS_AS(said::pair_index(2, 2, 5), said::ConfigError);
    CHECK_THROWS_AS(said::pair_index(3, 1, 5), said::ConfigError);
}

TEST_CASE("eval_interaction basic arithmetic and origin annihilation") {
    // Bases with one function s(x) = x make the products easy to stage by hand.
    const auto basis = said::make_basis(1, 0, said::BasisConstraint::Interaction);
    said::InteractionState st;
    st.theta1 = Eigen::VectorXd::Constant(1, 4.0); // Su theta1 = 4 x_u
    st.phi1 = Eigen::VectorXd::Constant(1, 1.0);
    st.theta2 = Eigen::VectorXd::Constant(1, 2.0);
    st.phi2 = Eigen::VectorXd::Constant(1, 1.0);

    Eigen::VectorXd xu(3), xv(3);
    xu << 0.5, 0.0, 0.8;
    xv << 1.0, 0.7, 0.0;
    const Eigen::MatrixXd su = said::eval_design(basis, xu);
    const Eigen::MatrixXd sv = said::eval_design(basis, xv);
    const Eigen::VectorXd h = said::eval_interaction(st, su, sv);
    // Row 0: (4*0.5)^2 (1)^2 - (2*0.5)^2 (1)^2 = 4 - 1 = 3.
    CHECK(h[0] == doctest::Approx(3.0).epsilon(1e-14));
    // Rows where either exposure is 0 vanish exactly.
    CHECK(h[1] == 0.0);
    CHECK(h[2] == 0.0);

    said::InteractionState zeros;
    zeros.theta1 = zeros.phi1 = zeros.theta2 = zeros.phi2 = Eigen::VectorXd::Zero(1);
    CHECK(said::eval_interaction(zeros, su, sv).cwiseAbs().maxCoeff() == 0.0);

    said::InteractionState bad = st;
    bad.theta1 = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(said::eval_interaction(bad, su, sv), said::ConfigError);
}

TEST_CASE("interaction surface vanishes whenever either argument is zero") {
    said::Rng rng(31);
    const auto basis = said::make_basis(3, 2, said::BasisConstraint::Interaction);
    const auto st = random_state(rng, basis.size(), 1.0);
    const int grid = 21;
    Eigen::VectorXd xs(grid), zs(grid);
    for (int i = 0; i < grid; ++i) {
        xs[i] = static_cast<double>(i) / (grid - 1);
        zs[i] = 0.0;
    }
    const Eigen::MatrixXd s_var = said::eval_design(basis, xs);
    const Eigen::MatrixXd s_zero = said::eval_design(basis, zs);
    CHECK(said::eval_interaction(st, s_var, s_zero).cwiseAbs().maxCoeff() == 0.0);
    CHECK(said::eval_interaction(st, s_zero, s_var).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("penalty_Q: zero factors, quadratic scaling, Riemann oracle") {
    said::Rng rng(47);
    const auto basis = said::make_basis(3, 2, said::BasisConstraint::Interaction);
    const auto gram = said::gram_integral(basis);

    auto st = random_state(rng, basis.size(), 0.3);
    const double q = said::penalty_Q(st, gram, gram);
    CHECK(q > 0.0);

    auto st_scaled = st;
    st_scaled.theta1 *= 3.0;
    CHECK(said::penalty_Q(st_scaled, gram, gram) == doctest::Approx(9.0 * q).epsilon(1e-12));

    auto st_zero = st;
    st_zero.phi2.setZero();
    CHECK(said::penalty_Q(st_zero, gram, gram) == 0.0);

    for (int rep = 0; rep < 5; ++rep) {
        const auto state = random_state(rng, basis.size(), 0.3);
        const double exact = said::penalty_Q(state, gram, gram);
        const double oracle = penalty_riemann_oracle(state, basis);
        CHECK(std::abs(exact - oracle) < 1e-6);
    }
}

TEST_CASE("eval_surface composes intercept, main effects, and interactions") {
    said::Rng rng(53);
    const int p = 2;
    const auto main_basis = said::make_basis(1, 1, said::BasisConstraint::Origin);   // d = 2
    const auto int_basis = said::make_basis(1, 1, said::BasisConstraint::Interaction); // m = 2

    said::ModelState state;
    state.alpha = 0.7;
    state.eta = Eigen::VectorXd::Zero(0);
    state.main_effects.resize(p);
    for (auto& me : state.main_effects) me.gamma = rng.normal_vec(2);
    state.interactions.push_back(random_state(rng, 2, 1.0));

    Eigen::MatrixXd x(4, p);
    x << 0.0, 0.0, 0.3, 0.9, 0.5, 0.5, 1.0, 0.2;

    const Eigen::VectorXd surface = said::eval_surface(state, x, main_basis, int_basis);

    // Origin constraint: the all-zero row reduces to the intercept alone.
    CHECK(surface[0] == doctest::Approx(0.7).epsilon(1e-14));

    // Independent term-by-term assembly.
    for (int i = 0; i < 4; ++i) {
        double expected = state.alpha;
        for (int j = 0; j < p; ++j)
            expected += main_basis.eval(x(i, j)).dot(state.main_effects[j].gamma);
        const auto& st = state.interactions[0];
        const double a1 = int_basis.eval(x(i, 0)).dot(st.theta1);
        const double b1 = int_basis.eval(x(i, 1)).dot(st.phi1);
        const double a2 = int_basis.eval(x(i, 0)).dot(st.theta2);
        const double b2 = int_basis.eval(x(i, 1)).dot(st.phi2);
        expected += a1 * a1 * b1 * b1 - a2 * a2 * b2 * b2;
        CHECK(surface[i] == doctest::Approx(expected).epsilon(1e-12));
    }

    // With interactions zeroed the surface is the additive part alone.
    auto additive = state;
    additive.interactions[0].theta1.setZero();
    additive.interactions[0].theta2.setZero();
    const Eigen::VectorXd add_surface = said::eval_surface(additive, x, main_basis, int_basis);
    for (int i = 0; i < 4; ++i) {
        double expected = state.alpha;
        for (int j = 0; j < p; ++j)
            expected += main_basis.eval(x(i, j)).dot(state.main_effects[j].gamma);
        CHECK(add_surface[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("log_prior_pi0 closed forms and MVN oracle") {
    const auto sigma0_1 = said::pspline_covariance(1);
    const Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
    const double at_zero = said::log_prior_pi0(zero1, zero1, zero1, zero1, 1.0, 1.0, 1.0, sigma0_1);
    CHECK(at_zero == doctest::Approx(4.0 * (-0.5 * std::log(2.0 * M_PI))).epsilon(1e-12));

    // Doubling nu at the origin shifts the log-density by -4 m log 2.
    const int m = 4;
    const auto sigma0 = said::pspline_covariance(m);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
    const double nu1 = said::log_prior_pi0(zero, zero, zero, zero, 0.8, 1.7, 1.0, sigma0);
    const double nu2 = said::log_prior_pi0(zero, zero, zero, zero, 0.8, 1.7, 4.0, sigma0);
    CHECK(nu2 - nu1 == doctest::Approx(-4.0 * m * std::log(2.0)).epsilon(1e-12));

    said::Rng rng(61);
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::VectorXd t1 = rng.normal_vec(m), p1 = rng.normal_vec(m);
        const Eigen::VectorXd t2 = rng.normal_vec(m), p2 = rng.normal_vec(m);
        const double tau1 = std::exp(0.5 * rng.normal());
        const double tau2 = std::exp(0.5 * rng.normal());
        const double nu_sq = std::exp(0.8 * rng.normal());
        const double got = said::log_prior_pi0(t1, p1, t2, p2, tau1, tau2, nu_sq, sigma0);
        const Eigen::MatrixXd cov1 = nu_sq * tau1 * tau1 * sigma0.sigma0;
        const Eigen::MatrixXd cov2 = nu_sq * tau2 * tau2 * sigma0.sigma0;
        const double oracle = mvn_logpdf_oracle(t1, cov1) + mvn_logpdf_oracle(p1, cov1) +
                              mvn_logpdf_oracle(t2, cov2) + mvn_logpdf_oracle(p2, cov2);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-10));
    }
}

namespace {

struct TargetFixture {
    said::SplineBasis basis = said::make_basis(3, 1, said::BasisConstraint::Interaction); // m = 4
    said::GramMatrix gram = said::gram_integral(basis);
    said::PSplineCovariance sigma0 = said::pspline_covariance(4);
    Eigen::MatrixXd su, sv;
    Eigen::VectorXd residual;
    double sigma2 = 0.3;
    double nu2 = 0.7;

    explicit TargetFixture(said::Rng& rng, int n = 40) {
        Eigen::VectorXd xu(n), xv(n);
        for (int i = 0; i < n; ++i) {
            xu[i] = rng.uniform();
            xv[i] = rng.uniform();
        }
        su = said::eval_design(basis, xu);
        sv = said::eval_design(basis, xv);
        residual = rng.normal_vec(n);
    }

    double value_at(const Eigen::VectorXd& z,
                    const std::vector<said::CoefficientQuadruple>& rejected) const {
        const int m = basis.size();
        said::InteractionState st;
        st.theta1 = z.segment(0, m);
        st.phi1 = z.segment(m, m);
        st.theta2 = z.segment(2 * m, m);
        st.phi2 = z.segment(3 * m, m);
        st.tau1 = std::exp(z[4 * m]);
        st.tau2 = std::exp(z[4 * m + 1]);
        st.kappa = std::exp(z[4 * m + 2]);
        return said::log_target_interaction(st, rejected, residual, sigma2, nu2, su, sv,
                                            gram, gram, sigma0)
            .value;
    }

    static Eigen::VectorXd pack(const said::InteractionState& st) {
        const int m = static_cast<int>(st.theta1.size());
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
};

std::vector<said::CoefficientQuadruple> random_rejected(said::Rng& rng, int count, int m) {
    std::vector<said::CoefficientQuadruple> out(count);
    for (auto& y : out) {
        y.theta1 = 0.5 * rng.normal_vec(m);
        y.phi1 = 0.5 * rng.normal_vec(m);
        y.theta2 = 0.5 * rng.normal_vec(m);
        y.phi2 = 0.5 * rng.normal_vec(m);
    }
    return out;
}

} // namespace

TEST_CASE("log_target gradient matches central finite differences") {
    said::Rng rng(71);
    const TargetFixture fx(rng);
    const int m = fx.basis.size();

    for (int rep = 0; rep < 5; ++rep) {
        const auto st = random_state(rng, m, 0.6);
        const auto rejected = random_rejected(rng, rep, m); // 0..4 rejected proposals
        const auto res = said::log_target_interaction(st, rejected, fx.residual, fx.sigma2,
                                                      fx.nu2, fx.su, fx.sv, fx.gram, fx.gram,
                                                      fx.sigma0);
        REQUIRE(std::isfinite(res.value));
        const Eigen::VectorXd z0 = TargetFixture::pack(st);
        const double h = 1e-5;
        for (int k = 0; k < z0.size(); ++k) {
            Eigen::VectorXd zp = z0, zm = z0;
            zp[k] += h;
            zm[k] -= h;
            const double fd = (fx.value_at(zp, rejected) - fx.value_at(zm, rejected)) / (2 * h);
            INFO("rep=", rep, " coord=", k);
            CHECK(std::abs(res.gradient[k] - fd) < 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("log_target at tiny kappa reduces to the unpenalized components") {
    said::Rng rng(83);
    const TargetFixture fx(rng);
    const int m = fx.basis.size();
    auto st = random_state(rng, m, 0.6);
    st.kappa = 1e-12;

    const auto res = said::log_target_interaction(st, std::vector<said::CoefficientQuadruple>{},
                                                  fx.residual, fx.sigma2, fx.nu2, fx.su, fx.sv,
                                                  fx.gram, fx.gram, fx.sigma0);

    const double lkappa = std::log(st.kappa);
    double expected = said::log_prior_pi0(st.theta1, st.phi1, st.theta2, st.phi2, st.tau1,
                                          st.tau2, fx.nu2, fx.sigma0);
    for (double tau : {st.tau1, st.tau2})
        expected += std::log(2.0 / M_PI) - std::log1p(tau * tau) + std::log(tau);
    expected += -0.5 * std::log(2.0 * M_PI) - 0.5 * lkappa * lkappa;
    const Eigen::VectorXd h =
        said::eval_interaction(st, fx.su, fx.sv);
    expected += -0.5 * fx.residual.size() * std::log(2.0 * M_PI * fx.sigma2) -
                (fx.residual - h).squaredNorm() / (2.0 * fx.sigma2);
    CHECK(res.value == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("log_target is -infinity when a rejected proposal has zero penalty") {
    said::Rng rng(89);
    const TargetFixture fx(rng);
    const int m = fx.basis.size();
    const auto st = random_state(rng, m, 0.6);
    auto rejected = random_rejected(rng, 2, m);
    rejected[1].theta1.setZero(); // Q of this proposal is exactly 0
    const auto res = said::log_target_interaction(st, rejected, fx.residual, fx.sigma2, fx.nu2,
                                                  fx.su, fx.sv, fx.gram, fx.gram, fx.sigma0);
    CHECK(std::isinf(res.value));
    CHECK(res.value < 0.0);
}

TEST_CASE("log_target is invariant to the order of rejected proposals") {
    said::Rng rng(97);
    const TargetFixture fx(rng);
    const int m = fx.basis.size();
    const auto st = random_state(rng, m, 0.6);
    auto rejected = random_rejected(rng, 5, m);

    const auto base = said::log_target_interaction(st, rejected, fx.residual, fx.sigma2, fx.nu2,
                                                   fx.su, fx.sv, fx.gram, fx.gram, fx.sigma0);
    std::mt19937 shuffler(5);
    for (int rep = 0; rep < 3; ++rep) {
        std::shuffle(rejected.begin(), rejected.end(), shuffler);
        const auto got = said::log_target_interaction(st, rejected, fx.residual, fx.sigma2,
                                                      fx.nu2, fx.su, fx.sv, fx.gram, fx.gram,
                                                      fx.sigma0);
        CHECK(got.value == doctest::Approx(base.value).epsilon(1e-12));
        CHECK((got.gradient - base.gradient).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("log_target rejects an empty residual") {
    said::Rng rng(101);
    const TargetFixture fx(rng);
    const auto st = random_state(rng, fx.basis.size(), 0.6);
    const Eigen::VectorXd empty(0);
    const Eigen::MatrixXd empty_design(0, fx.basis.size());
    CHECK_THROWS_AS(said::log_target_interaction(st, std::vector<said::CoefficientQuadruple>{},
                                                 empty, fx.sigma2, fx.nu2, empty_design,
                                                 empty_design, fx.gram, fx.gram, fx.sigma0),
                    said::ConfigError);
}
