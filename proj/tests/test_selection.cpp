// Posterior interaction classification: signed-part integrals on a midpoint
// grid, cutoff-based pair probabilities, and evidence bands.
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "said/errors.hpp"
#include "said/model.hpp"
#include "said/rng.hpp"
#include "said/sampler.hpp"
#include "said/selection.hpp"
#include "said/splines.hpp"

using said::EvidenceLabel;

namespace {

// Fine-grid midpoint oracle for the positive/negative parts of an analytic
// surface; independent of the library's accumulation code.
std::pair<double, double> fine_grid_pos_neg(const std::function<double(double, double)>& f,
                                            int grid) {
    double pos = 0.0, neg = 0.0;
    const double cell = 1.0 / (static_cast<double>(grid) * static_cast<double>(grid));
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double h = f((i + 0.5) / grid, (j + 0.5) / grid);
            if (h > 0.0) pos += h;
            else neg -= h;
        }
    }
    return {pos * cell, neg * cell};
}

// Row of surface values at the G x G cell midpoints, row-major over the grid.
Eigen::RowVectorXd surface_row(const std::function<double(double, double)>& f, int grid) {
    Eigen::RowVectorXd row(grid * grid);
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            row[i * grid + j] = f((i + 0.5) / grid, (j + 0.5) / grid);
        }
    }
    return row;
}

// Minimal posterior-sample container for post-processing tests: only the
// dimensions and per-pair coefficient draws that classification reads.
said::PosteriorSamples make_samples(int p, int m, int draws) {
    said::PosteriorSamples s;
    s.iterations = draws;
    s.burnin = 0;
    s.n = 0;
    s.p = p;
    s.q = 0;
    s.m = m;
    s.d = m;
    const int npairs = p * (p - 1) / 2;
    s.theta1 = Eigen::MatrixXd::Zero(draws, npairs * m);
    s.phi1 = Eigen::MatrixXd::Zero(draws, npairs * m);
    s.theta2 = Eigen::MatrixXd::Zero(draws, npairs * m);
    s.phi2 = Eigen::MatrixXd::Zero(draws, npairs * m);
    s.tau1 = Eigen::MatrixXd::Ones(draws, npairs);
    s.tau2 = Eigen::MatrixXd::Ones(draws, npairs);
    s.kappa = Eigen::MatrixXd::Ones(draws, npairs);
    return s;
}

void set_pair_draw(said::PosteriorSamples& s, int draw, int pair,
                   const Eigen::VectorXd& theta1, const Eigen::VectorXd& phi1,
                   const Eigen::VectorXd& theta2, const Eigen::VectorXd& phi2) {
    const int m = s.m;
    s.theta1.row(draw).segment(pair * m, m) = theta1.transpose();
    s.phi1.row(draw).segment(pair * m, m) = phi1.transpose();
    s.theta2.row(draw).segment(pair * m, m) = theta2.transpose();
    s.phi2.row(draw).segment(pair * m, m) = phi2.transpose();
}

}  // namespace

TEST_CASE("signed-part integrals match analytic values and a fine-grid oracle") {
    const int grid = 50;

    // Identically zero surface integrates to exactly (0, 0).
    Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(3, grid * grid);
    auto [zp, zn] = said::integrate_pos_neg(zeros);
    for (int t = 0; t < 3; ++t) {
        CHECK(zp[t] == 0.0);
        CHECK(zn[t] == 0.0);
    }

    // Nonnegative product surface: integral of x1*x2 over the unit square is 1/4.
    auto bilinear = [](double a, double b) { return a * b; };
    Eigen::MatrixXd hb = surface_row(bilinear, grid);
    auto [bp, bn] = said::integrate_pos_neg(hb);
    CHECK(std::abs(bp[0] - 0.25) < 1e-3);
    CHECK(bn[0] == 0.0);

    // Sign-changing surface x1*x2 - 2*(x1*x2)^2: both parts are strictly
    // positive and must agree with a much finer reference grid.
    auto mixed = [](double a, double b) { return a * b - 2.0 * a * a * b * b; };
    Eigen::MatrixXd hm = surface_row(mixed, grid);
    auto [mp, mn] = said::integrate_pos_neg(hm);
    auto [op, on] = fine_grid_pos_neg(mixed, 500);
    CHECK(mp[0] > 0.0);
    CHECK(mn[0] > 0.0);
    CHECK(std::abs(mp[0] - op) < 1e-3);
    CHECK(std::abs(mn[0] - on) < 1e-3);

    // Batched rows reproduce the single-row results.
    Eigen::MatrixXd stacked(2, grid * grid);
    stacked.row(0) = hb;
    stacked.row(1) = hm;
    auto [sp, sn] = said::integrate_pos_neg(stacked);
    CHECK(sp[0] == bp[0]);
    CHECK(sn[1] == mn[0]);

    CHECK_THROWS_AS(said::integrate_pos_neg(Eigen::MatrixXd(0, 4)), said::ConfigError);
    CHECK_THROWS_AS(said::integrate_pos_neg(Eigen::MatrixXd(4, 0)), said::ConfigError);
}

TEST_CASE("pair classification matches direct counting") {
    const double c0 = 0.01;

    // Every draw has a clearly positive part and no negative part.
    Eigen::VectorXd pos = Eigen::VectorXd::Constant(200, 0.5);
    Eigen::VectorXd neg = Eigen::VectorXd::Zero(200);
    said::PairSelection sel = said::classify_pair(pos, neg, c0);
    CHECK(sel.pip == 1.0);
    CHECK(sel.psp == 1.0);
    CHECK(sel.pap == 0.0);
    CHECK(sel.mean_pos == doctest::Approx(0.5));
    CHECK(sel.mean_neg == 0.0);
    CHECK(sel.label == EvidenceLabel::VeryStrong);

    // Every draw below the cutoff on both sides.
    sel = said::classify_pair(Eigen::VectorXd::Constant(50, 0.004),
                              Eigen::VectorXd::Constant(50, 0.009), c0);
    CHECK(sel.pip == 0.0);
    CHECK(sel.psp == 0.0);
    CHECK(sel.pap == 0.0);
    CHECK(sel.label == EvidenceLabel::None);

    // 60 of 100 draws exceed the cutoff on the positive side only.
    pos = Eigen::VectorXd::Zero(100);
    neg = Eigen::VectorXd::Zero(100);
    pos.head(60).setConstant(0.2);
    sel = said::classify_pair(pos, neg, c0);
    CHECK(sel.pip == 0.6);
    CHECK(sel.psp == 0.6);
    CHECK(sel.pap == 0.0);
    CHECK(sel.label == EvidenceLabel::BarelyWorthMention);

    // A draw sitting exactly at the cutoff counts as null (strict exceedance).
    sel = said::classify_pair(Eigen::VectorXd::Constant(10, c0),
                              Eigen::VectorXd::Constant(10, c0), c0);
    CHECK(sel.pip == 0.0);
}

TEST_CASE("probability identity and bounds hold exactly on random draws") {
    std::mt19937 gen(42);
    std::uniform_real_distribution<double> unif(0.0, 0.03);
    const double c0 = 0.01;
    for (int rep = 0; rep < 20; ++rep) {
        const int draws = 1 + static_cast<int>(gen() % 400);
        Eigen::VectorXd pos(draws), neg(draws);
        for (int t = 0; t < draws; ++t) {
            pos[t] = unif(gen);
            neg[t] = unif(gen);
        }
        long only_pos = 0, only_neg = 0, both = 0;
        for (int t = 0; t < draws; ++t) {
            const bool pa = pos[t] > c0, na = neg[t] > c0;
            if (pa && na) ++both;
            else if (pa) ++only_pos;
            else if (na) ++only_neg;
        }
        const said::PairSelection sel = said::classify_pair(pos, neg, c0);
        // pip = psp + pap + P(both parts exceed) as an identity on counts.
        CHECK(sel.pip == static_cast<double>(only_pos + only_neg + both) / draws);
        CHECK(sel.psp == static_cast<double>(only_pos) / draws);
        CHECK(sel.pap == static_cast<double>(only_neg) / draws);
        CHECK(sel.psp + sel.pap <= sel.pip + 1e-12);
        CHECK(sel.pip >= 0.0);
        CHECK(sel.pip <= 1.0);
    }
}

TEST_CASE("evidence labels follow the band edges") {
    CHECK(said::evidence_label(0.0) == EvidenceLabel::None);
    CHECK(said::evidence_label(0.5) == EvidenceLabel::None);
    CHECK(said::evidence_label(0.500001) == EvidenceLabel::BarelyWorthMention);
    CHECK(said::evidence_label(0.7499) == EvidenceLabel::BarelyWorthMention);
    CHECK(said::evidence_label(0.75) == EvidenceLabel::WeakToModerate);
    CHECK(said::evidence_label(0.9499) == EvidenceLabel::WeakToModerate);
    CHECK(said::evidence_label(0.95) == EvidenceLabel::Strong);
    CHECK(said::evidence_label(0.9899) == EvidenceLabel::Strong);
    CHECK(said::evidence_label(0.99) == EvidenceLabel::VeryStrong);
    CHECK(said::evidence_label(1.0) == EvidenceLabel::VeryStrong);
    CHECK(said::to_string(EvidenceLabel::WeakToModerate) == "weak_to_moderate");
}

TEST_CASE("raising the cutoff never raises the interaction probability") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> unif(0.0, 0.05);
    Eigen::VectorXd pos(300), neg(300);
    for (int t = 0; t < 300; ++t) {
        pos[t] = unif(gen);
        neg[t] = unif(gen);
    }
    double prev = 1.0;
    for (double c0 : {0.005, 0.01, 0.02, 0.03, 0.04, 0.06}) {
        const double pip = said::classify_pair(pos, neg, c0).pip;
        CHECK(pip <= prev + 1e-15);
        prev = pip;
    }
}

TEST_CASE("classification of crafted posterior draws recovers each pair's type") {
    const auto bases = said::make_bases(3, 4, 6, said::BasisConstraint::Origin);
    const int m = static_cast<int>(bases.interaction_basis.size());
    const int p = 3, draws = 40;
    said::PosteriorSamples samples = make_samples(p, m, draws);

    // Pair (0,1): purely synergistic surface, pair (1,2): purely antagonistic,
    // pair (0,2): identically zero.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
    for (int t = 0; t < draws; ++t) {
        set_pair_draw(samples, t, said::pair_index(0, 1, p), ones, ones, zero, zero);
        set_pair_draw(samples, t, said::pair_index(1, 2, p), zero, zero, 0.5 * ones, ones);
    }

    const double c0 = 0.01;
    const int grid = 50;
    const said::SelectionReport report = said::classify(samples, bases.interaction_basis, c0, grid);
    REQUIRE(report.pairs.size() == 3);
    CHECK(report.cutoff == c0);
    CHECK(report.grid_size == grid);

    const said::PairSelection& syn = report.pairs[0];
    CHECK(syn.u == 0);
    CHECK(syn.v == 1);
    CHECK(syn.pip == 1.0);
    CHECK(syn.psp == 1.0);
    CHECK(syn.pap == 0.0);
    CHECK(syn.mean_neg == 0.0);
    CHECK(syn.mean_pos > c0);
    CHECK(syn.label == EvidenceLabel::VeryStrong);

    const said::PairSelection& null_pair = report.pairs[1];
    CHECK(null_pair.u == 0);
    CHECK(null_pair.v == 2);
    CHECK(null_pair.pip == 0.0);
    CHECK(null_pair.label == EvidenceLabel::None);

    const said::PairSelection& ant = report.pairs[2];
    CHECK(ant.u == 1);
    CHECK(ant.v == 2);
    CHECK(ant.pap == 1.0);
    CHECK(ant.psp == 0.0);
    CHECK(ant.mean_pos == 0.0);

    // Cross-check the classifier's integrals against explicitly assembled
    // surfaces pushed through the standalone integrator.
    Eigen::VectorXd mids(grid);
    for (int g = 0; g < grid; ++g) mids[g] = (g + 0.5) / grid;
    Eigen::MatrixXd h_grid(draws, grid * grid);
    for (int t = 0; t < draws; ++t) {
        const said::InteractionState st = samples.interaction_at(t, said::pair_index(0, 1, p));
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                Eigen::VectorXd xi(1), xj(1);
                xi << mids[i];
                xj << mids[j];
                h_grid(t, i * grid + j) =
                    said::eval_interaction(st, said::eval_design(bases.interaction_basis, xi),
                                           said::eval_design(bases.interaction_basis, xj))[0];
            }
        }
    }
    auto [pos, neg] = said::integrate_pos_neg(h_grid);
    CHECK(std::abs(pos.mean() - syn.mean_pos) < 1e-12);
    CHECK(std::abs(neg.mean() - syn.mean_neg) < 1e-12);
}

TEST_CASE("classification is invariant to the order of draws") {
    const auto bases = said::make_bases(3, 4, 6, said::BasisConstraint::Origin);
    const int m = static_cast<int>(bases.interaction_basis.size());
    const int p = 2, draws = 60;
    said::PosteriorSamples samples = make_samples(p, m, draws);
    said::Rng rng(314);
    for (int t = 0; t < draws; ++t) {
        // Mix of signal and near-null draws so counts land strictly inside (0,1).
        const double scale = (t % 3 == 0) ? 1e-3 : 1.0;
        set_pair_draw(samples, t, 0, scale * rng.normal_vec(m), scale * rng.normal_vec(m),
                      scale * rng.normal_vec(m), scale * rng.normal_vec(m));
    }
    const said::SelectionReport base = said::classify(samples, bases.interaction_basis, 0.01, 20);

    std::vector<int> perm(draws);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(99));
    said::PosteriorSamples shuffled = samples;
    for (int t = 0; t < draws; ++t) {
        shuffled.theta1.row(t) = samples.theta1.row(perm[t]);
        shuffled.phi1.row(t) = samples.phi1.row(perm[t]);
        shuffled.theta2.row(t) = samples.theta2.row(perm[t]);
        shuffled.phi2.row(t) = samples.phi2.row(perm[t]);
    }
    const said::SelectionReport again = said::classify(shuffled, bases.interaction_basis, 0.01, 20);

    REQUIRE(base.pairs.size() == again.pairs.size());
    CHECK(base.pairs[0].pip == again.pairs[0].pip);
    CHECK(base.pairs[0].psp == again.pairs[0].psp);
    CHECK(base.pairs[0].pap == again.pairs[0].pap);
    CHECK(base.pairs[0].pip > 0.0);
    CHECK(base.pairs[0].pip < 1.0);
    CHECK(base.pairs[0].mean_pos == doctest::Approx(again.pairs[0].mean_pos).epsilon(1e-12));
    CHECK(base.pairs[0].mean_neg == doctest::Approx(again.pairs[0].mean_neg).epsilon(1e-12));
}

TEST_CASE("classification rejects invalid inputs") {
    const auto bases = said::make_bases(3, 4, 6, said::BasisConstraint::Origin);
    const int m = static_cast<int>(bases.interaction_basis.size());
    said::PosteriorSamples samples = make_samples(2, m, 5);

    CHECK_THROWS_AS(said::classify(samples, bases.interaction_basis, 0.0, 50), said::ConfigError);
    CHECK_THROWS_AS(said::classify(samples, bases.interaction_basis, -0.01, 50), said::ConfigError);
    CHECK_THROWS_AS(said::classify(samples, bases.interaction_basis, 0.01, 0), said::ConfigError);
    CHECK_THROWS_AS(said::classify_pair(Eigen::VectorXd(), Eigen::VectorXd(), 0.01),
                    said::ConfigError);
    CHECK_THROWS_AS(said::classify_pair(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), 0.01),
                    said::ConfigError);

    said::PosteriorSamples empty = make_samples(2, m, 1);
    empty.iterations = 0;
    CHECK_THROWS_AS(said::classify(empty, bases.interaction_basis, 0.01, 50), said::ConfigError);

    // Basis whose size disagrees with the stored coefficient blocks.
    const auto other = said::make_bases(3, 4, 8, said::BasisConstraint::Origin);
    CHECK_THROWS_AS(said::classify(samples, other.interaction_basis, 0.01, 50), said::ConfigError);
}
