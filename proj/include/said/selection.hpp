#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "said/sampler.hpp"
#include "said/splines.hpp"

namespace said {

// Rule-of-thumb weight-of-evidence bands on the posterior interaction probability.
enum class EvidenceLabel { None, BarelyWorthMention, WeakToModerate, Strong, VeryStrong };

std::string to_string(EvidenceLabel label);

// Band assignment: (0.5, 0.75) barely worth a mention, [0.75, 0.95) weak to
// moderate, [0.95, 0.99) strong, >= 0.99 very strong, otherwise none.
EvidenceLabel evidence_label(double pip);

// Posterior classification of one exposure pair.  pip is the probability that
// at least one signed part of the interaction surface has integral above the
// cutoff; psp / pap are the probabilities that only the positive / only the
// negative part does.
struct PairSelection {
    int u = 0, v = 0;
    double pip = 0.0;
    double psp = 0.0;
    double pap = 0.0;
    double mean_pos = 0.0;   // posterior mean of the positive-part integral
    double mean_neg = 0.0;   // posterior mean of the negative-part integral
    EvidenceLabel label = EvidenceLabel::None;
};

struct SelectionReport {
    double cutoff = 0.0;
    int grid_size = 0;
    std::vector<PairSelection> pairs;   // lexicographic (u,v) order
};

// Midpoint-rule integrals of the positive and negative parts of each surface.
// h_grid holds one surface per row, evaluated at the G*G cell midpoints of a
// uniform grid on [0,1]^2 (any interleaving of the cells is fine).  Returns
// one (integral of h^+, integral of h^-) pair per row.
std::pair<Eigen::VectorXd, Eigen::VectorXd> integrate_pos_neg(const Eigen::MatrixXd& h_grid);

// Classify one pair from per-draw positive/negative-part integrals.  The draw
// is null when both integrals are <= c0, synergistic-only when just the
// positive part exceeds c0, antagonistic-only when just the negative part does.
PairSelection classify_pair(const Eigen::VectorXd& pos, const Eigen::VectorXd& neg, double c0);

// Full post-processing pass: evaluate every pair's interaction surface on a
// grid_size x grid_size midpoint grid for every kept draw and classify against
// the integral cutoff c0.  The cutoff is calibrated for responses standardized
// to unit variance before fitting.
SelectionReport classify(const PosteriorSamples& samples, const SplineBasis& interaction_basis,
                         double c0 = 0.01, int grid_size = 50);

}  // namespace said
