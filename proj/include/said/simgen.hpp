#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "said/model.hpp"
#include "said/sampler.hpp"
#include "said/selection.hpp"

namespace said {

// Simulation scenarios: two-exposure surfaces with a synergistic (SN),
// quadratic-regression (QR), or sign-changing (MIS) interaction, and a
// ten-exposure layout (P10) with five synergistic, five antagonistic, and
// thirty-five null pairs.
enum class ScenarioKind { SN, QR, MIS, P10 };

struct Scenario {
    ScenarioKind kind = ScenarioKind::SN;
    double gamma0 = 1.0;          // interaction strength (ignored by P10)
    double sigma0_sq = 0.1;       // noise variance (P10 fixes 0.2)
    int n_train = 500;            // P10 fixes 1000
    int n_test = 500;
    std::uint64_t seed = 1;
};

// True nature of one pairwise interaction.  Mixed marks a surface with both
// strictly positive and strictly negative regions, which is none of the
// model's three representable types.
enum class TruthClass { Null, Synergistic, Antagonistic, Mixed };

std::string to_string(TruthClass c);

struct GroundTruth {
    Eigen::MatrixXd x_test;              // n_test x p, same design law as training
    Eigen::VectorXd surface_train;       // noiseless H at the training points
    Eigen::VectorXd surface_test;
    Eigen::MatrixXd interactions_train;  // n_train x npairs, true h_uv values
    Eigen::MatrixXd interactions_test;
    std::vector<TruthClass> classes;     // per pair, lexicographic (u,v) order
};

// Draw exposures i.i.d. Uniform[0,1]^p, add N(0, sigma0_sq) noise to the true
// surface, and tabulate the exact ground truth. Deterministic given the seed.
std::pair<Dataset, GroundTruth> generate(const Scenario& scenario);

// Noiseless true surface H(x) of a scenario at arbitrary points (n x p).
Eigen::VectorXd true_surface(const Scenario& scenario, const Eigen::MatrixXd& x);

// True pairwise interaction values at arbitrary points, one column per pair.
Eigen::MatrixXd true_interactions(const Scenario& scenario, const Eigen::MatrixXd& x);

// Root mean squared error between an estimate and the truth.
double rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

// Decision rule applied to one classified pair: synergistic when the
// synergistic-only probability dominates {psp, pap, 1 - pip} and pip > 0.5,
// antagonistic symmetrically, otherwise null.
TruthClass called_class(const PairSelection& pair);

// Per-class misclassification rates for one report against the truth.
// Index order: [0] synergistic, [1] antagonistic, [2] null.  Rates are NaN
// when the corresponding denominator class is empty; the raw counts allow
// pooling across replicates.
struct ClassificationErrors {
    Eigen::Vector3d case1;        // P(called something else | truth is c)
    Eigen::Vector3d case2;        // P(called c | truth is not c)
    Eigen::Vector3i truth_count;  // pairs whose truth is c
    Eigen::Vector3i miss_count;   // truth c but called otherwise
    Eigen::Vector3i other_count;  // pairs whose truth is not c
    Eigen::Vector3i false_count;  // truth not c but called c
};

ClassificationErrors classification_errors(const SelectionReport& report,
                                           const GroundTruth& truth);

// Prior study on a single pair: draw coefficient quadruples from the penalized
// prior (unit scales), and measure W = (integral of h+) * (integral of h-) by
// midpoint quadrature. W vanishes exactly when the draw is synergistic,
// antagonistic, or null, so its distribution shows how the penalty
// concentrates the prior on the three representable types.
struct PriorDrawSummary {
    double kappa = 0.0;
    double proportion_below = 0.0;   // fraction of draws with W < threshold
    double max_w = 0.0;
    int draws = 0;
};

std::vector<PriorDrawSummary> prior_draw_study(const std::vector<double>& kappa_values,
                                               int n_draws, const ModelBases& bases,
                                               std::uint64_t seed, double threshold = 0.001,
                                               int grid_size = 200);

}  // namespace said
