#include "said/simgen.hpp"

#include <cmath>
#include <functional>

#include "said/errors.hpp"
#include "said/rng.hpp"

namespace said {

namespace {

using PairFn = std::function<double(double, double)>;

// One scenario's true surface: intercept, per-exposure main effects, and the
// active pairwise interactions keyed by lexicographic pair index.
struct TrueSurface {
    int p = 0;
    double alpha0 = 0.0;
    std::vector<std::function<double(double)>> mains;   // one per exposure
    std::vector<std::pair<int, PairFn>> interactions;   // (pair index, h_uv)

    double interaction_at(int pair, double xu, double xv) const {
        for (const auto& [k, fn] : interactions) {
            if (k == pair) return fn(xu, xv);
        }
        return 0.0;
    }

    double eval(const Eigen::RowVectorXd& x) const {
        double h = alpha0;
        for (int j = 0; j < p; ++j) h += mains[j](x[j]);
        for (const auto& [k, fn] : interactions) {
            const auto [u, v] = all_pairs(p)[k];
            h += fn(x[u], x[v]);
        }
        return h;
    }
};

TrueSurface two_exposure_surface(ScenarioKind kind, double gamma0) {
    TrueSurface s;
    s.p = 2;
    s.alpha0 = 0.5;
    if (kind == ScenarioKind::SN) {
        s.mains = {[](double x) { return x * x; }, [](double x) { return x * x; }};
        s.interactions.emplace_back(0, [gamma0](double a, double b) {
            return gamma0 * a * a * b * b;
        });
    } else {  // QR and MIS share linear main effects
        s.mains = {[](double x) { return x; }, [](double x) { return x; }};
        if (kind == ScenarioKind::QR) {
            s.interactions.emplace_back(0, [gamma0](double a, double b) {
                return gamma0 * a * b;
            });
        } else {
            s.interactions.emplace_back(0, [gamma0](double a, double b) {
                return gamma0 * (a * b - 2.0 * a * a * b * b);
            });
        }
    }
    return s;
}

TrueSurface ten_exposure_surface() {
    TrueSurface s;
    s.p = 10;
    s.alpha0 = -5.0 / 6.0;
    s.mains.assign(10, [](double) { return 0.0; });
    s.mains[0] = [](double x) { return x + x * x; };
    s.mains[1] = [](double x) { return 0.5 * x; };
    s.mains[6] = [](double x) { return x * x * x; };

    const auto pair = [](int u, int v) { return pair_index(u, v, 10); };
    // Five synergistic interactions.
    s.interactions.emplace_back(pair(0, 1), [](double a, double b) {
        return 4.0 * (a - a * a) * b;
    });
    s.interactions.emplace_back(pair(0, 8), [](double a, double b) { return a * b; });
    s.interactions.emplace_back(pair(1, 2), [](double a, double b) {
        return a * a * b * b;
    });
    s.interactions.emplace_back(pair(2, 7), [](double a, double b) { return a * b; });
    s.interactions.emplace_back(pair(4, 9), [](double a, double b) {
        return (std::exp(a) - 1.0) * b / (std::exp(1.0) - 1.0);
    });
    // Five antagonistic interactions.
    s.interactions.emplace_back(pair(0, 2), [](double a, double b) { return -a * b; });
    s.interactions.emplace_back(pair(1, 4), [](double a, double b) {
        return -a * a * b;
    });
    s.interactions.emplace_back(pair(3, 8), [](double a, double b) {
        return -(27.0 / 4.0) * a * a * (1.0 - a) * b;
    });
    s.interactions.emplace_back(pair(6, 9), [](double a, double b) { return -a * b; });
    s.interactions.emplace_back(pair(7, 8), [](double a, double b) {
        return -a * b * b;
    });
    return s;
}

// Sign pattern of one interaction on a fine midpoint grid.
TruthClass sign_class(const PairFn& fn, int grid = 100) {
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double h = fn((i + 0.5) / grid, (j + 0.5) / grid);
            if (h > 1e-12) has_pos = true;
            if (h < -1e-12) has_neg = true;
        }
    }
    if (has_pos && has_neg) return TruthClass::Mixed;
    if (has_pos) return TruthClass::Synergistic;
    if (has_neg) return TruthClass::Antagonistic;
    return TruthClass::Null;
}

}  // namespace

std::string to_string(TruthClass c) {
    switch (c) {
        case TruthClass::Null: return "null";
        case TruthClass::Synergistic: return "synergistic";
        case TruthClass::Antagonistic: return "antagonistic";
        case TruthClass::Mixed: return "mixed";
    }
    return "null";
}

namespace {

TrueSurface scenario_surface(const Scenario& scenario) {
    return scenario.kind == ScenarioKind::P10
               ? ten_exposure_surface()
               : two_exposure_surface(scenario.kind, scenario.gamma0);
}

void check_design(const TrueSurface& surface, const Eigen::MatrixXd& x) {
    if (x.cols() != surface.p) {
        throw ConfigError("scenario surface: design has the wrong number of exposures");
    }
}

}  // namespace

Eigen::VectorXd true_surface(const Scenario& scenario, const Eigen::MatrixXd& x) {
    const TrueSurface surface = scenario_surface(scenario);
    check_design(surface, x);
    Eigen::VectorXd h(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) h[i] = surface.eval(x.row(i));
    return h;
}

Eigen::MatrixXd true_interactions(const Scenario& scenario, const Eigen::MatrixXd& x) {
    const TrueSurface surface = scenario_surface(scenario);
    check_design(surface, x);
    const auto pairs = all_pairs(surface.p);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.rows(), static_cast<Eigen::Index>(pairs.size()));
    for (const auto& [k, fn] : surface.interactions) {
        const auto [u, v] = pairs[k];
        for (Eigen::Index i = 0; i < x.rows(); ++i) h(i, k) = fn(x(i, u), x(i, v));
    }
    return h;
}

std::pair<Dataset, GroundTruth> generate(const Scenario& scenario) {
    Scenario sc = scenario;
    if (sc.kind == ScenarioKind::P10) {
        sc.sigma0_sq = 0.2;
        sc.n_train = 1000;
        sc.n_test = 500;
    }
    if (!(sc.sigma0_sq > 0.0)) throw ConfigError("generate: noise variance must be positive");
    if (sc.n_train < 2 || sc.n_test < 1) {
        throw ConfigError("generate: need at least 2 training and 1 test point");
    }

    const TrueSurface surface = scenario_surface(sc);
    const int p = surface.p;
    const int npairs = static_cast<int>(all_pairs(p).size());

    Rng rng(sc.seed);
    const auto draw_design = [&](int n) {
        Eigen::MatrixXd x(n, p);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) x(i, j) = rng.uniform();
        }
        return x;
    };
    const Eigen::MatrixXd x_train = draw_design(sc.n_train);
    const Eigen::MatrixXd x_test = draw_design(sc.n_test);

    GroundTruth truth;
    truth.x_test = x_test;
    truth.surface_train = true_surface(sc, x_train);
    truth.surface_test = true_surface(sc, x_test);
    truth.interactions_train = true_interactions(sc, x_train);
    truth.interactions_test = true_interactions(sc, x_test);
    truth.classes.assign(npairs, TruthClass::Null);
    for (const auto& [k, fn] : surface.interactions) truth.classes[k] = sign_class(fn);

    Dataset data;
    data.x = x_train;
    data.z = Eigen::MatrixXd(sc.n_train, 0);
    data.y = truth.surface_train;
    const double sd = std::sqrt(sc.sigma0_sq);
    for (int i = 0; i < sc.n_train; ++i) data.y[i] += sd * rng.normal();
    data.y_scale = 1.0;
    return {data, truth};
}

double rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
    if (estimate.size() != truth.size() || estimate.size() == 0) {
        throw ConfigError("rmse: length mismatch or empty input");
    }
    return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(truth.size()));
}

TruthClass called_class(const PairSelection& pair) {
    if (!(pair.pip > 0.5)) return TruthClass::Null;
    const double p_null = 1.0 - pair.pip;
    if (pair.psp >= pair.pap && pair.psp >= p_null) return TruthClass::Synergistic;
    if (pair.pap >= p_null) return TruthClass::Antagonistic;
    return TruthClass::Null;
}

ClassificationErrors classification_errors(const SelectionReport& report,
                                           const GroundTruth& truth) {
    if (report.pairs.size() != truth.classes.size()) {
        throw ConfigError("classification_errors: report and truth pair sets differ");
    }
    const TruthClass order[3] = {TruthClass::Synergistic, TruthClass::Antagonistic,
                                 TruthClass::Null};
    ClassificationErrors err;
    err.truth_count.setZero();
    err.miss_count.setZero();
    err.other_count.setZero();
    err.false_count.setZero();
    for (std::size_t k = 0; k < report.pairs.size(); ++k) {
        const TruthClass called = called_class(report.pairs[k]);
        const TruthClass actual = truth.classes[k];
        for (int c = 0; c < 3; ++c) {
            if (actual == order[c]) {
                err.truth_count[c] += 1;
                if (called != order[c]) err.miss_count[c] += 1;
            } else {
                err.other_count[c] += 1;
                if (called == order[c]) err.false_count[c] += 1;
            }
        }
    }
    for (int c = 0; c < 3; ++c) {
        err.case1[c] = err.truth_count[c] > 0
                           ? static_cast<double>(err.miss_count[c]) / err.truth_count[c]
                           : std::numeric_limits<double>::quiet_NaN();
        err.case2[c] = err.other_count[c] > 0
                           ? static_cast<double>(err.false_count[c]) / err.other_count[c]
                           : std::numeric_limits<double>::quiet_NaN();
    }
    return err;
}

std::vector<PriorDrawSummary> prior_draw_study(const std::vector<double>& kappa_values,
                                               int n_draws, const ModelBases& bases,
                                               std::uint64_t seed, double threshold,
                                               int grid_size) {
    if (n_draws < 1) throw ConfigError("prior_draw_study: need at least one draw");
    if (grid_size < 2) throw ConfigError("prior_draw_study: grid too coarse");
    const int m = bases.sigma0.dimension;
    Eigen::VectorXd mids(grid_size);
    for (int g = 0; g < grid_size; ++g) mids[g] = (g + 0.5) / grid_size;
    const Eigen::MatrixXd design = eval_design(bases.interaction_basis, mids);
    const double cell = 1.0 / (static_cast<double>(grid_size) * grid_size);

    std::vector<PriorDrawSummary> out;
    for (std::size_t ki = 0; ki < kappa_values.size(); ++ki) {
        const double kappa = kappa_values[ki];
        if (kappa < 0.0) throw ConfigError("prior_draw_study: kappa must be non-negative");
        Rng rng(Rng(seed).split(ki));
        PriorDrawSummary summary;
        summary.kappa = kappa;
        summary.draws = n_draws;
        int below = 0;
        double max_w = 0.0;
        for (int t = 0; t < n_draws; ++t) {
            // Rejection construction of one prior draw with unit scales:
            // propose the quadruple from the smooth base prior and accept
            // with probability exp(-kappa * penalty).
            InteractionState st;
            st.tau1 = st.tau2 = 1.0;
            st.kappa = kappa;
            long attempts = 0;
            for (;;) {
                if (++attempts > 1000000) {
                    throw NumericError("prior_draw_study: rejection sampler stalled at kappa=" +
                                       std::to_string(kappa));
                }
                st.theta1 = bases.sigma0_chol * rng.normal_vec(m);
                st.phi1 = bases.sigma0_chol * rng.normal_vec(m);
                st.theta2 = bases.sigma0_chol * rng.normal_vec(m);
                st.phi2 = bases.sigma0_chol * rng.normal_vec(m);
                const double q = penalty_Q(st, bases.gram, bases.gram);
                if (rng.uniform() < std::exp(-kappa * q)) break;
            }
            const Eigen::ArrayXd a1 = (design * st.theta1).array().square();
            const Eigen::ArrayXd b1 = (design * st.phi1).array().square();
            const Eigen::ArrayXd a2 = (design * st.theta2).array().square();
            const Eigen::ArrayXd b2 = (design * st.phi2).array().square();
            double pos = 0.0, neg = 0.0;
            for (int i = 0; i < grid_size; ++i) {
                for (int j = 0; j < grid_size; ++j) {
                    const double h = a1[i] * b1[j] - a2[i] * b2[j];
                    if (h > 0.0) pos += h;
                    else neg -= h;
                }
            }
            const double w = (pos * cell) * (neg * cell);
            if (w < threshold) ++below;
            max_w = std::max(max_w, w);
        }
        summary.proportion_below = static_cast<double>(below) / n_draws;
        summary.max_w = max_w;
        out.push_back(summary);
    }
    return out;
}

}  // namespace said
