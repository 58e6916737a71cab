#include "said/selection.hpp"

#include <cmath>

#include "said/errors.hpp"
#include "said/model.hpp"

namespace said {

namespace {

// Accumulate the positive and negative parts of one surface sample; the
// caller multiplies by the cell area afterwards.
void accumulate_parts(double h, double& pos, double& neg) {
    if (h > 0.0) {
        pos += h;
    } else {
        neg -= h;
    }
}

}  // namespace

std::string to_string(EvidenceLabel label) {
    switch (label) {
        case EvidenceLabel::None: return "none";
        case EvidenceLabel::BarelyWorthMention: return "barely_worth_mention";
        case EvidenceLabel::WeakToModerate: return "weak_to_moderate";
        case EvidenceLabel::Strong: return "strong";
        case EvidenceLabel::VeryStrong: return "very_strong";
    }
    return "none";
}

EvidenceLabel evidence_label(double pip) {
    if (pip >= 0.99) return EvidenceLabel::VeryStrong;
    if (pip >= 0.95) return EvidenceLabel::Strong;
    if (pip >= 0.75) return EvidenceLabel::WeakToModerate;
    if (pip > 0.5) return EvidenceLabel::BarelyWorthMention;
    return EvidenceLabel::None;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> integrate_pos_neg(const Eigen::MatrixXd& h_grid) {
    if (h_grid.rows() == 0 || h_grid.cols() == 0) {
        throw ConfigError("integrate_pos_neg: empty surface sample set");
    }
    const double cell = 1.0 / static_cast<double>(h_grid.cols());
    Eigen::VectorXd pos(h_grid.rows()), neg(h_grid.rows());
    for (Eigen::Index t = 0; t < h_grid.rows(); ++t) {
        double p = 0.0, n = 0.0;
        for (Eigen::Index g = 0; g < h_grid.cols(); ++g) {
            accumulate_parts(h_grid(t, g), p, n);
        }
        pos[t] = p * cell;
        neg[t] = n * cell;
    }
    return {pos, neg};
}

PairSelection classify_pair(const Eigen::VectorXd& pos, const Eigen::VectorXd& neg, double c0) {
    if (c0 <= 0.0) throw ConfigError("classify: integral cutoff must be positive");
    if (pos.size() == 0 || pos.size() != neg.size()) {
        throw ConfigError("classify: empty or mismatched integral sample set");
    }
    const auto draws = pos.size();
    // Counts over the four cells of {positive part above c0} x {negative part above c0}.
    long only_pos = 0, only_neg = 0, both = 0;
    for (Eigen::Index t = 0; t < draws; ++t) {
        const bool p_above = pos[t] > c0;
        const bool n_above = neg[t] > c0;
        if (p_above && n_above) ++both;
        else if (p_above) ++only_pos;
        else if (n_above) ++only_neg;
    }
    PairSelection sel;
    sel.pip = static_cast<double>(only_pos + only_neg + both) / static_cast<double>(draws);
    sel.psp = static_cast<double>(only_pos) / static_cast<double>(draws);
    sel.pap = static_cast<double>(only_neg) / static_cast<double>(draws);
    sel.mean_pos = pos.mean();
    sel.mean_neg = neg.mean();
    sel.label = evidence_label(sel.pip);
    return sel;
}

SelectionReport classify(const PosteriorSamples& samples, const SplineBasis& interaction_basis,
                         double c0, int grid_size) {
    if (c0 <= 0.0) throw ConfigError("classify: integral cutoff must be positive");
    if (grid_size < 1) throw ConfigError("classify: grid size must be at least 1");
    if (samples.kept() <= 0) throw ConfigError("classify: no kept posterior draws");
    if (samples.m != static_cast<int>(interaction_basis.size())) {
        throw ConfigError("classify: interaction basis size does not match the posterior samples");
    }

    const int draws = samples.kept();
    const int grid = grid_size;
    Eigen::VectorXd mids(grid);
    for (int g = 0; g < grid; ++g) mids[g] = (g + 0.5) / grid;
    const Eigen::MatrixXd design = eval_design(interaction_basis, mids);   // grid x m
    const double cell = 1.0 / (static_cast<double>(grid) * static_cast<double>(grid));

    SelectionReport report;
    report.cutoff = c0;
    report.grid_size = grid;
    for (const auto& [u, v] : all_pairs(samples.p)) {
        const int pair = pair_index(u, v, samples.p);
        Eigen::VectorXd pos(draws), neg(draws);
        for (int t = 0; t < draws; ++t) {
            const InteractionState st = samples.interaction_at(t, pair);
            // The surface factorizes over the axes, so only the per-axis
            // squared spline fits are needed, not an n x m design per draw.
            const Eigen::ArrayXd a1 = (design * st.theta1).array().square();
            const Eigen::ArrayXd b1 = (design * st.phi1).array().square();
            const Eigen::ArrayXd a2 = (design * st.theta2).array().square();
            const Eigen::ArrayXd b2 = (design * st.phi2).array().square();
            double p = 0.0, n = 0.0;
            for (int i = 0; i < grid; ++i) {
                for (int j = 0; j < grid; ++j) {
                    accumulate_parts(a1[i] * b1[j] - a2[i] * b2[j], p, n);
                }
            }
            pos[t] = p * cell;
            neg[t] = n * cell;
        }
        PairSelection sel = classify_pair(pos, neg, c0);
        sel.u = u;
        sel.v = v;
        report.pairs.push_back(sel);
    }
    return report;
}

}  // namespace said
