#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cdrfraud/ingest.hpp"
#include "cdrfraud/tree.hpp"

namespace cdrfraud {

struct BoostConfig {
    int n_rounds = 100;
    double learning_rate = 0.3;
    int max_depth = 6;
    double lambda = 1.0;
    double gamma = 0.0;
    /// Initial probability; the starting margin is its logit.
    double base_score = 0.5;
    int min_samples_leaf = 1;
    std::uint64_t seed = 42;

    void validate() const;
    double base_margin() const { return std::log(base_score / (1.0 - base_score)); }
};

struct GradHess {
    double g = 0.0;
    double h = 0.0;
};

template <typename Scalar>
Scalar sigmoid(Scalar margin) {
    return Scalar(1) / (Scalar(1) + std::exp(-margin));
}

/// Derivatives of the logistic loss at `margin`; h is floored at 1e-16.
GradHess logistic_grad_hess(double margin, int label);

/// log(1 + e^m) - y*m, evaluated without overflow.
double logistic_loss(double margin, int label);

/// γ·T + ½·λ·Σw² over the leaves of a boosted tree.
double regularization_omega(const Tree& tree, double lambda, double gamma);

struct BoostedModel {
    /// Leaf values already include the learning rate.
    std::vector<Tree> trees;
    BoostConfig config;
    std::vector<std::string> feature_names;
    /// objective_trace[0] is the loss at the base margin; entry k adds round
    /// k's tree: Σ loss + Σ Ω over the trees so far.
    std::vector<double> objective_trace;

    Index feature_count() const { return static_cast<Index>(feature_names.size()); }
};

/// Newton boosting on the logistic loss. Stops early when a round finds no split.
BoostedModel fit_boosted(const Dataset& train, const BoostConfig& config);

template <typename Derived>
double predict_margin_boosted(const BoostedModel& model, const Eigen::DenseBase<Derived>& row) {
    if (row.size() != model.feature_count()) {
        throw DimensionError("boosted model expects " + std::to_string(model.feature_count()) +
                             " features, row has " + std::to_string(row.size()));
    }
    double margin = model.config.base_margin();
    for (const auto& tree : model.trees) margin += tree.predict(row);
    return margin;
}

template <typename Derived>
double predict_proba_boosted(const BoostedModel& model, const Eigen::DenseBase<Derived>& row) {
    return sigmoid(predict_margin_boosted(model, row));
}

template <typename Derived>
int predict_label_boosted(const BoostedModel& model, const Eigen::DenseBase<Derived>& row) {
    return predict_proba_boosted(model, row) >= 0.5 ? kPositive : kNegative;
}

ScoreVector predict_proba_boosted(const BoostedModel& model, const FeatureMatrix& rows);

}  // namespace cdrfraud
