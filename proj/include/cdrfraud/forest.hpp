#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdrfraud/ingest.hpp"
#include "cdrfraud/tree.hpp"

namespace cdrfraud {

struct ForestConfig {
    int n_trees = 100;
    /// 0 grows each tree until its leaves are pure.
    int max_depth = 0;
    /// Features tried per split; nullopt = ceil(sqrt(p)).
    std::optional<int> feature_subset;
    bool bootstrap = true;
    int min_samples_leaf = 1;
    std::uint64_t seed = 42;
    /// Worker threads for fitting; 0 = hardware concurrency. Does not affect the result.
    unsigned threads = 0;

    void validate(Index n_features) const;
    int resolved_feature_subset(Index n_features) const;
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestConfig config;
    std::vector<std::string> feature_names;

    Index feature_count() const { return static_cast<Index>(feature_names.size()); }
};

/// Tree t draws its bootstrap sample and feature subsets from a stream
/// derived from (seed, t), so the model is independent of scheduling.
ForestModel fit_forest(const Dataset& train, const ForestConfig& config);

/// Mean over trees of the leaf class-1 fraction.
template <typename Derived>
double predict_proba_forest(const ForestModel& model, const Eigen::DenseBase<Derived>& row) {
    if (row.size() != model.feature_count()) {
        throw DimensionError("forest expects " + std::to_string(model.feature_count()) +
                             " features, row has " + std::to_string(row.size()));
    }
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.predict(row);
    return sum / static_cast<double>(model.trees.size());
}

/// Fraud iff the averaged probability is at least 0.5.
template <typename Derived>
int predict_label_forest(const ForestModel& model, const Eigen::DenseBase<Derived>& row) {
    return predict_proba_forest(model, row) >= 0.5 ? kPositive : kNegative;
}

ScoreVector predict_proba_forest(const ForestModel& model, const FeatureMatrix& rows);

/// Draws n row indices with replacement.
std::vector<Index> bootstrap_sample(Index n, Rng& rng);

}  // namespace cdrfraud
