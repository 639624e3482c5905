#include "cdrfraud/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace cdrfraud {

void ForestConfig::validate(Index n_features) const {
    if (n_trees < 1) throw ConfigError("forest needs at least one tree");
    if (max_depth < 0) throw ConfigError("forest max_depth must be nonnegative");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
    if (feature_subset && (*feature_subset < 1 || *feature_subset > n_features)) {
        throw ConfigError("feature_subset must lie in [1, " + std::to_string(n_features) + "]");
    }
}

int ForestConfig::resolved_feature_subset(Index n_features) const {
    if (feature_subset) return *feature_subset;
    return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features)))));
}

std::vector<Index> bootstrap_sample(Index n, Rng& rng) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    std::sort(rows.begin(), rows.end());
    return rows;
}

ForestModel fit_forest(const Dataset& train, const ForestConfig& config) {
    config.validate(train.cols());
    if (train.rows() == 0) throw Error("cannot fit a forest on an empty dataset");
    if (train.count(kPositive) == 0 || train.count(kNegative) == 0) {
        throw Error("forest training data must contain both classes");
    }

    TreeConfig tree_config;
    if (config.max_depth > 0) tree_config.max_depth = config.max_depth;
    tree_config.min_samples_leaf = config.min_samples_leaf;
    tree_config.criterion = SplitCriterion::gini;
    tree_config.feature_subset = config.resolved_feature_subset(train.cols());

    ForestModel model;
    model.config = config;
    model.feature_names = train.feature_names;
    model.trees.resize(static_cast<std::size_t>(config.n_trees));

    std::vector<Index> all_rows(static_cast<std::size_t>(train.rows()));
    std::iota(all_rows.begin(), all_rows.end(), Index{0});

    auto fit_one = [&](std::size_t t) {
        Rng rng = Rng::derive(config.seed, t);
        const auto rows = config.bootstrap ? bootstrap_sample(train.rows(), rng) : all_rows;
        model.trees[t] = fit_tree(train.features, train.labels, rows, tree_config, rng);
    };

    unsigned workers = config.threads ? config.threads : std::thread::hardware_concurrency();
    workers = std::clamp(workers, 1u, static_cast<unsigned>(config.n_trees));
    if (workers == 1) {
        for (std::size_t t = 0; t < model.trees.size(); ++t) fit_one(t);
        return model;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < model.trees.size(); t = next++) {
                    try {
                        fit_one(t);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return model;
}

ScoreVector predict_proba_forest(const ForestModel& model, const FeatureMatrix& rows) {
    ScoreVector out(rows.rows());
    for (Index i = 0; i < rows.rows(); ++i) out(i) = predict_proba_forest(model, rows.row(i));
    return out;
}

}  // namespace cdrfraud
