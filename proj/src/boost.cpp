#include "cdrfraud/boost.hpp"

#include <algorithm>
#include <numeric>

namespace cdrfraud {

void BoostConfig::validate() const {
    if (n_rounds < 1) throw ConfigError("boosting needs at least one round");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw ConfigError("learning rate must lie in (0, 1]");
    }
    if (max_depth < 1) throw ConfigError("boosted max_depth must be positive");
    if (lambda < 0.0 || gamma < 0.0) throw ConfigError("lambda and gamma must be nonnegative");
    if (!(base_score > 0.0 && base_score < 1.0)) throw ConfigError("base_score must lie in (0, 1)");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
}

GradHess logistic_grad_hess(double margin, int label) {
    const double p = sigmoid(margin);
    return {p - static_cast<double>(label), std::max(p * (1.0 - p), 1e-16)};
}

double logistic_loss(double margin, int label) {
    return std::max(margin, 0.0) + std::log1p(std::exp(-std::abs(margin))) -
           static_cast<double>(label) * margin;
}

double regularization_omega(const Tree& tree, double lambda, double gamma) {
    if (tree.leaf_kind() != LeafKind::additive_weight) {
        throw Error("regularization_omega applies to boosted trees only");
    }
    const auto w = tree.leaf_values();
    const double squares = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    return gamma * static_cast<double>(w.size()) + 0.5 * lambda * squares;
}

BoostedModel fit_boosted(const Dataset& train, const BoostConfig& config) {
    config.validate();
    if (train.rows() == 0) throw Error("cannot boost on an empty dataset");
    if (train.count(kPositive) == 0 || train.count(kNegative) == 0) {
        throw Error("boosting training data must contain both classes");
    }

    TreeConfig tree_config;
    tree_config.criterion = SplitCriterion::second_order;
    tree_config.max_depth = config.max_depth;
    tree_config.min_samples_leaf = config.min_samples_leaf;
    tree_config.lambda = config.lambda;
    tree_config.gamma = config.gamma;

    BoostedModel model;
    model.config = config;
    model.feature_names = train.feature_names;

    const auto n = static_cast<std::size_t>(train.rows());
    std::vector<double> margin(n, config.base_margin());
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    std::vector<Index> rows(n);
    std::iota(rows.begin(), rows.end(), Index{0});
    Rng rng(config.seed);

    auto total_loss = [&] {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += logistic_loss(margin[i], train.labels(static_cast<Index>(i)));
        return sum;
    };
    double omega_sum = 0.0;
    model.objective_trace.push_back(total_loss());

    for (int round = 0; round < config.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto gh = logistic_grad_hess(margin[i], train.labels(static_cast<Index>(i)));
            grad[i] = gh.g;
            hess[i] = gh.h;
        }
        Tree tree = fit_tree(train.features, train.labels, rows, tree_config, rng,
                             GradientPairs{grad, hess});
        if (tree.leaf_count() < 2) break;
        tree.scale_leaves(config.learning_rate);
        for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(train.features.row(static_cast<Index>(i)));
        omega_sum += regularization_omega(tree, config.lambda, config.gamma);
        model.objective_trace.push_back(total_loss() + omega_sum);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

ScoreVector predict_proba_boosted(const BoostedModel& model, const FeatureMatrix& rows) {
    ScoreVector out(rows.rows());
    for (Index i = 0; i < rows.rows(); ++i) out(i) = predict_proba_boosted(model, rows.row(i));
    return out;
}

}  // namespace cdrfraud
