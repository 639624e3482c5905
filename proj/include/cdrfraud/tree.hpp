#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdrfraud/error.hpp"
#include "cdrfraud/rng.hpp"
#include "cdrfraud/types.hpp"

namespace cdrfraud {

enum class SplitCriterion { gini, second_order };

/// What a leaf value means: a class-1 fraction (Gini trees) or an additive
/// margin contribution (boosted trees).
enum class LeafKind { class_probability, additive_weight };

struct TreeConfig {
    /// Levels of splits allowed below the root; nullopt grows until pure.
    /// 0 yields a single leaf.
    std::optional<int> max_depth;
    int min_samples_leaf = 1;
    SplitCriterion criterion = SplitCriterion::gini;
    double lambda = 0.0;
    double gamma = 0.0;
    /// Features sampled without replacement at each node; nullopt = all.
    std::optional<int> feature_subset;

    void validate(Index n_features) const;
};

struct Split {
    Index feature = 0;
    double threshold = 0.0;
    /// Weighted Gini decrease or second-order gain, depending on the criterion.
    double score = 0.0;
};

/// Per-row first and second derivatives of the loss, indexed like the
/// feature matrix rows.
struct GradientPairs {
    std::span<const double> gradients;
    std::span<const double> hessians;
};

/// Best (feature, midpoint threshold) over `features` by weighted Gini
/// impurity decrease. Ties keep the lower feature, then the lower threshold.
/// `rows` may repeat (bootstrap samples).
std::optional<Split> best_split_gini(const FeatureMatrix& x, const LabelVector& labels,
                                     std::span<const Index> rows, std::span<const Index> features,
                                     int min_samples_leaf = 1);

/// Best split by the regularised second-order gain
///   ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ;
/// none when that gain is not positive.
std::optional<Split> best_split_second_order(const FeatureMatrix& x, const GradientPairs& aux,
                                             std::span<const Index> rows,
                                             std::span<const Index> features, double lambda,
                                             double gamma, int min_samples_leaf = 1);

/// Flat pre-order node. An internal node's left child immediately follows it;
/// `right` holds the index of its right child.
struct TreeNode {
    Index feature = -1;
    double threshold = 0.0;
    Index right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class Tree {
public:
    Tree() = default;
    Tree(LeafKind kind, std::vector<TreeNode> nodes);

    LeafKind leaf_kind() const { return kind_; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    Index leaf_count() const;
    /// Longest root-to-leaf path counted in splits.
    int depth() const;
    std::vector<double> leaf_values() const;
    /// Largest feature index referenced, or -1 for a single leaf.
    Index max_feature() const;
    void scale_leaves(double factor);

    /// Routes left on `row[feature] <= threshold`.
    template <typename Derived>
    double predict(const Eigen::DenseBase<Derived>& row) const {
        if (nodes_.empty()) throw Error("predict on an empty tree");
        std::size_t i = 0;
        while (!nodes_[i].is_leaf()) {
            const auto& n = nodes_[i];
            if (n.feature >= row.size()) {
                throw DimensionError("tree splits on feature " + std::to_string(n.feature) +
                                     " but row has " + std::to_string(row.size()) + " features");
            }
            i = row(n.feature) <= n.threshold ? i + 1 : static_cast<std::size_t>(n.right);
        }
        return nodes_[i].value;
    }

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    LeafKind kind_ = LeafKind::class_probability;
    std::vector<TreeNode> nodes_;
};

template <typename Derived>
double predict_tree(const Tree& tree, const Eigen::DenseBase<Derived>& row) {
    return tree.predict(row);
}

/// Greedy top-down construction over `rows`. Gini trees need `labels`;
/// second-order trees need `aux` and ignore `labels`.
Tree fit_tree(const FeatureMatrix& x, const LabelVector& labels, std::span<const Index> rows,
              const TreeConfig& config, Rng& rng, std::optional<GradientPairs> aux = std::nullopt);

}  // namespace cdrfraud
