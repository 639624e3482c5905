#include "cdrfraud/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cdrfraud {
namespace {

// Scores closer than this are treated as ties, so that splits which are
// equally good in exact arithmetic resolve by index rather than by rounding.
bool better(double candidate, double incumbent) {
    return candidate > incumbent + 1e-12 * std::max(1.0, std::abs(incumbent));
}

bool positive(double score) { return better(score, 0.0); }

double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid < hi ? mid : lo;
}

double gini(double n0, double n1) {
    const double n = n0 + n1;
    if (n <= 0.0) return 0.0;
    const double p0 = n0 / n;
    const double p1 = n1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

// Sweeps every boundary between distinct sorted values of each candidate
// feature. `Stats` accumulates per-row statistics; `score(left, total, n_left, n)`
// returns the split quality or nullopt when the split is not admissible.
template <typename Stats, typename RowStats, typename Score>
std::optional<Split> sweep(const FeatureMatrix& x, std::span<const Index> rows,
                           std::span<const Index> features, int min_samples_leaf,
                           RowStats row_stats, Score score) {
    Stats total{};
    for (Index r : rows) total += row_stats(r);

    std::optional<Split> best;
    std::vector<std::pair<double, Index>> sorted(rows.size());
    const auto n = static_cast<Index>(rows.size());
    const auto min_leaf = static_cast<Index>(min_samples_leaf);
    for (Index f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {x(rows[i], f), rows[i]};
        std::sort(sorted.begin(), sorted.end());
        Stats left{};
        for (Index i = 1; i < n; ++i) {
            left += row_stats(sorted[static_cast<std::size_t>(i - 1)].second);
            const double lo = sorted[static_cast<std::size_t>(i - 1)].first;
            const double hi = sorted[static_cast<std::size_t>(i)].first;
            if (!(lo < hi)) continue;
            if (i < min_leaf || n - i < min_leaf) continue;
            const auto s = score(left, total, i, n);
            if (!s) continue;
            if (!best || better(*s, best->score)) best = Split{f, midpoint(lo, hi), *s};
        }
    }
    return best;
}

struct ClassCounts {
    double n0 = 0.0;
    double n1 = 0.0;
    ClassCounts& operator+=(const ClassCounts& o) {
        n0 += o.n0;
        n1 += o.n1;
        return *this;
    }
};

struct GradSums {
    double g = 0.0;
    double h = 0.0;
    GradSums& operator+=(const GradSums& o) {
        g += o.g;
        h += o.h;
        return *this;
    }
};

double structure_score(double g, double h, double lambda) { return g * g / (h + lambda); }

class Builder {
public:
    Builder(const FeatureMatrix& x, const LabelVector& labels, const TreeConfig& config, Rng& rng,
            std::optional<GradientPairs> aux)
        : x_(x), labels_(labels), config_(config), rng_(rng), aux_(aux) {
        all_features_.resize(static_cast<std::size_t>(x.cols()));
        std::iota(all_features_.begin(), all_features_.end(), Index{0});
    }

    void grow(std::vector<Index> rows, int depth) {
        const std::size_t self = nodes_.size();
        nodes_.push_back(TreeNode{-1, 0.0, -1, leaf_value(rows)});

        const bool depth_left = !config_.max_depth || depth < *config_.max_depth;
        if (!depth_left || rows.size() < 2 * static_cast<std::size_t>(config_.min_samples_leaf)) return;

        const auto candidates = sample_features();
        const auto split =
            config_.criterion == SplitCriterion::gini
                ? best_split_gini(x_, labels_, rows, candidates, config_.min_samples_leaf)
                : best_split_second_order(x_, *aux_, rows, candidates, config_.lambda,
                                          config_.gamma, config_.min_samples_leaf);
        if (!split) return;

        std::vector<Index> left;
        std::vector<Index> right;
        for (Index r : rows) (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        nodes_[self].feature = split->feature;
        nodes_[self].threshold = split->threshold;
        nodes_[self].value = 0.0;
        grow(std::move(left), depth + 1);
        nodes_[self].right = static_cast<Index>(nodes_.size());
        grow(std::move(right), depth + 1);
    }

    std::vector<TreeNode> take() { return std::move(nodes_); }

private:
    double leaf_value(const std::vector<Index>& rows) const {
        if (config_.criterion == SplitCriterion::gini) {
            double positives = 0.0;
            for (Index r : rows) positives += labels_(r) == kPositive ? 1.0 : 0.0;
            return positives / static_cast<double>(rows.size());
        }
        double g = 0.0;
        double h = 0.0;
        for (Index r : rows) {
            g += aux_->gradients[static_cast<std::size_t>(r)];
            h += aux_->hessians[static_cast<std::size_t>(r)];
        }
        return -g / (h + config_.lambda);
    }

    std::vector<Index> sample_features() {
        const auto p = all_features_.size();
        if (!config_.feature_subset || static_cast<std::size_t>(*config_.feature_subset) >= p) {
            return all_features_;
        }
        std::vector<Index> pool = all_features_;
        const auto k = static_cast<std::size_t>(*config_.feature_subset);
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(rng_.uniform_index(p - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    const FeatureMatrix& x_;
    const LabelVector& labels_;
    const TreeConfig& config_;
    Rng& rng_;
    std::optional<GradientPairs> aux_;
    std::vector<Index> all_features_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

void TreeConfig::validate(Index n_features) const {
    if (max_depth && *max_depth < 0) throw ConfigError("max_depth must be nonnegative");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
    if (lambda < 0.0 || gamma < 0.0) throw ConfigError("lambda and gamma must be nonnegative");
    if (feature_subset && (*feature_subset < 1 || *feature_subset > n_features)) {
        throw ConfigError("feature_subset must lie in [1, " + std::to_string(n_features) + "]");
    }
}

std::optional<Split> best_split_gini(const FeatureMatrix& x, const LabelVector& labels,
                                     std::span<const Index> rows, std::span<const Index> features,
                                     int min_samples_leaf) {
    if (rows.empty()) return std::nullopt;
    return sweep<ClassCounts>(
        x, rows, features, min_samples_leaf,
        [&](Index r) {
            return labels(r) == kPositive ? ClassCounts{0.0, 1.0} : ClassCounts{1.0, 0.0};
        },
        [](const ClassCounts& left, const ClassCounts& total, Index n_left,
           Index n) -> std::optional<double> {
            const double nl = static_cast<double>(n_left);
            const double nn = static_cast<double>(n);
            const double decrease = gini(total.n0, total.n1) -
                                    nl / nn * gini(left.n0, left.n1) -
                                    (nn - nl) / nn * gini(total.n0 - left.n0, total.n1 - left.n1);
            if (!positive(decrease)) return std::nullopt;
            return decrease;
        });
}

std::optional<Split> best_split_second_order(const FeatureMatrix& x, const GradientPairs& aux,
                                             std::span<const Index> rows,
                                             std::span<const Index> features, double lambda,
                                             double gamma, int min_samples_leaf) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (aux.gradients.size() != n || aux.hessians.size() != n) {
        throw DimensionError("gradients/hessians must align with the feature matrix rows");
    }
    if (rows.empty()) return std::nullopt;
    return sweep<GradSums>(
        x, rows, features, min_samples_leaf,
        [&](Index r) {
            return GradSums{aux.gradients[static_cast<std::size_t>(r)],
                            aux.hessians[static_cast<std::size_t>(r)]};
        },
        [&](const GradSums& left, const GradSums& total, Index, Index) -> std::optional<double> {
            const GradSums right{total.g - left.g, total.h - left.h};
            const double gain = 0.5 * (structure_score(left.g, left.h, lambda) +
                                       structure_score(right.g, right.h, lambda) -
                                       structure_score(total.g, total.h, lambda)) -
                                gamma;
            if (!positive(gain)) return std::nullopt;
            return gain;
        });
}

Tree::Tree(LeafKind kind, std::vector<TreeNode> nodes) : kind_(kind), nodes_(std::move(nodes)) {}

Index Tree::leaf_count() const {
    return std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); });
}

int Tree::depth() const {
    if (nodes_.empty()) return 0;
    int deepest = 0;
    std::vector<std::pair<std::size_t, int>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes_[i].is_leaf()) {
            stack.emplace_back(i + 1, d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
        }
    }
    return deepest;
}

std::vector<double> Tree::leaf_values() const {
    std::vector<double> out;
    for (const auto& n : nodes_) {
        if (n.is_leaf()) out.push_back(n.value);
    }
    return out;
}

Index Tree::max_feature() const {
    Index m = -1;
    for (const auto& n : nodes_) m = std::max(m, n.feature);
    return m;
}

void Tree::scale_leaves(double factor) {
    for (auto& n : nodes_) {
        if (n.is_leaf()) n.value *= factor;
    }
}

Tree fit_tree(const FeatureMatrix& x, const LabelVector& labels, std::span<const Index> rows,
              const TreeConfig& config, Rng& rng, std::optional<GradientPairs> aux) {
    config.validate(x.cols());
    if (rows.empty()) throw Error("cannot fit a tree on zero rows");
    const bool second_order = config.criterion == SplitCriterion::second_order;
    if (second_order != aux.has_value()) {
        throw Error("gradient pairs must be given exactly when the criterion is second_order");
    }
    if (second_order) {
        const auto n = static_cast<std::size_t>(x.rows());
        if (aux->gradients.size() != n || aux->hessians.size() != n) {
            throw DimensionError("gradients/hessians must align with the feature matrix rows");
        }
    } else if (labels.size() != x.rows()) {
        throw DimensionError("labels must align with the feature matrix rows");
    }
    Builder builder(x, labels, config, rng, aux);
    builder.grow(std::vector<Index>(rows.begin(), rows.end()), 0);
    return Tree(second_order ? LeafKind::additive_weight : LeafKind::class_probability,
                builder.take());
}

}  // namespace cdrfraud
