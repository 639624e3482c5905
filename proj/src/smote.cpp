#include "cdrfraud/smote.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdrfraud/error.hpp"
#include "cdrfraud/rng.hpp"

namespace cdrfraud {
namespace {

// Nearest neighbours of minority[pos] among `minority` (row indices into x).
std::vector<Index> neighbors_among(const FeatureMatrix& x, const std::vector<Index>& minority,
                                   std::size_t pos, int k) {
    const auto origin = x.row(minority[pos]);
    std::vector<std::pair<double, Index>> dist;
    dist.reserve(minority.size() - 1);
    for (std::size_t j = 0; j < minority.size(); ++j) {
        if (j == pos) continue;
        dist.emplace_back((x.row(minority[j]) - origin).squaredNorm(), minority[j]);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
    std::vector<Index> out(take);
    for (std::size_t i = 0; i < take; ++i) out[i] = dist[i].second;
    return out;
}

std::vector<Index> rows_with_label(const Dataset& data, int label) {
    std::vector<Index> rows;
    for (Index i = 0; i < data.rows(); ++i) {
        if (data.labels(i) == label) rows.push_back(i);
    }
    return rows;
}

}  // namespace

void SmoteConfig::validate() const {
    if (k_neighbors < 1) throw ConfigError("SMOTE k must be at least 1");
    if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
        throw ConfigError("SMOTE target ratio must lie in (0, 1]");
    }
}

std::vector<Index> nearest_minority_neighbors(const Dataset& data, Index index, int k) {
    if (index < 0 || index >= data.rows()) throw std::out_of_range("row index out of range");
    if (k < 1) throw ConfigError("k must be positive");
    const auto members = rows_with_label(data, data.labels(index));
    if (members.size() < 2) throw Error("class needs at least 2 rows for neighbour search");
    const auto pos = static_cast<std::size_t>(
        std::find(members.begin(), members.end(), index) - members.begin());
    return neighbors_among(data.features, members, pos, k);
}

BalanceResult balance_with_origins(const Dataset& data, const SmoteConfig& config) {
    config.validate();
    const Index positives = data.count(kPositive);
    const Index negatives = data.count(kNegative);
    if (positives == 0 || negatives == 0) throw Error("SMOTE needs both classes present");

    BalanceResult out;
    out.minority_label = positives <= negatives ? kPositive : kNegative;
    const Index majority = std::max(positives, negatives);
    const Index minority_count = std::min(positives, negatives);
    if (minority_count < 2) throw Error("SMOTE needs at least 2 minority rows");

    const auto target = static_cast<Index>(std::llround(config.target_ratio * static_cast<double>(majority)));
    const Index n_synthetic = std::max<Index>(0, target - minority_count);
    out.data = data;
    if (n_synthetic == 0) return out;

    const auto minority = rows_with_label(data, out.minority_label);
    Rng rng(config.seed);

    // Round-robin over a seeded permutation so parents are used evenly.
    std::vector<std::size_t> order(minority.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<std::vector<Index>> neighbor_cache(minority.size());
    const Index first_new = data.rows();
    out.data.features.conservativeResize(first_new + n_synthetic, Eigen::NoChange);
    out.data.labels.conservativeResize(first_new + n_synthetic);
    out.origins.reserve(static_cast<std::size_t>(n_synthetic));

    for (Index s = 0; s < n_synthetic; ++s) {
        const std::size_t pos = order[static_cast<std::size_t>(s) % order.size()];
        auto& neighbors = neighbor_cache[pos];
        if (neighbors.empty()) neighbors = neighbors_among(data.features, minority, pos, config.k_neighbors);
        const Index parent = minority[pos];
        const Index neighbor = neighbors[static_cast<std::size_t>(rng.uniform_index(neighbors.size()))];
        const double u = rng.uniform01();
        out.data.features.row(first_new + s) =
            synthesize(data.features.row(parent), data.features.row(neighbor), u);
        out.data.labels(first_new + s) = out.minority_label;
        out.origins.push_back({parent, neighbor, u});
    }
    return out;
}

Dataset balance(const Dataset& data, const SmoteConfig& config) {
    return balance_with_origins(data, config).data;
}

}  // namespace cdrfraud
