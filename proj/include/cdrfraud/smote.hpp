#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cdrfraud/ingest.hpp"
#include "cdrfraud/types.hpp"

namespace cdrfraud {

struct SmoteConfig {
    int k_neighbors = 5;
    /// Target minority count as a fraction of the majority count; 1 = parity.
    double target_ratio = 1.0;
    std::uint64_t seed = 42;

    void validate() const;
};

/// The k rows of the same class as `index` nearest to it in Euclidean
/// distance, nearest first; ties go to the lower row index. Returns every
/// other class member when fewer than k exist.
std::vector<Index> nearest_minority_neighbors(const Dataset& data, Index index, int k);

/// x_i + u * (x_nn - x_i).
template <typename DerivedA, typename DerivedB>
RowVector<typename DerivedA::Scalar> synthesize(const Eigen::MatrixBase<DerivedA>& x_i,
                                                const Eigen::MatrixBase<DerivedB>& x_nn,
                                                typename DerivedA::Scalar u) {
    if (x_i.size() != x_nn.size()) {
        throw std::invalid_argument("synthesize: rows differ in length");
    }
    RowVector<typename DerivedA::Scalar> out(x_i.size());
    for (Index j = 0; j < x_i.size(); ++j) out(j) = x_i(j) + u * (x_nn(j) - x_i(j));
    return out;
}

/// Where a synthetic row came from.
struct SyntheticOrigin {
    Index parent = 0;
    Index neighbor = 0;
    double u = 0.0;
};

struct BalanceResult {
    /// Original rows in their original order, then the synthetic rows.
    Dataset data;
    /// One entry per synthetic row; origins[i] describes data row (original_rows + i).
    std::vector<SyntheticOrigin> origins;
    int minority_label = kPositive;
};

/// Oversamples the minority class until it holds round(target_ratio * majority) rows.
BalanceResult balance_with_origins(const Dataset& data, const SmoteConfig& config);
Dataset balance(const Dataset& data, const SmoteConfig& config);

}  // namespace cdrfraud
