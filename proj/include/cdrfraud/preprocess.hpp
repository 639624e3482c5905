#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdrfraud/ingest.hpp"
#include "cdrfraud/types.hpp"

namespace cdrfraud {

/// Per-feature extrema for Min-Max scaling, fitted on training rows only.
struct ScalerParams {
    std::vector<std::string> feature_names;
    Vector<double> min;
    Vector<double> max;

    Index size() const { return min.size(); }
    friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

ScalerParams fit_scaler(const Dataset& data);

/// (x - min) / (max - min) per column; constant columns map to 0. Values
/// outside the fitted range are extrapolated linearly, not clipped.
template <typename Derived>
Matrix<typename Derived::Scalar> min_max_scale(const Eigen::MatrixBase<Derived>& x,
                                               const Vector<typename Derived::Scalar>& min,
                                               const Vector<typename Derived::Scalar>& max) {
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> out(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const Scalar range = max(j) - min(j);
        if (range > Scalar(0)) {
            out.col(j) = (x.col(j).array() - min(j)) / range;
        } else {
            out.col(j).setZero();
        }
    }
    return out;
}

/// Inverse of min_max_scale for non-constant columns.
template <typename Derived>
Matrix<typename Derived::Scalar> min_max_unscale(const Eigen::MatrixBase<Derived>& scaled,
                                                 const Vector<typename Derived::Scalar>& min,
                                                 const Vector<typename Derived::Scalar>& max) {
    Matrix<typename Derived::Scalar> out(scaled.rows(), scaled.cols());
    for (Index j = 0; j < scaled.cols(); ++j) {
        out.col(j) = scaled.col(j).array() * (max(j) - min(j)) + min(j);
    }
    return out;
}

/// Throws DimensionError when the feature count differs from the fitted one.
FeatureMatrix transform(const FeatureMatrix& features, const ScalerParams& params);
Dataset transform(const Dataset& data, const ScalerParams& params);

struct SplitPair {
    Dataset train;
    Dataset test;
    std::uint64_t seed = 0;
    /// Source row of each train/test row, ascending.
    std::vector<Index> train_rows;
    std::vector<Index> test_rows;
};

/// Stratified split: within each class, round(test_fraction * n_class)
/// rows (half rounds up) go to test after a seeded shuffle; every class
/// keeps at least one training row.
SplitPair split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace cdrfraud
