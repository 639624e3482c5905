#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cdrfraud {

using Index = Eigen::Index;

// Row-major so that a feature row is contiguous; all learners read rows.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using FeatureMatrix = Matrix<double>;
using FeatureRow = RowVector<double>;
using LabelVector = Eigen::VectorXi;
using ScoreVector = Vector<double>;

/// Binary class codes. Fraud is the positive class everywhere.
inline constexpr int kNegative = 0;
inline constexpr int kPositive = 1;

}  // namespace cdrfraud
