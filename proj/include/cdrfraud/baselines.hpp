#pragma once

#include <cstdint>
#include <vector>

#include "cdrfraud/ingest.hpp"
#include "cdrfraud/types.hpp"

namespace cdrfraud {

inline constexpr int kNoise = -1;

struct KMeansConfig {
    int k = 2;
    int max_iters = 300;
    double tol = 1e-6;
    std::uint64_t seed = 42;

    void validate(Index rows) const;
};

struct DbscanConfig {
    double eps = 0.0;
    int min_pts = 0;

    void validate() const;
};

struct ClusterAssignment {
    /// Cluster id per row; kNoise for DBSCAN outliers.
    std::vector<int> labels;
    int n_clusters = 0;
    /// K-means only.
    FeatureMatrix centroids;
    double inertia = 0.0;
    /// Inertia after every assignment step, first to last.
    std::vector<double> inertia_trace;
    /// DBSCAN only: whether each row is a core point.
    std::vector<bool> core;
};

/// Lloyd iterations from k-means++ seeds. Stops when no label changes, the
/// largest centroid move drops below tol, or max_iters is reached. The
/// returned labels are the nearest-centroid assignment for the returned centroids.
ClusterAssignment kmeans_fit(const FeatureMatrix& x, const KMeansConfig& config);
inline ClusterAssignment kmeans_fit(const Dataset& data, const KMeansConfig& config) {
    return kmeans_fit(data.features, config);
}

/// Index of the closest centroid; ties go to the lower index.
template <typename Derived>
int nearest_centroid(const FeatureMatrix& centroids, const Eigen::DenseBase<Derived>& row) {
    int best = 0;
    double best_d = (centroids.row(0) - row.derived()).squaredNorm();
    for (Index c = 1; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - row.derived()).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

double kmeans_inertia(const FeatureMatrix& x, const FeatureMatrix& centroids,
                      const std::vector<int>& labels);

/// Core points have at least min_pts rows (themselves included) within eps.
/// Rows are scanned in order; a border row joins the first cluster whose
/// expansion reaches it.
ClusterAssignment dbscan_fit(const FeatureMatrix& x, const DbscanConfig& config);
inline ClusterAssignment dbscan_fit(const Dataset& data, const DbscanConfig& config) {
    return dbscan_fit(data.features, config);
}

/// Core points of a fitted DBSCAN clustering, used to place new rows.
struct DbscanModel {
    DbscanConfig config;
    FeatureMatrix core_points;
    std::vector<int> core_labels;

    static DbscanModel from_fit(const FeatureMatrix& x, const ClusterAssignment& fit,
                                const DbscanConfig& config);

    /// Cluster of the nearest core point within eps, else kNoise.
    template <typename Derived>
    int assign(const Eigen::DenseBase<Derived>& row) const {
        int label = kNoise;
        double best = config.eps * config.eps;
        for (Index i = 0; i < core_points.rows(); ++i) {
            const double d = (core_points.row(i) - row.derived()).squaredNorm();
            if (d <= best && (label == kNoise || d < best)) {
                best = d;
                label = core_labels[static_cast<std::size_t>(i)];
            }
        }
        return label;
    }
};

/// Majority true label per cluster (ties to fraud); noise maps to fraud.
struct ClusterLabelMap {
    std::vector<int> cluster_label;
    int noise_label = kPositive;

    int operator()(int cluster) const;
    friend bool operator==(const ClusterLabelMap&, const ClusterLabelMap&) = default;
};

ClusterLabelMap fit_cluster_labels(const std::vector<int>& clusters, const LabelVector& truth,
                                   int n_clusters);

/// Fits the majority mapping on (assignment, truth) and applies it.
LabelVector clusters_to_labels(const ClusterAssignment& assignment, const LabelVector& truth);

}  // namespace cdrfraud
