#include "cdrfraud/baselines.hpp"

#include <algorithm>
#include <deque>

#include "cdrfraud/error.hpp"
#include "cdrfraud/rng.hpp"

namespace cdrfraud {
namespace {

std::vector<int> assign_all(const FeatureMatrix& x, const FeatureMatrix& centroids) {
    std::vector<int> labels(static_cast<std::size_t>(x.rows()));
    for (Index i = 0; i < x.rows(); ++i) labels[static_cast<std::size_t>(i)] = nearest_centroid(centroids, x.row(i));
    return labels;
}

FeatureMatrix kmeans_plus_plus(const FeatureMatrix& x, int k, Rng& rng) {
    const Index n = x.rows();
    FeatureMatrix centroids(k, x.cols());
    std::vector<double> d2(static_cast<std::size_t>(n));
    Index first = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    centroids.row(0) = x.row(first);
    for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - centroids.row(0)).squaredNorm();

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : d2) total += d;
        Index pick = n - 1;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc >= target && d2[static_cast<std::size_t>(i)] > 0.0) {
                    pick = i;
                    break;
                }
            }
            // Guard against rounding leaving the cumulative sum short.
            while (d2[static_cast<std::size_t>(pick)] <= 0.0 && pick > 0) --pick;
        } else {
            pick = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        }
        centroids.row(c) = x.row(pick);
        for (Index i = 0; i < n; ++i) {
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - centroids.row(c)).squaredNorm());
        }
    }
    return centroids;
}

}  // namespace

void KMeansConfig::validate(Index rows) const {
    if (k < 1) throw ConfigError("k-means k must be positive");
    if (max_iters < 1) throw ConfigError("k-means max_iters must be positive");
    if (tol < 0.0) throw ConfigError("k-means tol must be nonnegative");
    if (rows < k) {
        throw ConfigError("k-means needs at least k=" + std::to_string(k) + " rows, got " +
                          std::to_string(rows));
    }
}

void DbscanConfig::validate() const {
    if (!(eps > 0.0)) throw ConfigError("DBSCAN eps must be positive");
    if (min_pts < 1) throw ConfigError("DBSCAN min_pts must be at least 1");
}

double kmeans_inertia(const FeatureMatrix& x, const FeatureMatrix& centroids,
                      const std::vector<int>& labels) {
    double sum = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        sum += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return sum;
}

ClusterAssignment kmeans_fit(const FeatureMatrix& x, const KMeansConfig& config) {
    config.validate(x.rows());
    Rng rng(config.seed);
    const int k = config.k;

    ClusterAssignment out;
    out.n_clusters = k;
    out.centroids = kmeans_plus_plus(x, k, rng);
    out.labels = assign_all(x, out.centroids);
    out.inertia_trace.push_back(kmeans_inertia(x, out.centroids, out.labels));

    for (int iter = 0; iter < config.max_iters; ++iter) {
        FeatureMatrix sums = FeatureMatrix::Zero(k, x.cols());
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < x.rows(); ++i) {
            const int c = out.labels[static_cast<std::size_t>(i)];
            sums.row(c) += x.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        FeatureMatrix next = out.centroids;
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                next.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            // Empty cluster: move it onto the point worst served by its centroid.
            Index far = 0;
            double far_d = -1.0;
            for (Index i = 0; i < x.rows(); ++i) {
                const double d = (x.row(i) - next.row(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            next.row(c) = x.row(far);
            out.labels[static_cast<std::size_t>(far)] = c;
        }
        const double shift = (next - out.centroids).rowwise().norm().maxCoeff();
        out.centroids = std::move(next);
        auto labels = assign_all(x, out.centroids);
        const bool changed = labels != out.labels;
        out.labels = std::move(labels);
        out.inertia_trace.push_back(kmeans_inertia(x, out.centroids, out.labels));
        if (!changed || shift < config.tol) break;
    }
    out.inertia = out.inertia_trace.back();
    return out;
}

ClusterAssignment dbscan_fit(const FeatureMatrix& x, const DbscanConfig& config) {
    config.validate();
    const Index n = x.rows();
    const double eps2 = config.eps * config.eps;
    auto neighbors = [&](Index p) {
        std::vector<Index> out;
        for (Index j = 0; j < n; ++j) {
            if ((x.row(j) - x.row(p)).squaredNorm() <= eps2) out.push_back(j);
        }
        return out;
    };

    ClusterAssignment out;
    out.core.assign(static_cast<std::size_t>(n), false);
    for (Index i = 0; i < n; ++i) {
        Index count = 0;
        for (Index j = 0; j < n && count < config.min_pts; ++j) {
            if ((x.row(j) - x.row(i)).squaredNorm() <= eps2) ++count;
        }
        out.core[static_cast<std::size_t>(i)] = count >= config.min_pts;
    }

    constexpr int kUnassigned = -2;
    out.labels.assign(static_cast<std::size_t>(n), kUnassigned);
    int cluster = 0;
    for (Index i = 0; i < n; ++i) {
        if (out.labels[static_cast<std::size_t>(i)] != kUnassigned || !out.core[static_cast<std::size_t>(i)]) continue;
        out.labels[static_cast<std::size_t>(i)] = cluster;
        std::deque<Index> frontier{i};
        while (!frontier.empty()) {
            const Index p = frontier.front();
            frontier.pop_front();
            for (Index q : neighbors(p)) {
                auto& label = out.labels[static_cast<std::size_t>(q)];
                if (label != kUnassigned) continue;
                label = cluster;
                if (out.core[static_cast<std::size_t>(q)]) frontier.push_back(q);
            }
        }
        ++cluster;
    }
    for (auto& label : out.labels) {
        if (label == kUnassigned) label = kNoise;
    }
    out.n_clusters = cluster;
    return out;
}

DbscanModel DbscanModel::from_fit(const FeatureMatrix& x, const ClusterAssignment& fit,
                                  const DbscanConfig& config) {
    DbscanModel model;
    model.config = config;
    std::vector<Index> cores;
    for (std::size_t i = 0; i < fit.core.size(); ++i) {
        if (fit.core[i]) cores.push_back(static_cast<Index>(i));
    }
    model.core_points.resize(static_cast<Index>(cores.size()), x.cols());
    for (std::size_t i = 0; i < cores.size(); ++i) {
        model.core_points.row(static_cast<Index>(i)) = x.row(cores[i]);
        model.core_labels.push_back(fit.labels[static_cast<std::size_t>(cores[i])]);
    }
    return model;
}

int ClusterLabelMap::operator()(int cluster) const {
    if (cluster == kNoise) return noise_label;
    if (cluster < 0 || static_cast<std::size_t>(cluster) >= cluster_label.size()) {
        throw Error("cluster id " + std::to_string(cluster) + " has no label mapping");
    }
    return cluster_label[static_cast<std::size_t>(cluster)];
}

ClusterLabelMap fit_cluster_labels(const std::vector<int>& clusters, const LabelVector& truth,
                                   int n_clusters) {
    if (static_cast<Index>(clusters.size()) != truth.size()) {
        throw DimensionError("cluster labels and true labels differ in length");
    }
    std::vector<Index> positives(static_cast<std::size_t>(n_clusters), 0);
    std::vector<Index> negatives(static_cast<std::size_t>(n_clusters), 0);
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const int c = clusters[i];
        if (c == kNoise) continue;
        if (c < 0 || c >= n_clusters) throw Error("cluster id out of range");
        (truth(static_cast<Index>(i)) == kPositive ? positives : negatives)[static_cast<std::size_t>(c)]++;
    }
    ClusterLabelMap map;
    map.cluster_label.resize(static_cast<std::size_t>(n_clusters));
    for (int c = 0; c < n_clusters; ++c) {
        map.cluster_label[static_cast<std::size_t>(c)] =
            positives[static_cast<std::size_t>(c)] >= negatives[static_cast<std::size_t>(c)] ? kPositive : kNegative;
    }
    return map;
}

LabelVector clusters_to_labels(const ClusterAssignment& assignment, const LabelVector& truth) {
    const auto map = fit_cluster_labels(assignment.labels, truth, assignment.n_clusters);
    LabelVector out(truth.size());
    for (Index i = 0; i < truth.size(); ++i) out(i) = map(assignment.labels[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace cdrfraud
