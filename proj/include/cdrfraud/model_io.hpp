#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cdrfraud/baselines.hpp"
#include "cdrfraud/boost.hpp"
#include "cdrfraud/forest.hpp"
#include "cdrfraud/ingest.hpp"
#include "cdrfraud/preprocess.hpp"

namespace cdrfraud {

enum class ModelKind { rf, xgb, kmeans, dbscan };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct KMeansClassifier {
    KMeansConfig config;
    FeatureMatrix centroids;
    ClusterLabelMap label_map;
};

struct DbscanClassifier {
    DbscanModel clusters;
    ClusterLabelMap label_map;
};

using ModelPayload = std::variant<ForestModel, BoostedModel, KMeansClassifier, DbscanClassifier>;

struct TrainingMetadata {
    std::uint64_t seed = 0;
    std::string mode;
    /// crc32 of the fitted training matrix and labels.
    std::string dataset_fingerprint;
    Index train_rows = 0;
    /// ISO-8601 UTC. Stored in the file header, outside the checksummed body.
    std::string trained_at;
};

/// Everything needed to score raw CDR rows: encoder, scaler and learner.
struct FraudModel {
    Encoding encoding;
    ScalerParams scaler;
    ModelPayload payload;
    TrainingMetadata metadata;

    ModelKind kind() const;
    std::vector<std::string> feature_names() const { return encoding.feature_names(); }
    Index feature_count() const { return static_cast<Index>(encoding.features.size()); }

    /// Fraud scores for already-scaled rows.
    ScoreVector score_scaled(const FeatureMatrix& scaled) const;
    /// Fraud scores for encoded but unscaled rows; checks the feature count.
    ScoreVector score(const FeatureMatrix& encoded) const;
    /// Encodes, scales and scores every row of `table`.
    ScoreVector score(const CdrTable& table) const;

    /// Throws ModelFormatError unless encoder, scaler and learner agree on
    /// feature names and the learner only references existing features.
    void check_consistency() const;
};

inline constexpr int kModelFormatVersion = 1;

/// Header lines (magic + version, body checksum, timestamp) then a JSON body.
std::string serialize_model(const FraudModel& model);
FraudModel parse_model(std::string_view text);

void save_model(const FraudModel& model, const std::filesystem::path& path);
FraudModel load_model(const std::filesystem::path& path);

std::uint32_t crc32_of(std::string_view bytes);
std::string fingerprint(const Dataset& data);

}  // namespace cdrfraud
