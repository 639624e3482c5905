#include "cdrfraud/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "json.hpp"

namespace cdrfraud {
namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "cdrfraud-model";

// ---- Eigen / domain types <-> json -------------------------------------

json matrix_to_json(const FeatureMatrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

FeatureMatrix matrix_from_json(const json& j) {
    FeatureMatrix m(j.at("rows").get<Index>(), j.at("cols").get<Index>());
    const auto& data = j.at("data");
    if (static_cast<Index>(data.size()) != m.rows()) throw ModelFormatError("matrix row count mismatch");
    for (Index i = 0; i < m.rows(); ++i) {
        const auto& row = data.at(static_cast<std::size_t>(i));
        if (static_cast<Index>(row.size()) != m.cols()) throw ModelFormatError("matrix column count mismatch");
        for (Index j2 = 0; j2 < m.cols(); ++j2) m(i, j2) = row.at(static_cast<std::size_t>(j2)).get<double>();
    }
    return m;
}

std::string_view encoding_kind_name(FeatureEncoding::Kind k) {
    switch (k) {
        case FeatureEncoding::Kind::passthrough: return "numeric";
        case FeatureEncoding::Kind::binary: return "binary";
        case FeatureEncoding::Kind::ordinal: return "ordinal";
    }
    return "numeric";
}

FeatureEncoding::Kind encoding_kind_from(std::string_view s) {
    if (s == "numeric") return FeatureEncoding::Kind::passthrough;
    if (s == "binary") return FeatureEncoding::Kind::binary;
    if (s == "ordinal") return FeatureEncoding::Kind::ordinal;
    throw ModelFormatError("unknown feature encoding '" + std::string(s) + "'");
}

json encoding_to_json(const Encoding& e) {
    json features = json::array();
    for (const auto& f : e.features) {
        features.push_back({{"column", f.column},
                            {"kind", encoding_kind_name(f.kind)},
                            {"categories", f.categories}});
    }
    return {{"label_column", e.label_column},
            {"positive_label", e.positive_label},
            {"negative_label", e.negative_label},
            {"features", std::move(features)}};
}

Encoding encoding_from_json(const json& j) {
    Encoding e;
    e.label_column = j.at("label_column").get<std::string>();
    e.positive_label = j.at("positive_label").get<std::string>();
    e.negative_label = j.at("negative_label").get<std::string>();
    for (const auto& f : j.at("features")) {
        e.features.push_back({f.at("column").get<std::string>(),
                              encoding_kind_from(f.at("kind").get<std::string>()),
                              f.at("categories").get<std::vector<std::string>>()});
    }
    return e;
}

json scaler_to_json(const ScalerParams& s) {
    json out = json::array();
    for (Index j = 0; j < s.size(); ++j) {
        out.push_back({{"feature", s.feature_names[static_cast<std::size_t>(j)]},
                       {"min", s.min(j)},
                       {"max", s.max(j)}});
    }
    return out;
}

ScalerParams scaler_from_json(const json& j) {
    ScalerParams s;
    s.min.resize(static_cast<Index>(j.size()));
    s.max.resize(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        s.feature_names.push_back(j[i].at("feature").get<std::string>());
        s.min(static_cast<Index>(i)) = j[i].at("min").get<double>();
        s.max(static_cast<Index>(i)) = j[i].at("max").get<double>();
        if (!(s.min(static_cast<Index>(i)) <= s.max(static_cast<Index>(i)))) {
            throw ModelFormatError("scaler min exceeds max for '" + s.feature_names.back() + "'");
        }
    }
    return s;
}

// Pre-order records: [feature, threshold] for a split, ["leaf", value] for a leaf.
json tree_to_json(const Tree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes()) {
        if (n.is_leaf()) {
            nodes.push_back(json::array({"leaf", n.value}));
        } else {
            nodes.push_back(json::array({n.feature, n.threshold}));
        }
    }
    return nodes;
}

Tree tree_from_json(const json& j, LeafKind kind) {
    std::vector<TreeNode> nodes;
    nodes.reserve(j.size());
    for (const auto& rec : j) {
        if (!rec.is_array() || rec.size() != 2) throw ModelFormatError("malformed tree node");
        if (rec[0].is_string()) {
            if (rec[0].get<std::string>() != "leaf") throw ModelFormatError("malformed tree leaf");
            nodes.push_back({-1, 0.0, -1, rec[1].get<double>()});
        } else {
            const auto feature = rec[0].get<Index>();
            if (feature < 0) throw ModelFormatError("negative feature index in tree");
            nodes.push_back({feature, rec[1].get<double>(), -1, 0.0});
        }
    }
    // Rebuild right-child links from the pre-order layout.
    std::size_t pos = 0;
    auto link = [&](auto&& self) -> void {
        if (pos >= nodes.size()) throw ModelFormatError("truncated tree");
        const std::size_t here = pos++;
        if (nodes[here].is_leaf()) return;
        self(self);
        nodes[here].right = static_cast<Index>(pos);
        self(self);
    };
    link(link);
    if (pos != nodes.size()) throw ModelFormatError("trailing nodes after tree");
    return Tree(kind, std::move(nodes));
}

json trees_to_json(const std::vector<Tree>& trees) {
    json out = json::array();
    for (const auto& t : trees) out.push_back(tree_to_json(t));
    return out;
}

std::vector<Tree> trees_from_json(const json& j, LeafKind kind) {
    std::vector<Tree> out;
    for (const auto& t : j) out.push_back(tree_from_json(t, kind));
    return out;
}

json label_map_to_json(const ClusterLabelMap& m) {
    return {{"cluster_label", m.cluster_label}, {"noise_label", m.noise_label}};
}

ClusterLabelMap label_map_from_json(const json& j) {
    return {j.at("cluster_label").get<std::vector<int>>(), j.at("noise_label").get<int>()};
}

json payload_to_json(const ModelPayload& payload) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ForestModel>) {
                const auto& c = m.config;
                json config = {{"n_trees", c.n_trees},     {"max_depth", c.max_depth},
                               {"bootstrap", c.bootstrap}, {"min_samples_leaf", c.min_samples_leaf},
                               {"seed", c.seed},           {"feature_subset", nullptr}};
                if (c.feature_subset) config["feature_subset"] = *c.feature_subset;
                return {{"config", config}, {"feature_names", m.feature_names}, {"trees", trees_to_json(m.trees)}};
            } else if constexpr (std::is_same_v<T, BoostedModel>) {
                const auto& c = m.config;
                json config = {{"n_rounds", c.n_rounds},   {"learning_rate", c.learning_rate},
                               {"max_depth", c.max_depth}, {"lambda", c.lambda},
                               {"gamma", c.gamma},         {"base_score", c.base_score},
                               {"min_samples_leaf", c.min_samples_leaf}, {"seed", c.seed}};
                return {{"config", config},
                        {"feature_names", m.feature_names},
                        {"objective_trace", m.objective_trace},
                        {"trees", trees_to_json(m.trees)}};
            } else if constexpr (std::is_same_v<T, KMeansClassifier>) {
                const auto& c = m.config;
                return {{"config", {{"k", c.k}, {"max_iters", c.max_iters}, {"tol", c.tol}, {"seed", c.seed}}},
                        {"centroids", matrix_to_json(m.centroids)},
                        {"label_map", label_map_to_json(m.label_map)}};
            } else {
                const auto& c = m.clusters.config;
                return {{"config", {{"eps", c.eps}, {"min_pts", c.min_pts}}},
                        {"core_points", matrix_to_json(m.clusters.core_points)},
                        {"core_labels", m.clusters.core_labels},
                        {"label_map", label_map_to_json(m.label_map)}};
            }
        },
        payload);
}

ModelPayload payload_from_json(ModelKind kind, const json& j) {
    const auto& c = j.at("config");
    switch (kind) {
        case ModelKind::rf: {
            ForestModel m;
            m.config.n_trees = c.at("n_trees").get<int>();
            m.config.max_depth = c.at("max_depth").get<int>();
            m.config.bootstrap = c.at("bootstrap").get<bool>();
            m.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
            m.config.seed = c.at("seed").get<std::uint64_t>();
            if (!c.at("feature_subset").is_null()) m.config.feature_subset = c.at("feature_subset").get<int>();
            m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
            m.trees = trees_from_json(j.at("trees"), LeafKind::class_probability);
            if (m.trees.empty()) throw ModelFormatError("forest has no trees");
            return m;
        }
        case ModelKind::xgb: {
            BoostedModel m;
            m.config.n_rounds = c.at("n_rounds").get<int>();
            m.config.learning_rate = c.at("learning_rate").get<double>();
            m.config.max_depth = c.at("max_depth").get<int>();
            m.config.lambda = c.at("lambda").get<double>();
            m.config.gamma = c.at("gamma").get<double>();
            m.config.base_score = c.at("base_score").get<double>();
            m.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
            m.config.seed = c.at("seed").get<std::uint64_t>();
            m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
            m.objective_trace = j.at("objective_trace").get<std::vector<double>>();
            m.trees = trees_from_json(j.at("trees"), LeafKind::additive_weight);
            return m;
        }
        case ModelKind::kmeans: {
            KMeansClassifier m;
            m.config.k = c.at("k").get<int>();
            m.config.max_iters = c.at("max_iters").get<int>();
            m.config.tol = c.at("tol").get<double>();
            m.config.seed = c.at("seed").get<std::uint64_t>();
            m.centroids = matrix_from_json(j.at("centroids"));
            m.label_map = label_map_from_json(j.at("label_map"));
            return m;
        }
        case ModelKind::dbscan: {
            DbscanClassifier m;
            m.clusters.config.eps = c.at("eps").get<double>();
            m.clusters.config.min_pts = c.at("min_pts").get<int>();
            m.clusters.core_points = matrix_from_json(j.at("core_points"));
            m.clusters.core_labels = j.at("core_labels").get<std::vector<int>>();
            m.label_map = label_map_from_json(j.at("label_map"));
            return m;
        }
    }
    throw ModelFormatError("unknown model kind");
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

std::string_view next_line(std::string_view& text) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) {
        throw ModelFormatError("model file is truncated (incomplete header)");
    }
    const auto line = text.substr(0, nl);
    text.remove_prefix(nl + 1);
    return line;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::rf: return "rf";
        case ModelKind::xgb: return "xgb";
        case ModelKind::kmeans: return "kmeans";
        case ModelKind::dbscan: return "dbscan";
    }
    return "rf";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "rf") return ModelKind::rf;
    if (text == "xgb") return ModelKind::xgb;
    if (text == "kmeans") return ModelKind::kmeans;
    if (text == "dbscan") return ModelKind::dbscan;
    throw ConfigError("unknown model '" + std::string(text) + "' (expected rf, xgb, kmeans or dbscan)");
}

ModelKind FraudModel::kind() const {
    return static_cast<ModelKind>(payload.index());
}

ScoreVector FraudModel::score_scaled(const FeatureMatrix& x) const {
    return std::visit(
        [&](const auto& m) -> ScoreVector {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ForestModel>) {
                return predict_proba_forest(m, x);
            } else if constexpr (std::is_same_v<T, BoostedModel>) {
                return predict_proba_boosted(m, x);
            } else {
                ScoreVector out(x.rows());
                for (Index i = 0; i < x.rows(); ++i) {
                    int cluster = 0;
                    if constexpr (std::is_same_v<T, KMeansClassifier>) {
                        cluster = nearest_centroid(m.centroids, x.row(i));
                    } else {
                        cluster = m.clusters.assign(x.row(i));
                    }
                    out(i) = static_cast<double>(m.label_map(cluster));
                }
                return out;
            }
        },
        payload);
}

ScoreVector FraudModel::score(const FeatureMatrix& encoded) const {
    if (encoded.cols() != feature_count()) {
        throw DimensionError("model expects " + std::to_string(feature_count()) +
                             " features, got " + std::to_string(encoded.cols()));
    }
    return score_scaled(transform(encoded, scaler));
}

ScoreVector FraudModel::score(const CdrTable& table) const {
    return score(encoding.encode_features(table));
}

void FraudModel::check_consistency() const {
    const auto names = feature_names();
    if (scaler.feature_names != names) {
        throw ModelFormatError("scaler features do not match encoder features");
    }
    const auto p = static_cast<Index>(names.size());
    auto check_trees = [&](const std::vector<Tree>& trees, const std::vector<std::string>& model_names) {
        if (model_names != names) throw ModelFormatError("model features do not match encoder features");
        for (const auto& t : trees) {
            if (t.max_feature() >= p) throw ModelFormatError("tree references a feature beyond the encoder's");
        }
    };
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ForestModel> || std::is_same_v<T, BoostedModel>) {
                check_trees(m.trees, m.feature_names);
            } else if constexpr (std::is_same_v<T, KMeansClassifier>) {
                if (m.centroids.cols() != p) throw ModelFormatError("centroid width mismatch");
                if (static_cast<Index>(m.label_map.cluster_label.size()) != m.centroids.rows()) {
                    throw ModelFormatError("cluster label map size mismatch");
                }
            } else {
                if (m.clusters.core_points.rows() > 0 && m.clusters.core_points.cols() != p) {
                    throw ModelFormatError("core point width mismatch");
                }
                if (static_cast<Index>(m.clusters.core_labels.size()) != m.clusters.core_points.rows()) {
                    throw ModelFormatError("core label count mismatch");
                }
            }
        },
        payload);
}

std::string serialize_model(const FraudModel& model) {
    model.check_consistency();
    json body = {{"kind", to_string(model.kind())},
                 {"feature_names", model.feature_names()},
                 {"encoder", encoding_to_json(model.encoding)},
                 {"scaler", scaler_to_json(model.scaler)},
                 {"model", payload_to_json(model.payload)},
                 {"training", {{"seed", model.metadata.seed},
                               {"mode", model.metadata.mode},
                               {"dataset_fingerprint", model.metadata.dataset_fingerprint},
                               {"train_rows", model.metadata.train_rows}}}};
    const std::string text = body.dump(1) + "\n";
    std::string out;
    out += std::string(kMagic) + " " + std::to_string(kModelFormatVersion) + "\n";
    out += "crc32 " + hex32(crc32_of(text)) + "\n";
    out += "trained_at " + model.metadata.trained_at + "\n";
    out += text;
    return out;
}

FraudModel parse_model(std::string_view text) {
    const auto magic_line = next_line(text);
    std::istringstream magic{std::string(magic_line)};
    std::string word;
    int version = 0;
    if (!(magic >> word >> version) || word != kMagic) throw ModelFormatError("not a cdrfraud model file");
    if (version > kModelFormatVersion) {
        throw ModelFormatError("model format version " + std::to_string(version) +
                               " is newer than this build supports (" +
                               std::to_string(kModelFormatVersion) + ")");
    }
    if (version < 1) throw ModelFormatError("invalid model format version");

    const auto crc_line = next_line(text);
    if (crc_line.substr(0, 6) != "crc32 ") throw ModelFormatError("missing checksum line");
    const auto stamp_line = next_line(text);
    if (stamp_line.substr(0, 11) != "trained_at ") throw ModelFormatError("missing timestamp line");
    if (crc_line.substr(6) != hex32(crc32_of(text))) {
        throw ModelFormatError("model file checksum mismatch (file corrupt or truncated)");
    }

    FraudModel model;
    try {
        const json body = json::parse(text);
        const auto kind = parse_model_kind(body.at("kind").get<std::string>());
        model.encoding = encoding_from_json(body.at("encoder"));
        model.scaler = scaler_from_json(body.at("scaler"));
        model.payload = payload_from_json(kind, body.at("model"));
        const auto& t = body.at("training");
        model.metadata.seed = t.at("seed").get<std::uint64_t>();
        model.metadata.mode = t.at("mode").get<std::string>();
        model.metadata.dataset_fingerprint = t.at("dataset_fingerprint").get<std::string>();
        model.metadata.train_rows = t.at("train_rows").get<Index>();
        if (body.at("feature_names").get<std::vector<std::string>>() != model.feature_names()) {
            throw ModelFormatError("feature_names disagree with the encoder");
        }
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("malformed model body: ") + e.what());
    } catch (const ConfigError& e) {
        throw ModelFormatError(e.what());
    }
    model.metadata.trained_at = std::string(stamp_line.substr(11));
    model.check_consistency();
    return model;
}

void save_model(const FraudModel& model, const std::filesystem::path& path) {
    const auto text = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw Error("failed writing " + path.string());
}

FraudModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read model " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

std::string fingerprint(const Dataset& data) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.features.data()),
                static_cast<uInt>(data.features.size() * static_cast<Index>(sizeof(double))));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.labels.data()),
                static_cast<uInt>(data.labels.size() * static_cast<Index>(sizeof(int))));
    return hex32(static_cast<std::uint32_t>(crc));
}

}  // namespace cdrfraud
