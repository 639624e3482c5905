#include "cdrfraud/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cdrfraud {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string timestamp_now() {
    std::time_t t = std::time(nullptr);
    // Honour the reproducible-builds convention for pinned timestamps.
    if (const char* fixed = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::atoll(fixed));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

template <typename F>
auto run_stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

// Holds the output directory for one run; removes what it wrote unless committed.
class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
        lock_ = dir_ / ".cdrfraud.lock";
        std::FILE* f = std::fopen(lock_.c_str(), "wx");
        if (!f) throw Error("output directory " + dir_.string() + " is locked by another run (" + lock_.string() + ")");
        std::fclose(f);
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;
    ~OutputDir() {
        std::error_code ec;
        if (!committed_) {
            for (const auto& p : written_) fs::remove(p, ec);
        }
        fs::remove(lock_, ec);
    }

    fs::path write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        written_.push_back(path);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out << content;
        if (!out.flush()) throw Error("failed writing " + path.string());
        return path;
    }

    void commit() { committed_ = true; }

private:
    fs::path dir_;
    fs::path lock_;
    std::vector<fs::path> written_;
    bool committed_ = false;
};

json metric_json(const Metric& m) { return m ? json(*m) : json(nullptr); }
Metric metric_from(const json& j) { return j.is_null() ? Metric{} : Metric{j.get<double>()}; }

json report_json(std::string_view model, const EvalReport& r) {
    const auto& m = r.metrics;
    return {{"model", model},
            {"threshold", r.threshold},
            {"confusion", {{"tp", r.confusion.tp}, {"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}}},
            {"metrics",
             {{"accuracy", m.accuracy},
              {"precision", metric_json(m.precision)},
              {"recall", metric_json(m.recall)},
              {"f1", metric_json(m.f1)},
              {"auc", metric_json(r.auc)}}},
            {"percent",
             {{"accuracy", format_percent(m.accuracy)},
              {"precision", format_percent(m.precision)},
              {"recall", format_percent(m.recall)},
              {"f1", format_percent(m.f1)},
              {"auc", format_percent(r.auc)}}}};
}

std::string report_text(std::string_view model, const EvalReport& r, const std::vector<std::string>& header,
                        const std::vector<std::string>& notes) {
    std::ostringstream out;
    out << "model: " << model << "\n";
    for (const auto& h : header) out << h << "\n";
    const auto& c = r.confusion;
    out << "\nconfusion matrix (threshold " << r.threshold << ", positive = fraud)\n"
        << "                 predicted 0   predicted 1\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "  actual 0   %14lld %13lld\n  actual 1   %14lld %13lld\n",
                  static_cast<long long>(c.tn), static_cast<long long>(c.fp),
                  static_cast<long long>(c.fn), static_cast<long long>(c.tp));
    out << buf << "\n";
    const auto& m = r.metrics;
    auto line = [&](const char* name, const Metric& v) {
        std::snprintf(buf, sizeof buf, "  %-10s %-12s %6s%%\n", name, format_metric(v).c_str(), format_percent(v).c_str());
        out << buf;
    };
    line("accuracy", m.accuracy);
    line("precision", m.precision);
    line("recall", m.recall);
    line("f1", m.f1);
    line("roc_auc", r.auc);
    for (const auto& n : notes) out << "\nnote: " << n << "\n";
    return out.str();
}

json summary_json(const DataSummary& s) {
    return {{"rows_loaded", s.rows_loaded},   {"rows_dropped", s.rows_dropped},
            {"fraud_rows", s.fraud_rows},     {"train_rows", s.train_rows},
            {"test_rows", s.test_rows},       {"test_fraud_rows", s.test_fraud_rows},
            {"synthetic_rows", s.synthetic_rows}, {"feature_count", s.feature_count}};
}

std::vector<std::string> summary_lines(const DataSummary& s, std::uint64_t seed, LeakageMode mode) {
    return {"seed: " + std::to_string(seed), "mode: " + std::string(to_string(mode)),
            "rows loaded: " + std::to_string(s.rows_loaded) + " (dropped " + std::to_string(s.rows_dropped) +
                " with missing values, " + std::to_string(s.fraud_rows) + " fraud)",
            "train rows: " + std::to_string(s.train_rows) + " (" + std::to_string(s.synthetic_rows) +
                " synthetic)",
            "test rows: " + std::to_string(s.test_rows) + " (" + std::to_string(s.test_fraud_rows) + " fraud)"};
}

std::vector<std::string> mode_notes(LeakageMode mode) {
    if (mode == LeakageMode::clean) return {};
    return {"paper-faithful mode scales and oversamples before splitting; synthetic rows "
            "interpolated from test rows appear in training, so these metrics are optimistic. "
            "Use --mode clean for held-out estimates."};
}

FraudModel fit_model(ModelKind kind, const PipelineConfig& config, const Dataset& train) {
    FraudModel model;
    switch (kind) {
        case ModelKind::rf: {
            auto c = config.forest;
            c.seed = config.seed;
            model.payload = fit_forest(train, c);
            break;
        }
        case ModelKind::xgb: {
            auto c = config.boost;
            c.seed = config.seed;
            model.payload = fit_boosted(train, c);
            break;
        }
        case ModelKind::kmeans: {
            auto c = config.kmeans;
            c.seed = config.seed;
            auto fit = kmeans_fit(train, c);
            KMeansClassifier m;
            m.config = c;
            m.label_map = fit_cluster_labels(fit.labels, train.labels, fit.n_clusters);
            m.centroids = std::move(fit.centroids);
            model.payload = std::move(m);
            break;
        }
        case ModelKind::dbscan: {
            const auto& c = *config.dbscan;
            auto fit = dbscan_fit(train, c);
            DbscanClassifier m;
            m.label_map = fit_cluster_labels(fit.labels, train.labels, fit.n_clusters);
            m.clusters = DbscanModel::from_fit(train.features, fit, c);
            model.payload = std::move(m);
            break;
        }
    }
    return model;
}

EvalReport report_from_json(const json& j) {
    EvalReport r;
    r.threshold = j.at("threshold").get<double>();
    const auto& c = j.at("confusion");
    r.confusion = {c.at("tp").get<Index>(), c.at("tn").get<Index>(), c.at("fp").get<Index>(), c.at("fn").get<Index>()};
    const auto& m = j.at("metrics");
    r.metrics.accuracy = m.at("accuracy").get<double>();
    r.metrics.precision = metric_from(m.at("precision"));
    r.metrics.recall = metric_from(m.at("recall"));
    r.metrics.f1 = metric_from(m.at("f1"));
    r.auc = metric_from(m.at("auc"));
    return r;
}

}  // namespace

std::string_view to_string(LeakageMode mode) {
    return mode == LeakageMode::clean ? "clean" : "paper-faithful";
}

LeakageMode parse_leakage_mode(std::string_view text) {
    if (text == "clean") return LeakageMode::clean;
    if (text == "paper-faithful") return LeakageMode::paper_faithful;
    throw ConfigError("unknown mode '" + std::string(text) + "' (expected clean or paper-faithful)");
}

void PipelineConfig::validate() const {
    if (models.empty()) throw ConfigError("select at least one model (rf, xgb, kmeans, dbscan)");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie strictly between 0 and 1");
    }
    if (input.empty()) throw ConfigError("no input file given");
    if (out_dir.empty()) throw ConfigError("no output directory given");
    smote.validate();
    for (auto kind : models) {
        if (std::count(models.begin(), models.end(), kind) > 1) {
            throw ConfigError("model '" + std::string(to_string(kind)) + "' selected twice");
        }
        switch (kind) {
            case ModelKind::rf:
                if (forest.n_trees < 1) throw ConfigError("forest needs at least one tree");
                break;
            case ModelKind::xgb: boost.validate(); break;
            case ModelKind::kmeans:
                if (kmeans.k < 1 || kmeans.max_iters < 1) throw ConfigError("invalid k-means settings");
                break;
            case ModelKind::dbscan:
                if (!dbscan) throw ConfigError("dbscan needs explicit --dbscan-eps and --dbscan-minpts");
                dbscan->validate();
                break;
        }
    }
}

PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log) {
    config.validate();
    OutputDir out(config.out_dir);
    PipelineResult result;
    auto& summary = result.data;

    const auto table = run_stage("load", [&] {
        const SchemaOverrides schema = config.schema ? load_schema(*config.schema) : SchemaOverrides{};
        return load_csv(config.input, schema);
    });
    summary.rows_loaded = table.row_count();
    auto [complete, dropped] = run_stage("drop_missing", [&] { return drop_missing(table); });
    summary.rows_dropped = dropped;
    const Dataset data = run_stage("encode", [&] { return encode(complete); });
    summary.fraud_rows = data.count(kPositive);
    summary.feature_count = data.cols();

    SmoteConfig smote = config.smote;
    smote.seed = config.seed;
    Dataset train;
    Dataset test;
    ScalerParams scaler;
    if (config.mode == LeakageMode::clean) {
        auto parts = run_stage("split", [&] { return split(data, config.test_fraction, config.seed); });
        scaler = run_stage("scale", [&] { return fit_scaler(parts.train); });
        train = transform(parts.train, scaler);
        test = transform(parts.test, scaler);
        const Index before = train.rows();
        train = run_stage("smote", [&] { return balance(train, smote); });
        summary.synthetic_rows = train.rows() - before;
    } else {
        scaler = run_stage("scale", [&] { return fit_scaler(data); });
        const Dataset scaled = transform(data, scaler);
        const Dataset balanced = run_stage("smote", [&] { return balance(scaled, smote); });
        summary.synthetic_rows = balanced.rows() - scaled.rows();
        auto parts = run_stage("split", [&] { return split(balanced, config.test_fraction, config.seed); });
        train = std::move(parts.train);
        test = std::move(parts.test);
    }
    summary.train_rows = train.rows();
    summary.test_rows = test.rows();
    summary.test_fraud_rows = test.count(kPositive);

    const auto generated_at = timestamp_now();
    const auto header = summary_lines(summary, config.seed, config.mode);
    const auto notes = mode_notes(config.mode);
    if (log) {
        for (const auto& h : header) *log << h << "\n";
    }

    std::vector<ComparisonRow> comparison;
    for (auto kind : config.models) {
        const std::string name(to_string(kind));
        ModelRun run;
        run.kind = kind;
        const auto start = std::chrono::steady_clock::now();
        FraudModel model = run_stage(("fit " + name).c_str(), [&] { return fit_model(kind, config, train); });
        run.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        model.encoding = data.encoding;
        model.scaler = scaler;
        model.metadata = {config.seed, std::string(to_string(config.mode)), fingerprint(train), train.rows(),
                          generated_at};

        run.report = run_stage(("evaluate " + name).c_str(), [&] {
            return evaluate(model.score_scaled(test.features), test.labels);
        });

        run_stage(("write " + name).c_str(), [&] {
            run.model_file = out.write(name + ".model", serialize_model(model));
            json report = report_json(name, run.report);
            report["generated_at"] = generated_at;
            report["seed"] = config.seed;
            report["mode"] = to_string(config.mode);
            report["data"] = summary_json(summary);
            report["notes"] = notes;
            if (const auto* boosted = std::get_if<BoostedModel>(&model.payload)) {
                report["objective_trace"] = boosted->objective_trace;
            }
            out.write(name + ".report.json", report.dump(2) + "\n");
            auto text_header = header;
            text_header.insert(text_header.begin(), "generated_at: " + generated_at);
            out.write(name + ".report.txt", report_text(name, run.report, text_header, notes));
            out.write(name + ".roc.csv", roc_csv(run.report.roc_points));
            return 0;
        });
        if (log) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%s: fit %.2fs, accuracy %s, auc %s\n", name.c_str(), run.fit_seconds,
                          format_metric(run.report.metrics.accuracy, 4).c_str(),
                          format_metric(run.report.auc, 4).c_str());
            *log << buf;
        }
        comparison.push_back({name, run.report});
        result.runs.push_back(std::move(run));
    }

    run_stage("compare", [&] {
        out.write("comparison.csv", comparison_csv(comparison));
        out.write("comparison.txt", comparison_table(comparison));
        return 0;
    });
    if (log) *log << "\n" << comparison_table(comparison);
    out.commit();
    return result;
}

Index predict_file(const fs::path& model_path, const fs::path& input, const fs::path& output) {
    const FraudModel model = load_model(model_path);
    const CdrTable table = load_csv(input, model.encoding.schema(), /*require_label=*/false);
    const ScoreVector scores = table.row_count() > 0 ? model.score(table) : ScoreVector{};

    std::ostringstream out;
    out << "row_id,score,label\n";
    char buf[64];
    for (Index i = 0; i < scores.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%d\n", static_cast<long long>(i + 1), scores(i),
                      scores(i) >= 0.5 ? kPositive : kNegative);
        out << buf;
    }
    std::ofstream file(output, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write " + output.string());
    file << out.str();
    if (!file.flush()) throw Error("failed writing " + output.string());
    return scores.size();
}

EvalReport evaluate_file(const fs::path& model_path, const fs::path& input,
                         const std::optional<fs::path>& out_dir) {
    const FraudModel model = load_model(model_path);
    const CdrTable table = load_csv(input, model.encoding.schema());
    const auto [complete, dropped] = drop_missing(table);
    const Dataset data = encode_with(complete, model.encoding);
    const EvalReport report = evaluate(model.score(data.features), data.labels);
    if (out_dir) {
        OutputDir out(*out_dir);
        const std::string name(to_string(model.kind()));
        const auto generated_at = timestamp_now();
        json j = report_json(name, report);
        j["generated_at"] = generated_at;
        j["input"] = input.string();
        j["rows_evaluated"] = data.rows();
        j["rows_dropped"] = dropped;
        out.write(name + ".report.json", j.dump(2) + "\n");
        out.write(name + ".report.txt",
                  report_text(name, report,
                              {"generated_at: " + generated_at, "input: " + input.string(),
                               "rows evaluated: " + std::to_string(data.rows()) + " (dropped " +
                                   std::to_string(dropped) + ")"},
                              {}));
        out.write(name + ".roc.csv", roc_csv(report.roc_points));
        out.commit();
    }
    return report;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::string out = "model,accuracy,precision,recall,f1,auc\n";
    for (const auto& r : rows) {
        const auto& m = r.report.metrics;
        out += r.model + "," + format_metric(m.accuracy) + "," + format_metric(m.precision) + "," +
               format_metric(m.recall) + "," + format_metric(m.f1) + "," + format_metric(r.report.auc) + "\n";
    }
    return out;
}

std::string comparison_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-10s", "Metric");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%10s", r.model.c_str());
        out << buf;
    }
    out << "\n";
    auto line = [&](const char* name, auto get) {
        std::snprintf(buf, sizeof buf, "%-10s", name);
        out << buf;
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%10s", format_percent(get(r.report)).c_str());
            out << buf;
        }
        out << "\n";
    };
    line("Accuracy", [](const EvalReport& r) { return Metric{r.metrics.accuracy}; });
    line("Precision", [](const EvalReport& r) { return r.metrics.precision; });
    line("Recall", [](const EvalReport& r) { return r.metrics.recall; });
    line("F1-Score", [](const EvalReport& r) { return r.metrics.f1; });
    line("ROC AUC", [](const EvalReport& r) { return r.auc; });
    return out.str();
}

std::vector<ComparisonRow> read_reports(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() > 12 && name.ends_with(".report.json")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no *.report.json files in " + dir.string());
    return read_reports(files);
}

std::vector<ComparisonRow> read_reports(const std::vector<fs::path>& files) {
    std::vector<ComparisonRow> rows;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw Error("cannot read " + f.string());
        try {
            const json j = json::parse(in);
            rows.push_back({j.at("model").get<std::string>(), report_from_json(j)});
        } catch (const json::exception& e) {
            throw Error("malformed report " + f.string() + ": " + e.what());
        }
    }
    return rows;
}

std::string roc_csv(const std::vector<RocPoint>& points) {
    std::string out = "fpr,tpr\n";
    char buf[64];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fpr, p.tpr);
        out += buf;
    }
    return out;
}

}  // namespace cdrfraud
