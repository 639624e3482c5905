// Command-line front end: train, predict, evaluate, compare.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdrfraud/pipeline.hpp"

namespace {

std::vector<cdrfraud::ModelKind> parse_models(const std::string& list) {
    std::vector<cdrfraud::ModelKind> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(cdrfraud::parse_model_kind(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Telecom CDR fraud detection: tree ensembles, SMOTE balancing and clustering baselines"};
    app.require_subcommand(1);

    // train
    cdrfraud::PipelineConfig config;
    std::string input;
    std::string schema;
    std::string models = "rf,xgb";
    std::string mode = "clean";
    std::string out_dir = "out";
    int rf_max_depth = 0;
    int rf_mtry = 0;
    double dbscan_eps = 0.0;
    int dbscan_minpts = 0;
    auto* train = app.add_subcommand("train", "Run the full pipeline and write models and reports");
    train->add_option("--input", input, "CDR CSV file")->required()->check(CLI::ExistingFile);
    train->add_option("--schema", schema, "Column kind overrides (column = kind per line)")
        ->check(CLI::ExistingFile);
    train->add_option("--test-fraction", config.test_fraction, "Held-out fraction")->capture_default_str();
    train->add_option("--seed", config.seed, "Seed for split, SMOTE and learners")->capture_default_str();
    train->add_option("--models", models, "Comma list of rf,xgb,kmeans,dbscan")->capture_default_str();
    train->add_option("--smote-k", config.smote.k_neighbors, "SMOTE neighbours")->capture_default_str();
    train->add_option("--smote-ratio", config.smote.target_ratio, "SMOTE minority/majority target")
        ->capture_default_str();
    train->add_option("--mode", mode, "clean | paper-faithful")->capture_default_str();
    train->add_option("--out", out_dir, "Output directory")->capture_default_str();
    train->add_option("--rf-trees", config.forest.n_trees, "Forest size")->capture_default_str();
    train->add_option("--rf-max-depth", rf_max_depth, "Forest tree depth, 0 = unlimited")->capture_default_str();
    train->add_option("--rf-mtry", rf_mtry, "Features per split, 0 = ceil(sqrt(p))")->capture_default_str();
    train->add_option("--rf-min-leaf", config.forest.min_samples_leaf, "Minimum rows per leaf")
        ->capture_default_str();
    train->add_flag("!--rf-no-bootstrap", config.forest.bootstrap, "Fit every tree on all rows");
    train->add_option("--rf-threads", config.forest.threads, "Worker threads, 0 = all cores")
        ->capture_default_str();
    train->add_option("--xgb-rounds", config.boost.n_rounds, "Boosting rounds")->capture_default_str();
    train->add_option("--xgb-eta", config.boost.learning_rate, "Learning rate")->capture_default_str();
    train->add_option("--xgb-max-depth", config.boost.max_depth, "Boosted tree depth")->capture_default_str();
    train->add_option("--xgb-lambda", config.boost.lambda, "Leaf weight L2 penalty")->capture_default_str();
    train->add_option("--xgb-gamma", config.boost.gamma, "Per-leaf penalty")->capture_default_str();
    train->add_option("--xgb-base-score", config.boost.base_score, "Initial probability")->capture_default_str();
    train->add_option("--kmeans-k", config.kmeans.k, "Clusters")->capture_default_str();
    train->add_option("--kmeans-max-iters", config.kmeans.max_iters, "Lloyd iterations")->capture_default_str();
    train->add_option("--dbscan-eps", dbscan_eps, "Neighbourhood radius (scaled units)");
    train->add_option("--dbscan-minpts", dbscan_minpts, "Core point threshold");

    // predict
    std::string model_path;
    std::string output;
    auto* predict = app.add_subcommand("predict", "Score a CSV with a saved model");
    predict->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    predict->add_option("--input", input, "CSV to score")->required()->check(CLI::ExistingFile);
    predict->add_option("--output", output, "Scores CSV (row_id,score,label)")->required();

    // evaluate
    std::string eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved model on a labeled CSV");
    evaluate->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--input", input, "Labeled CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--out", eval_out, "Directory for report and ROC files");

    // compare
    std::string reports_dir;
    std::vector<std::string> report_files;
    auto* compare = app.add_subcommand("compare", "Tabulate metrics from report files");
    compare->add_option("--out", reports_dir, "Directory holding *.report.json");
    compare->add_option("--reports", report_files, "Explicit report files")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            config.input = input;
            if (!schema.empty()) config.schema = schema;
            config.models = parse_models(models);
            config.mode = cdrfraud::parse_leakage_mode(mode);
            config.out_dir = out_dir;
            config.forest.max_depth = rf_max_depth;
            if (rf_mtry > 0) config.forest.feature_subset = rf_mtry;
            if (train->count("--dbscan-eps") || train->count("--dbscan-minpts")) {
                config.dbscan = cdrfraud::DbscanConfig{dbscan_eps, dbscan_minpts};
            }
            cdrfraud::run_pipeline(config, &std::cout);
        } else if (*predict) {
            const auto n = cdrfraud::predict_file(model_path, input, output);
            std::cout << "scored " << n << " rows -> " << output << "\n";
        } else if (*evaluate) {
            std::optional<std::filesystem::path> dir;
            if (!eval_out.empty()) dir = eval_out;
            const auto report = cdrfraud::evaluate_file(model_path, input, dir);
            const std::string kind(cdrfraud::to_string(cdrfraud::load_model(model_path).kind()));
            std::cout << cdrfraud::comparison_table({{kind, report}});
        } else if (*compare) {
            std::vector<cdrfraud::ComparisonRow> rows;
            if (!report_files.empty()) {
                rows = cdrfraud::read_reports(std::vector<std::filesystem::path>(report_files.begin(), report_files.end()));
            } else {
                rows = cdrfraud::read_reports(reports_dir.empty() ? std::filesystem::path("out")
                                                                  : std::filesystem::path(reports_dir));
            }
            std::cout << cdrfraud::comparison_table(rows);
            if (!reports_dir.empty() && report_files.empty()) {
                std::ofstream(std::filesystem::path(reports_dir) / "comparison.csv") << cdrfraud::comparison_csv(rows);
                std::ofstream(std::filesystem::path(reports_dir) / "comparison.txt") << cdrfraud::comparison_table(rows);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
