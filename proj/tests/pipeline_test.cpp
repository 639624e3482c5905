#include <gtest/gtest.h>

#include <cstdlib>
#include <regex>
#include <sstream>

#include "cdrfraud/pipeline.hpp"
#include "cdrfraud/preprocess.hpp"
#include "support/synthetic.hpp"

namespace cdrfraud {
namespace {

namespace fs = std::filesystem;

// Blanks the timestamp fields so runs can be compared byte for byte.
std::string mask_timestamps(const std::string& text) {
    static const std::regex stamp(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ)");
    return std::regex_replace(text, stamp, "<time>");
}

PipelineConfig small_config(const fs::path& input, const fs::path& out) {
    PipelineConfig c;
    c.input = input;
    c.out_dir = out;
    c.models = {ModelKind::rf, ModelKind::xgb};
    c.forest.n_trees = 15;
    c.forest.threads = 2;
    c.boost.n_rounds = 15;
    return c;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(CDRFRAUD_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Pipeline : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::make_unique<testing::TempDir>("pipeline");
        input_ = *dir_ / "cdr.csv";
        testing::write_synthetic_cdr(input_, {1500, 0.087, 3});
    }
    fs::path path(const std::string& name) const { return *dir_ / name; }

    std::unique_ptr<testing::TempDir> dir_;
    fs::path input_;
};

TEST_F(Pipeline, WritesEveryArtifact) {
    const auto result = run_pipeline(small_config(input_, path("out")));
    ASSERT_EQ(result.runs.size(), 2u);
    for (const char* name : {"rf.model", "rf.report.json", "rf.report.txt", "rf.roc.csv", "xgb.model",
                             "xgb.report.json", "xgb.report.txt", "xgb.roc.csv", "comparison.csv",
                             "comparison.txt"}) {
        EXPECT_TRUE(fs::exists(path("out") / name)) << name;
    }
    EXPECT_FALSE(fs::exists(path("out") / ".cdrfraud.lock"));
    EXPECT_EQ(testing::read_file(path("out") / "rf.roc.csv").substr(0, 8), "fpr,tpr\n");

    const auto csv = testing::read_file(path("out") / "comparison.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,accuracy,precision,recall,f1,auc");
    const auto table = testing::read_file(path("out") / "comparison.txt");
    EXPECT_NE(table.find("ROC AUC"), std::string::npos);

    EXPECT_EQ(result.data.rows_loaded, 1500);
    EXPECT_EQ(result.data.fraud_rows, 131);
    EXPECT_EQ(result.data.test_rows, 300);
    EXPECT_EQ(result.data.feature_count, 10);
    EXPECT_GE(result.runs[0].report.metrics.accuracy, 0.97);
}

TEST_F(Pipeline, ReportCarriesSeedModeAndObjective) {
    run_pipeline(small_config(input_, path("out")));
    const auto report = testing::read_file(path("out") / "xgb.report.json");
    EXPECT_NE(report.find("\"seed\": 42"), std::string::npos);
    EXPECT_NE(report.find("\"mode\": \"clean\""), std::string::npos);
    EXPECT_NE(report.find("\"objective_trace\""), std::string::npos);
    const auto rows = read_reports(path("out"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].model, "rf");
}

TEST_F(Pipeline, SameSeedGivesIdenticalArtifacts) {
    run_pipeline(small_config(input_, path("a")));
    run_pipeline(small_config(input_, path("b")));
    for (const char* name : {"rf.model", "xgb.model", "rf.report.json", "xgb.report.txt", "rf.roc.csv",
                             "comparison.csv"}) {
        EXPECT_EQ(mask_timestamps(testing::read_file(path("a") / name)),
                  mask_timestamps(testing::read_file(path("b") / name)))
            << name;
    }
    auto other = small_config(input_, path("c"));
    other.seed = 7;
    run_pipeline(other);
    EXPECT_NE(mask_timestamps(testing::read_file(path("a") / "rf.model")),
              mask_timestamps(testing::read_file(path("c") / "rf.model")));
}

TEST_F(Pipeline, ScalerNeverSeesTestRows) {
    // Push every test row's numeric values far outside the training range.
    const auto table = load_csv(input_);
    const auto data = encode(drop_missing(table).first);
    const auto parts = split(data, 0.2, 42);

    std::istringstream src(testing::read_file(input_));
    std::string line;
    std::getline(src, line);
    std::string edited = line + "\n";
    std::size_t next_test = 0;
    for (Index row = 0; std::getline(src, line); ++row) {
        if (next_test < parts.test_rows.size() && parts.test_rows[next_test] == row) {
            ++next_test;
            // account_length is the fourth field.
            std::size_t pos = 0;
            for (int f = 0; f < 3; ++f) pos = line.find(',', pos) + 1;
            line.insert(pos, "9");
        }
        edited += line + "\n";
    }
    ASSERT_EQ(next_test, parts.test_rows.size());
    const auto perturbed = path("perturbed.csv");
    testing::write_file(perturbed, edited);

    auto config = small_config(input_, path("base"));
    run_pipeline(config);
    config.input = perturbed;
    config.out_dir = path("moved");
    run_pipeline(config);
    for (const char* name : {"rf.model", "xgb.model"}) {
        EXPECT_EQ(mask_timestamps(testing::read_file(path("base") / name)),
                  mask_timestamps(testing::read_file(path("moved") / name)))
            << name;
    }

    const auto model = load_model(path("moved") / "rf.model");
    const auto moved = encode(drop_missing(load_csv(perturbed)).first);
    const auto& names = model.scaler.feature_names;
    const auto col = static_cast<Index>(std::find(names.begin(), names.end(), "account_length") - names.begin());
    ASSERT_LT(col, model.scaler.size());
    EXPECT_LT(model.scaler.max(col), moved.features.col(col).maxCoeff());
}

TEST_F(Pipeline, PaperFaithfulModeLetsTestRowsIn) {
    auto config = small_config(input_, path("pf"));
    config.models = {ModelKind::rf};
    config.mode = LeakageMode::paper_faithful;
    const auto result = run_pipeline(config);
    // SMOTE ran on all rows, so the test split holds synthetic rows too.
    EXPECT_EQ(result.data.test_rows, 2 * std::llround(0.2 * (1500 - 131)));
    const auto report = testing::read_file(path("pf") / "rf.report.json");
    EXPECT_NE(report.find("optimistic"), std::string::npos);
}

TEST_F(Pipeline, ClusteringBaselines) {
    auto config = small_config(input_, path("clusters"));
    config.models = {ModelKind::kmeans, ModelKind::dbscan};
    config.dbscan = DbscanConfig{0.3, 5};
    const auto result = run_pipeline(config);
    ASSERT_EQ(result.runs.size(), 2u);
    const auto model = load_model(path("clusters") / "dbscan.model");
    EXPECT_EQ(model.kind(), ModelKind::dbscan);
}

TEST_F(Pipeline, ConfigValidation) {
    auto config = small_config(input_, path("bad"));
    config.models.clear();
    EXPECT_THROW(run_pipeline(config), ConfigError);
    EXPECT_FALSE(fs::exists(path("bad")));
    config.models = {ModelKind::dbscan};
    EXPECT_THROW(run_pipeline(config), ConfigError);
    config.models = {ModelKind::rf, ModelKind::rf};
    EXPECT_THROW(run_pipeline(config), ConfigError);
    EXPECT_THROW(parse_leakage_mode("sloppy"), ConfigError);
}

TEST_F(Pipeline, StageErrorsNameTheStageAndCleanUp) {
    testing::write_file(path("broken.csv"), "a,b,fraud\n1,2,1\n3,4\n");
    auto config = small_config(path("broken.csv"), path("broken"));
    try {
        run_pipeline(config);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_NE(std::string(e.what()).find("load"), std::string::npos) << e.what();
    }
    EXPECT_TRUE(fs::is_empty(path("broken")));

    // A failure in a later model removes files already written for earlier ones.
    config = small_config(input_, path("late"));
    config.models = {ModelKind::rf, ModelKind::kmeans};
    config.kmeans.k = 100000;
    EXPECT_THROW(run_pipeline(config), StageError);
    EXPECT_TRUE(fs::is_empty(path("late")));
}

TEST_F(Pipeline, LockedDirectoryIsRefused) {
    fs::create_directories(path("locked"));
    testing::write_file(path("locked") / ".cdrfraud.lock", "");
    EXPECT_THROW(run_pipeline(small_config(input_, path("locked"))), Error);
    EXPECT_TRUE(fs::exists(path("locked") / ".cdrfraud.lock"));
}

TEST_F(Pipeline, EvaluateFileMatchesHeldOutShape) {
    run_pipeline(small_config(input_, path("out")));
    const auto report = evaluate_file(path("out") / "rf.model", input_, path("eval"));
    EXPECT_EQ(report.confusion.total(), 1500);
    EXPECT_TRUE(fs::exists(path("eval") / "rf.report.json"));
    EXPECT_TRUE(fs::exists(path("eval") / "rf.roc.csv"));
}

// ---- command line ---------------------------------------------------------

TEST_F(Pipeline, CliTrainPredictEvaluateCompare) {
    const auto out = path("cli");
    ASSERT_EQ(run_cli("train --input " + input_.string() + " --out " + out.string() +
                          " --models rf --rf-trees 20",
                      path("train.log")),
              0)
        << testing::read_file(path("train.log"));
    EXPECT_NE(testing::read_file(path("train.log")).find("Accuracy"), std::string::npos);

    ASSERT_EQ(run_cli("predict --model " + (out / "rf.model").string() + " --input " + input_.string() +
                          " --output " + path("scores.csv").string(),
                      path("predict.log")),
              0)
        << testing::read_file(path("predict.log"));
    const auto scores = testing::read_file(path("scores.csv"));
    EXPECT_EQ(scores.substr(0, scores.find('\n')), "row_id,score,label");
    EXPECT_EQ(std::count(scores.begin(), scores.end(), '\n'), 1501);

    // Scoring the training file with deep trees reproduces nearly every label.
    std::istringstream truth_lines(testing::read_file(input_));
    std::istringstream score_lines(scores);
    std::string t;
    std::string s;
    std::getline(truth_lines, t);
    std::getline(score_lines, s);
    int agree = 0;
    int total = 0;
    while (std::getline(truth_lines, t) && std::getline(score_lines, s)) {
        agree += t.back() == s.back();
        ++total;
    }
    EXPECT_GE(static_cast<double>(agree) / total, 0.999);

    ASSERT_EQ(run_cli("evaluate --model " + (out / "rf.model").string() + " --input " + input_.string(),
                      path("eval.log")),
              0);
    EXPECT_NE(testing::read_file(path("eval.log")).find("rf"), std::string::npos);

    ASSERT_EQ(run_cli("compare --out " + out.string(), path("compare.log")), 0);
    EXPECT_NE(testing::read_file(path("compare.log")).find("F1-Score"), std::string::npos);
}

TEST_F(Pipeline, CliEmptyInputGivesEmptyOutput) {
    const auto out = path("cli");
    ASSERT_EQ(run_cli("train --input " + input_.string() + " --out " + out.string() + " --models rf --rf-trees 3",
                      path("train.log")),
              0);
    const auto header = testing::read_file(input_).substr(0, testing::read_file(input_).find('\n') + 1);
    testing::write_file(path("empty.csv"), header);
    ASSERT_EQ(run_cli("predict --model " + (out / "rf.model").string() + " --input " +
                          path("empty.csv").string() + " --output " + path("empty_scores.csv").string(),
                      path("predict.log")),
              0)
        << testing::read_file(path("predict.log"));
    EXPECT_EQ(testing::read_file(path("empty_scores.csv")), "row_id,score,label\n");
}

TEST_F(Pipeline, CliMissingColumnIsNamed) {
    const auto out = path("cli");
    ASSERT_EQ(run_cli("train --input " + input_.string() + " --out " + out.string() + " --models rf --rf-trees 3",
                      path("train.log")),
              0);
    testing::write_file(path("partial.csv"), "phone_number,state,international_plan,account_length\n555-0000,TX,no,100\n");
    EXPECT_EQ(run_cli("predict --model " + (out / "rf.model").string() + " --input " +
                          path("partial.csv").string() + " --output " + path("s.csv").string(),
                      path("predict.log")),
              1);
    const auto log = testing::read_file(path("predict.log"));
    EXPECT_NE(log.find("vmail_messages"), std::string::npos) << log;
}

TEST_F(Pipeline, CliUnseenCategoryNamesTheRow) {
    const auto out = path("cli");
    ASSERT_EQ(run_cli("train --input " + input_.string() + " --out " + out.string() + " --models rf --rf-trees 3",
                      path("train.log")),
              0);
    std::istringstream src(testing::read_file(input_));
    std::string header;
    std::string first;
    std::string second;
    std::getline(src, header);
    std::getline(src, first);
    std::getline(src, second);
    const auto a = second.find(',');
    second = second.substr(0, a + 1) + "ZZ" + second.substr(second.find(',', a + 1));
    testing::write_file(path("unseen.csv"), header + "\n" + first + "\n" + second + "\n");
    EXPECT_EQ(run_cli("predict --model " + (out / "rf.model").string() + " --input " +
                          path("unseen.csv").string() + " --output " + path("s.csv").string(),
                      path("predict.log")),
              1);
    const auto log = testing::read_file(path("predict.log"));
    EXPECT_NE(log.find("row 2"), std::string::npos) << log;
    EXPECT_NE(log.find("ZZ"), std::string::npos) << log;
}

TEST_F(Pipeline, CliRejectsEmptyModelList) {
    EXPECT_EQ(run_cli("train --input " + input_.string() + " --out " + path("none").string() + " --models ''",
                      path("train.log")),
              1);
    EXPECT_NE(testing::read_file(path("train.log")).find("at least one model"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("none")));
}

TEST_F(Pipeline, CliTruncatedModelIsRejected) {
    const auto out = path("cli");
    ASSERT_EQ(run_cli("train --input " + input_.string() + " --out " + out.string() + " --models xgb --xgb-rounds 5",
                      path("train.log")),
              0);
    const auto text = testing::read_file(out / "xgb.model");
    testing::write_file(path("cut.model"), text.substr(0, text.size() * 2 / 3));
    EXPECT_EQ(run_cli("predict --model " + path("cut.model").string() + " --input " + input_.string() +
                          " --output " + path("s.csv").string(),
                      path("predict.log")),
              1);
    EXPECT_NE(testing::read_file(path("predict.log")).find("checksum"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("s.csv")));
}

}  // namespace
}  // namespace cdrfraud
