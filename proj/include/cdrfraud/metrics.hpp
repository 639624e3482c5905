#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cdrfraud/types.hpp"

namespace cdrfraud {

struct ConfusionMatrix {
    Index tp = 0;
    Index tn = 0;
    Index fp = 0;
    Index fn = 0;

    Index total() const { return tp + tn + fp + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Counts with fraud (1) as the positive class.
ConfusionMatrix confusion(const LabelVector& predicted, const LabelVector& truth);

/// A metric that may be undefined (e.g. precision with no positive predictions).
using Metric = std::optional<double>;

struct ScalarMetrics {
    double accuracy = 0.0;
    Metric precision;
    Metric recall;
    Metric f1;
};

ScalarMetrics scalar_metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
    /// From (0,0) to (1,1); one vertex per distinct score.
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Sweeps thresholds from the highest score down; tied scores move the
/// curve diagonally, so the trapezoidal area equals the pair-counting AUC.
RocCurve roc_curve(const ScoreVector& scores, const LabelVector& truth);

struct EvalReport {
    ConfusionMatrix confusion;
    ScalarMetrics metrics;
    Metric auc;
    std::vector<RocPoint> roc_points;
    double threshold = 0.5;
};

/// Labels are scores >= threshold. AUC is undefined when truth holds one class.
EvalReport evaluate(const ScoreVector& scores, const LabelVector& truth, double threshold = 0.5);

/// Full precision, or "n/a".
std::string format_metric(const Metric& m, int digits = 7);
/// Percentage at one decimal ("99.9"), or "n/a".
std::string format_percent(const Metric& m);

}  // namespace cdrfraud
