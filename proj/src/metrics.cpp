#include "cdrfraud/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cdrfraud/error.hpp"

namespace cdrfraud {

ConfusionMatrix confusion(const LabelVector& predicted, const LabelVector& truth) {
    if (predicted.size() != truth.size()) {
        throw DimensionError("predictions (" + std::to_string(predicted.size()) + ") and labels (" +
                             std::to_string(truth.size()) + ") differ in length");
    }
    if (truth.size() == 0) throw Error("confusion matrix of zero rows");
    ConfusionMatrix cm;
    for (Index i = 0; i < truth.size(); ++i) {
        const bool p = predicted(i) == kPositive;
        const bool t = truth(i) == kPositive;
        if (p && t) ++cm.tp;
        else if (!p && !t) ++cm.tn;
        else if (p) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

ScalarMetrics scalar_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw Error("metrics of an empty confusion matrix");
    const auto d = [](Index v) { return static_cast<double>(v); };
    ScalarMetrics m;
    m.accuracy = d(cm.tp + cm.tn) / d(cm.total());
    if (cm.tp + cm.fp > 0) m.precision = d(cm.tp) / d(cm.tp + cm.fp);
    if (cm.tp + cm.fn > 0) m.recall = d(cm.tp) / d(cm.tp + cm.fn);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    return m;
}

RocCurve roc_curve(const ScoreVector& scores, const LabelVector& truth) {
    if (scores.size() != truth.size()) throw DimensionError("scores and labels differ in length");
    const Index positives = (truth.array() == kPositive).count();
    const Index negatives = truth.size() - positives;
    if (positives == 0 || negatives == 0) throw Error("ROC needs both classes in the labels");

    std::vector<Index> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });

    RocCurve out;
    out.points.push_back({0.0, 0.0});
    Index tp = 0;
    Index fp = 0;
    double area2 = 0.0;  // twice the area, in units of (1/P)(1/N)
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores(order[i]);
        const Index tp0 = tp;
        const Index fp0 = fp;
        for (; i < order.size() && scores(order[i]) == s; ++i) {
            (truth(order[i]) == kPositive ? tp : fp)++;
        }
        area2 += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
        out.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                              static_cast<double>(tp) / static_cast<double>(positives)});
    }
    out.auc = area2 / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
    return out;
}

EvalReport evaluate(const ScoreVector& scores, const LabelVector& truth, double threshold) {
    if (scores.size() != truth.size()) throw DimensionError("scores and labels differ in length");
    EvalReport report;
    report.threshold = threshold;
    const LabelVector predicted = (scores.array() >= threshold).cast<int>();
    report.confusion = confusion(predicted, truth);
    report.metrics = scalar_metrics(report.confusion);
    const Index positives = (truth.array() == kPositive).count();
    if (positives > 0 && positives < truth.size()) {
        auto roc = roc_curve(scores, truth);
        report.auc = roc.auc;
        report.roc_points = std::move(roc.points);
    }
    return report;
}

std::string format_metric(const Metric& m, int digits) {
    if (!m) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, *m);
    return buf;
}

std::string format_percent(const Metric& m) {
    if (!m) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", *m * 100.0);
    return buf;
}

}  // namespace cdrfraud
