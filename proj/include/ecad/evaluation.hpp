#pragma once

#include "ecad/detector.hpp"
#include "ecad/scenario.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace ecad {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const std::vector<bool>& labels, const std::vector<bool>& flags);

/// 0/0 ratios evaluate to 0 and set `degenerate`.
struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;
};

Metrics metrics(const ConfusionCounts& c);

/// Expected F1 of a guesser that calls every point anomalous when a fraction
/// q of points are anomalies: recall 1, precision q.
double rguess_expected_f1(double q);

struct SensorEvaluation {
    std::size_t sensor = 0;
    std::size_t evaluated = 0;
    double q = 0.0;  // anomaly fraction among evaluated points
    ConfusionCounts counts;
    Metrics metrics;
    double rguess_f1 = 0.0;
};

struct EvaluationReport {
    std::vector<SensorEvaluation> sensors;
    ConfusionCounts overall;
    Metrics overall_metrics;
    double mean_f1 = 0.0;
    double mean_rguess_f1 = 0.0;
    double flag_rate = 0.0;
    std::size_t unlabeled_skipped = 0;

    nlohmann::json to_json() const;
};

/// Scores detections against ground truth; detections at unlabeled cells are skipped.
EvaluationReport evaluate(const std::vector<Detection>& detections, const ScenarioTruth& truth);

/// Per-sensor CSV `sensor,q,precision,recall,f1`.
std::string format_report_csv(const EvaluationReport& report);
void write_report(const std::string& csv_path, const std::string& json_path, const EvaluationReport& report);

/// `t,k,p_value,flagged,label` rows, the data behind a p-value trajectory plot.
std::string format_pvalue_trajectories(const std::vector<Detection>& detections, const ScenarioTruth& truth);

}  // namespace ecad
