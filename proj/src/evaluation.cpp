#include "ecad/evaluation.hpp"

#include "csv.hpp"

#include <stdexcept>

namespace ecad {

ConfusionCounts confusion(const std::vector<bool>& labels, const std::vector<bool>& flags) {
    if (labels.size() != flags.size()) throw std::invalid_argument("confusion: labels and flags differ in length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            flags[i] ? ++c.tp : ++c.fn;
        } else {
            flags[i] ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    Metrics m;
    auto ratio = [&](std::size_t num, std::size_t den) {
        if (den == 0) {
            m.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    const double sum = m.precision + m.recall;
    if (sum > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / sum;
    } else {
        m.f1 = 0.0;
        m.degenerate = true;
    }
    return m;
}

double rguess_expected_f1(double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("anomaly fraction must lie in [0, 1]");
    return 2.0 * q / (q + 1.0);
}

EvaluationReport evaluate(const std::vector<Detection>& detections, const ScenarioTruth& truth) {
    EvaluationReport report;
    const std::size_t K = truth.cols();
    std::vector<std::vector<bool>> labels(K), flags(K);
    std::size_t flagged = 0, evaluated = 0;
    for (const auto& d : detections) {
        if (d.t >= truth.rows() || d.k >= K) {
            throw std::out_of_range("detection at (" + std::to_string(d.t) + ", " + std::to_string(d.k) +
                                    ") lies outside the truth grid");
        }
        if (!truth.labeled(d.t, d.k)) {
            ++report.unlabeled_skipped;
            continue;
        }
        labels[d.k].push_back(truth.is_anomaly(d.t, d.k));
        flags[d.k].push_back(d.flagged);
        flagged += d.flagged ? 1 : 0;
        ++evaluated;
    }
    double f1_sum = 0.0, rguess_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        if (labels[k].empty()) continue;
        SensorEvaluation s;
        s.sensor = k;
        s.evaluated = labels[k].size();
        s.counts = confusion(labels[k], flags[k]);
        s.q = static_cast<double>(s.counts.tp + s.counts.fn) / static_cast<double>(s.evaluated);
        s.metrics = metrics(s.counts);
        s.rguess_f1 = rguess_expected_f1(s.q);
        report.overall += s.counts;
        f1_sum += s.metrics.f1;
        rguess_sum += s.rguess_f1;
        report.sensors.push_back(s);
    }
    report.overall_metrics = metrics(report.overall);
    if (!report.sensors.empty()) {
        report.mean_f1 = f1_sum / static_cast<double>(report.sensors.size());
        report.mean_rguess_f1 = rguess_sum / static_cast<double>(report.sensors.size());
    }
    report.flag_rate = evaluated ? static_cast<double>(flagged) / static_cast<double>(evaluated) : 0.0;
    return report;
}

nlohmann::json EvaluationReport::to_json() const {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : sensors) {
        per.push_back({{"sensor", s.sensor},
                       {"evaluated", s.evaluated},
                       {"q", s.q},
                       {"tp", s.counts.tp},
                       {"fp", s.counts.fp},
                       {"tn", s.counts.tn},
                       {"fn", s.counts.fn},
                       {"precision", s.metrics.precision},
                       {"recall", s.metrics.recall},
                       {"f1", s.metrics.f1},
                       {"degenerate", s.metrics.degenerate},
                       {"rguess_f1", s.rguess_f1}});
    }
    return {{"sensors", per},
            {"overall",
             {{"tp", overall.tp},
              {"fp", overall.fp},
              {"tn", overall.tn},
              {"fn", overall.fn},
              {"precision", overall_metrics.precision},
              {"recall", overall_metrics.recall},
              {"f1", overall_metrics.f1},
              {"degenerate", overall_metrics.degenerate}}},
            {"mean_f1", mean_f1},
            {"mean_rguess_f1", mean_rguess_f1},
            {"flag_rate", flag_rate},
            {"unlabeled_skipped", unlabeled_skipped}};
}

std::string format_report_csv(const EvaluationReport& report) {
    std::string out = "sensor,q,precision,recall,f1\n";
    for (const auto& s : report.sensors) {
        out += std::to_string(s.sensor) + ',' + csv::format_double(s.q) + ',' + csv::format_double(s.metrics.precision) +
               ',' + csv::format_double(s.metrics.recall) + ',' + csv::format_double(s.metrics.f1) + '\n';
    }
    return out;
}

void write_report(const std::string& csv_path, const std::string& json_path, const EvaluationReport& report) {
    csv::write_file(csv_path, format_report_csv(report));
    csv::write_file(json_path, report.to_json().dump(2) + "\n");
}

std::string format_pvalue_trajectories(const std::vector<Detection>& detections, const ScenarioTruth& truth) {
    std::string out = "t,k,p_value,flagged,label\n";
    for (const auto& d : detections) {
        const char* label = !truth.labeled(d.t, d.k) ? "-1" : (truth.is_anomaly(d.t, d.k) ? "1" : "0");
        out += std::to_string(d.t) + ',' + std::to_string(d.k) + ',' + csv::format_double(d.p_value) + ',' +
               (d.flagged ? "1" : "0") + ',' + label + '\n';
    }
    return out;
}

}  // namespace ecad
