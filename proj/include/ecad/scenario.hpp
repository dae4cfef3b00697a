#pragma once

#include "ecad/panel.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ecad {

enum class ScenarioModel {
    /// Stable linear recursion on the two most recent values of each
    /// sensor's three nearest sensors.
    linear_neighbor_lag,
    /// Daily two-peak profile per sensor plus a saturating (tanh) recursion
    /// on neighbor deviations from their profiles.
    seasonal_nonlinear,
};

enum class ErrorKind { iid, ar1 };

struct ErrorDependence {
    ErrorKind kind = ErrorKind::iid;
    double rho = 0.0;
};

struct AnomalyInjection {
    double rate = 0.0;            // Bernoulli rate per cell
    double magnitude_sigma = 6.0; // shift in units of noise_sigma, random sign
    bool include_training = false;
};

struct GroundTruthParams {
    double alpha_gt = 0.01;
    std::size_t d = 3;
    std::size_t neighbor_size = 4;
};

struct ScenarioConfig {
    std::size_t K = 20;
    std::size_t T_train = 2000;
    std::size_t T_test = 2000;
    ScenarioModel model = ScenarioModel::linear_neighbor_lag;
    double noise_sigma = 1.0;
    ErrorDependence error_dependence;
    AnomalyInjection anomaly_injection;
    double missing_fraction = 0.4;
    GroundTruthParams truth;
    std::uint64_t seed = 0;

    std::size_t rows() const { return T_train + T_test; }
    void validate() const;
};

std::string to_string(ScenarioModel m);
ScenarioModel parse_scenario_model(const std::string& name);

nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j, ScenarioConfig defaults = {});

/// Per-cell anomaly labels (-1 where unlabeled, i.e. t < d) and the record
/// of which cells were perturbed by injection.
class ScenarioTruth {
public:
    ScenarioTruth() = default;
    ScenarioTruth(std::size_t rows, std::size_t cols, GroundTruthParams params);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const GroundTruthParams& params() const { return params_; }

    bool labeled(std::size_t t, std::size_t k) const { return label_.at(t * cols_ + k) >= 0; }
    /// Throws for unlabeled cells.
    bool is_anomaly(std::size_t t, std::size_t k) const;
    bool injected(std::size_t t, std::size_t k) const { return injected_.at(t * cols_ + k) != 0; }

    void set_label(std::size_t t, std::size_t k, bool anomalous) { label_.at(t * cols_ + k) = anomalous ? 1 : 0; }
    void set_injected(std::size_t t, std::size_t k, bool v) { injected_.at(t * cols_ + k) = v ? 1 : 0; }

    bool operator==(const ScenarioTruth& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && label_ == o.label_ && injected_ == o.injected_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    GroundTruthParams params_;
    std::vector<std::int8_t> label_;
    std::vector<std::uint8_t> injected_;
};

struct Scenario {
    Panel panel;  // complete, train rows first
    ScenarioTruth truth;
};

Scenario generate(const ScenarioConfig& cfg);

/// Marks (t, k) anomalous when Y_tk is at or above the (1 - alpha_gt)
/// nearest-rank quantile, or at or below the alpha_gt quantile, of the
/// d * n_size values observed at times t-d..t-1 on k's n_size nearest
/// sensors (itself included). Rows t < d stay unlabeled.
ScenarioTruth label_ground_truth(const Panel& panel, double alpha_gt, std::size_t d, std::size_t n_size);

/// Masks exactly round(fraction * train_rows) cells per column, drawn
/// uniformly without replacement from rows [0, train_rows).
Panel inject_missing(const Panel& panel, double fraction, std::size_t train_rows, std::uint64_t seed);

void write_truth(const std::string& path, const ScenarioTruth& truth);
std::string format_truth(const ScenarioTruth& truth);
ScenarioTruth load_truth(const std::string& path);
ScenarioTruth parse_truth(const std::string& text);

}  // namespace ecad
