#pragma once

#include "ecad/aggregate.hpp"
#include "ecad/detector.hpp"
#include "ecad/imputation.hpp"
#include "ecad/regression.hpp"
#include "ecad/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace ecad {

struct EnsembleConfig {
    std::size_t B = 25;
    Aggregator phi = Aggregator::mean();
};

/// Input overrides and the output directory. Empty inputs fall back to the
/// artifacts an earlier stage wrote into out_dir.
struct PathsConfig {
    std::string out_dir = "ecad_out";
    std::string panel;
    std::string sensors;
    std::string truth;
    std::string missing_token = "NA";
    std::optional<std::size_t> train_rows;  // defaults to scenario.T_train
};

struct PipelineConfig {
    ScenarioConfig scenario;
    ImputerConfig imputer;
    RegressionBackendSpec backend;
    EnsembleConfig ensemble;
    DetectorConfig detector;
    PathsConfig paths;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t train_rows() const { return paths.train_rows.value_or(scenario.T_train); }
    /// Copies `seed` into every component that draws random numbers.
    void apply_seed(std::uint64_t s);
};

nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
/// Empty path yields the all-defaults config.
PipelineConfig load_pipeline_config(const std::string& path);

enum class ErrorCategory { config, missing_artifact, stage };

/// Failure of a pipeline stage, tagged for the CLI exit status.
class PipelineError : public std::runtime_error {
public:
    PipelineError(ErrorCategory category, std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), category_(category), stage_(std::move(stage)) {}
    ErrorCategory category() const { return category_; }
    const std::string& stage() const { return stage_; }
    int exit_code() const;

private:
    ErrorCategory category_;
    std::string stage_;
};

/// Artifact file names inside out_dir.
namespace artifacts {
inline constexpr const char* panel = "panel.csv";
inline constexpr const char* sensors = "sensors.csv";
inline constexpr const char* truth = "truth.csv";
inline constexpr const char* scenario = "scenario.json";
inline constexpr const char* completed = "panel_complete.csv";
inline constexpr const char* impute_report = "impute_report.json";
inline constexpr const char* ensemble = "ensemble.json";
inline constexpr const char* detections = "detections.csv";
inline constexpr const char* report_csv = "report.csv";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* pvalues = "pvalues.csv";
}  // namespace artifacts

// Each stage writes its artifacts and returns a one-line `key=value` summary.
std::string run_generate(const PipelineConfig& cfg);
std::string run_impute(const PipelineConfig& cfg);
std::string run_train(const PipelineConfig& cfg);
/// Training phase again on rows [0, train_rows) of the completed panel,
/// e.g. after a change point. Detection then resumes at train_rows.
std::string run_retrain(const PipelineConfig& cfg, std::optional<std::size_t> train_rows);
std::string run_detect(const PipelineConfig& cfg);
std::string run_evaluate(const PipelineConfig& cfg);
std::string run_all(const PipelineConfig& cfg);

}  // namespace ecad
