#pragma once

#include "ecad/panel.hpp"
#include "ecad/regression.hpp"

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

namespace ecad {

enum class ImputerInit { column_mean };

struct ImputerConfig {
    int max_iters = 10;
    double tol = 1e-3;  // stop once the largest change in a sweep drops below this
    RegressionBackendSpec inner_backend = RegressionBackendSpec::ridge(1.0);
    ImputerInit init = ImputerInit::column_mean;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ImputeReport {
    int iterations = 0;
    double final_max_delta = 0.0;
    std::vector<double> delta_trace;  // largest |change| per sweep
    std::vector<std::size_t> missing_per_column;

    nlohmann::json to_json() const;
};

struct ImputeResult {
    Panel panel;
    ImputeReport report;
};

/// Round-robin regression imputation. Missing cells start at their column
/// mean; each sweep visits columns in ascending order, refits column k on
/// the rows where it was observed (regressors: the current values of every
/// other column) and overwrites k's missing cells with the predictions.
/// Observed cells are never touched.
ImputeResult impute(const Panel& panel, const ImputerConfig& cfg = {});

}  // namespace ecad
