#include "ecad/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecad {

void ImputerConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("imputer max_iters must be at least 1");
    if (!(tol > 0.0)) throw std::invalid_argument("imputer tol must be positive");
    inner_backend.validate();
}

nlohmann::json ImputeReport::to_json() const {
    return {{"iterations", iterations},
            {"final_max_delta", final_max_delta},
            {"delta_trace", delta_trace},
            {"missing_per_column", missing_per_column}};
}

ImputeResult impute(const Panel& panel, const ImputerConfig& cfg) {
    cfg.validate();
    const std::size_t T = panel.rows();
    const std::size_t K = panel.cols();

    ImputeResult result{panel, {}};
    auto& report = result.report;
    report.missing_per_column.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t obs = panel.observed_count(k);
        report.missing_per_column[k] = T - obs;
        if (obs < 2) {
            throw std::invalid_argument("column " + std::to_string(k) + " has fewer than 2 observed entries");
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        bool any = false;
        for (std::size_t k = 0; k < K && !any; ++k) any = panel.observed(t, k);
        if (!any) throw std::invalid_argument("row " + std::to_string(t) + " has no observed entries");
    }
    if (panel.complete()) return result;

    // Working copy: every cell defined, with observed cells fixed.
    Eigen::MatrixXd work(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
        double sum = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            if (panel.observed(t, k)) sum += panel.at(t, k);
        }
        const double mean = sum / static_cast<double>(panel.observed_count(k));
        for (std::size_t t = 0; t < T; ++t) {
            work(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = panel.observed(t, k) ? panel.at(t, k) : mean;
        }
    }

    if (K == 1) {
        // No other columns to regress on; the mean fill is final.
        report.iterations = 1;
        report.final_max_delta = 0.0;
        report.delta_trace.push_back(0.0);
    } else {
        for (int iter = 0; iter < cfg.max_iters; ++iter) {
            double max_delta = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                if (report.missing_per_column[k] == 0) continue;
                const auto obs = static_cast<Eigen::Index>(T - report.missing_per_column[k]);
                const auto mis = static_cast<Eigen::Index>(report.missing_per_column[k]);
                const auto d = static_cast<Eigen::Index>(K - 1);
                Eigen::MatrixXd x_obs(obs, d), x_mis(mis, d);
                Eigen::VectorXd y_obs(obs);
                std::vector<Eigen::Index> mis_rows;
                mis_rows.reserve(static_cast<std::size_t>(mis));
                Eigen::Index io = 0, im = 0;
                for (std::size_t t = 0; t < T; ++t) {
                    const auto ti = static_cast<Eigen::Index>(t);
                    auto& dst = panel.observed(t, k) ? x_obs : x_mis;
                    const Eigen::Index r = panel.observed(t, k) ? io++ : im++;
                    Eigen::Index c = 0;
                    for (std::size_t j = 0; j < K; ++j) {
                        if (j != k) dst(r, c++) = work(ti, static_cast<Eigen::Index>(j));
                    }
                    if (panel.observed(t, k)) {
                        y_obs(r) = work(ti, static_cast<Eigen::Index>(k));
                    } else {
                        mis_rows.push_back(ti);
                    }
                }
                const auto model = fit(cfg.inner_backend, x_obs, y_obs);
                const Eigen::VectorXd pred = model.predict(x_mis);
                for (Eigen::Index i = 0; i < mis; ++i) {
                    double& cell = work(mis_rows[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(k));
                    max_delta = std::max(max_delta, std::abs(pred(i) - cell));
                    cell = pred(i);
                }
            }
            report.delta_trace.push_back(max_delta);
            report.iterations = iter + 1;
            report.final_max_delta = max_delta;
            if (max_delta < cfg.tol) break;
        }
    }

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
            if (!panel.observed(t, k)) {
                result.panel.set(t, k, work(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)));
            }
        }
    }
    return result;
}

}  // namespace ecad
