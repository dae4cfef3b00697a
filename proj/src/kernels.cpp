#include "ecad/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>

namespace ecad::kernels {

namespace {

FittedModel fit_one(const FeatureMatrix& data, const std::vector<std::size_t>& rows, const RegressionBackendSpec& spec,
                    std::size_t b) {
    if (rows.empty()) throw BootstrapFitError(b, "empty bootstrap sample");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), data.x.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(rows[i]));
        y(static_cast<Eigen::Index>(i)) = data.y(static_cast<Eigen::Index>(rows[i]));
    }
    try {
        return fit(spec, x, y);
    } catch (const std::exception& e) {
        throw BootstrapFitError(b, e.what());
    }
}

double aggregate_column(const Eigen::MatrixXd& predictions, Eigen::Index col, const std::vector<std::uint32_t>& set,
                        const Aggregator& phi, std::vector<double>& scratch) {
    scratch.clear();
    for (auto b : set) scratch.push_back(predictions(static_cast<Eigen::Index>(b), col));
    return phi.apply_inplace(scratch);
}

double quantile_column(const Eigen::MatrixXd& predictions, Eigen::Index col, const ModelSets& sets,
                       const Aggregator& phi, double level, std::vector<double>& scratch,
                       std::vector<double>& loo_values) {
    loo_values.clear();
    for (const auto& set : sets) loo_values.push_back(aggregate_column(predictions, col, set, phi, scratch));
    return empirical_quantile_inplace(loo_values, level);
}

// Runs body(i) for i in [0, n) across threads and rethrows the first failure.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

namespace serial {

std::vector<FittedModel> fit_models(const FeatureMatrix& data, const BagRows& bags,
                                    const std::vector<RegressionBackendSpec>& specs) {
    std::vector<FittedModel> models;
    models.reserve(bags.size());
    for (std::size_t b = 0; b < bags.size(); ++b) models.push_back(fit_one(data, bags[b], specs.at(b), b));
    return models;
}

Eigen::MatrixXd prediction_matrix(const std::vector<FittedModel>& models, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(models.size()), x.rows());
    for (std::size_t b = 0; b < models.size(); ++b) out.row(static_cast<Eigen::Index>(b)) = models[b].predict(x).transpose();
    return out;
}

std::vector<double> loo_aggregate(const Eigen::MatrixXd& predictions, const ModelSets& sets, const Aggregator& phi) {
    std::vector<double> out(sets.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> scratch;
    for (std::size_t r = 0; r < sets.size(); ++r) {
        if (!sets[r].empty()) out[r] = aggregate_column(predictions, static_cast<Eigen::Index>(r), sets[r], phi, scratch);
    }
    return out;
}

std::vector<double> loo_quantile(const Eigen::MatrixXd& predictions, const ModelSets& sets, const Aggregator& phi,
                                 double level) {
    if (sets.empty()) throw std::invalid_argument("loo_quantile: no leave-one-out predictors");
    std::vector<double> out(static_cast<std::size_t>(predictions.cols()));
    std::vector<double> scratch, loo_values;
    for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
        out[static_cast<std::size_t>(c)] = quantile_column(predictions, c, sets, phi, level, scratch, loo_values);
    }
    return out;
}

}  // namespace serial

namespace parallel {

std::vector<FittedModel> fit_models(const FeatureMatrix& data, const BagRows& bags,
                                    const std::vector<RegressionBackendSpec>& specs) {
    std::vector<std::optional<FittedModel>> slots(bags.size());
    parallel_for(bags.size(), [&](std::size_t b) { slots[b].emplace(fit_one(data, bags[b], specs.at(b), b)); });
    std::vector<FittedModel> models;
    models.reserve(bags.size());
    for (auto& s : slots) models.push_back(std::move(*s));
    return models;
}

Eigen::MatrixXd prediction_matrix(const std::vector<FittedModel>& models, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(models.size()), x.rows());
    parallel_for(models.size(), [&](std::size_t b) {
        out.row(static_cast<Eigen::Index>(b)) = models[b].predict(x).transpose();
    });
    return out;
}

std::vector<double> loo_aggregate(const Eigen::MatrixXd& predictions, const ModelSets& sets, const Aggregator& phi) {
    std::vector<double> out(sets.size(), std::numeric_limits<double>::quiet_NaN());
    const auto n = static_cast<std::ptrdiff_t>(sets.size());
#pragma omp parallel
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < n; ++r) {
            const auto& set = sets[static_cast<std::size_t>(r)];
            if (!set.empty()) {
                out[static_cast<std::size_t>(r)] =
                    aggregate_column(predictions, static_cast<Eigen::Index>(r), set, phi, scratch);
            }
        }
    }
    return out;
}

std::vector<double> loo_quantile(const Eigen::MatrixXd& predictions, const ModelSets& sets, const Aggregator& phi,
                                 double level) {
    if (sets.empty()) throw std::invalid_argument("loo_quantile: no leave-one-out predictors");
    std::vector<double> out(static_cast<std::size_t>(predictions.cols()));
    std::exception_ptr failure;
    const auto n = static_cast<std::ptrdiff_t>(predictions.cols());
#pragma omp parallel
    {
        std::vector<double> scratch, loo_values;
#pragma omp for schedule(static)
        for (std::ptrdiff_t c = 0; c < n; ++c) {
            try {
                out[static_cast<std::size_t>(c)] = quantile_column(predictions, c, sets, phi, level, scratch, loo_values);
            } catch (...) {
#pragma omp critical(ecad_loo_quantile_failure)
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace parallel

}  // namespace ecad::kernels
