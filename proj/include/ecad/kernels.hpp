#pragma once

// Data-parallel kernels behind ensemble training and test scoring.
//
// Each kernel has a serial reference in `kernels::serial` and an OpenMP
// version in `kernels::parallel`. Work is split across independent items
// only (models, rows, test points); the per-item arithmetic is identical,
// so both versions produce bit-identical results.

#include "ecad/aggregate.hpp"
#include "ecad/panel.hpp"
#include "ecad/regression.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace ecad {

enum class Execution { serial, parallel };

/// Model ids (into the ensemble) per item.
using ModelSets = std::vector<std::vector<std::uint32_t>>;

namespace kernels {

/// Rows (into a FeatureMatrix) used to fit each bootstrap model, repeated
/// by in-bag multiplicity.
using BagRows = std::vector<std::vector<std::size_t>>;

namespace serial {

std::vector<FittedModel> fit_models(const FeatureMatrix& data, const BagRows& bags,
                                    const std::vector<RegressionBackendSpec>& specs);

/// B x n matrix of predictions of every model at every row of `x`.
Eigen::MatrixXd prediction_matrix(const std::vector<FittedModel>& models, const Eigen::MatrixXd& x);

/// For column r, phi over predictions(b, r) for b in sets[r]; NaN when
/// sets[r] is empty.
std::vector<double> loo_aggregate(const Eigen::MatrixXd& predictions, const ModelSets& sets, const Aggregator& phi);

/// For column r, the nearest-rank `level` quantile over { phi(predictions(S, r)) : S in sets }.
/// Every set must be non-empty.
std::vector<double> loo_quantile(const Eigen::MatrixXd& predictions, const ModelSets& sets, const Aggregator& phi,
                                 double level);

}  // namespace serial

namespace parallel {

std::vector<FittedModel> fit_models(const FeatureMatrix& data, const BagRows& bags,
                                    const std::vector<RegressionBackendSpec>& specs);
Eigen::MatrixXd prediction_matrix(const std::vector<FittedModel>& models, const Eigen::MatrixXd& x);
std::vector<double> loo_aggregate(const Eigen::MatrixXd& predictions, const ModelSets& sets, const Aggregator& phi);
std::vector<double> loo_quantile(const Eigen::MatrixXd& predictions, const ModelSets& sets, const Aggregator& phi,
                                 double level);

}  // namespace parallel

/// Raised by fit_models when one bootstrap fit fails.
class BootstrapFitError : public std::runtime_error {
public:
    BootstrapFitError(std::size_t index, const std::string& what)
        : std::runtime_error("bootstrap model " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

}  // namespace kernels
}  // namespace ecad
