#pragma once

#include "ecad/mlp.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ecad {

enum class BackendKind { ridge, mlp };

struct RegressionBackendSpec {
    BackendKind kind = BackendKind::ridge;
    double ridge_lambda = 1.0;
    std::vector<int> mlp_hidden{64, 64};
    int mlp_epochs = 200;
    double mlp_learning_rate = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;

    static RegressionBackendSpec ridge(double lambda) {
        RegressionBackendSpec s;
        s.kind = BackendKind::ridge;
        s.ridge_lambda = lambda;
        return s;
    }
    static RegressionBackendSpec mlp(std::vector<int> hidden, int epochs, double learning_rate, std::uint64_t seed) {
        RegressionBackendSpec s;
        s.kind = BackendKind::mlp;
        s.mlp_hidden = std::move(hidden);
        s.mlp_epochs = epochs;
        s.mlp_learning_rate = learning_rate;
        s.seed = seed;
        return s;
    }

    bool operator==(const RegressionBackendSpec&) const = default;
};

std::string to_string(BackendKind kind);
BackendKind parse_backend_kind(const std::string& name);

struct RidgeParams {
    Eigen::VectorXd weights;
    double intercept = 0.0;
};

/// Immutable result of fit(). Safe to share across concurrent predict calls.
class FittedModel {
public:
    std::size_t input_dim() const { return input_dim_; }
    const RegressionBackendSpec& spec() const { return spec_; }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    double predict_one(std::span<const double> x) const;

    /// Ridge coefficients; throws for other backends.
    const RidgeParams& ridge() const;
    const MlpModel& mlp() const;

    nlohmann::json to_json() const;
    static FittedModel from_json(const nlohmann::json& j);

private:
    friend FittedModel fit(const RegressionBackendSpec&, const Eigen::MatrixXd&, const Eigen::VectorXd&);
    FittedModel(RegressionBackendSpec spec, std::size_t input_dim, std::variant<RidgeParams, MlpModel> params)
        : spec_(std::move(spec)), input_dim_(input_dim), params_(std::move(params)) {}

    RegressionBackendSpec spec_;
    std::size_t input_dim_ = 0;
    std::variant<RidgeParams, MlpModel> params_;
};

/// Ridge: solves (Xc'Xc + lambda I) w = Xc'yc on mean-centered data, with
/// the intercept recovered from the means. lambda = 0 falls back to the
/// minimum-norm least-squares solution so rank-deficient designs still fit.
/// MLP: see mlp.hpp.
FittedModel fit(const RegressionBackendSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

nlohmann::json to_json(const RegressionBackendSpec& spec);
RegressionBackendSpec backend_spec_from_json(const nlohmann::json& j, RegressionBackendSpec defaults = {});

}  // namespace ecad
