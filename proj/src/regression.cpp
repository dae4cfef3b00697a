#include "ecad/regression.hpp"

#include <cmath>
#include <stdexcept>

namespace ecad {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw std::invalid_argument(std::string("non-finite values in ") + what);
}

RidgeParams fit_ridge(double lambda, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd x_mean = x.colwise().mean().transpose();
    const double y_mean = y.mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean.transpose();
    const Eigen::VectorXd yc = y.array() - y_mean;

    RidgeParams p;
    if (lambda > 0.0) {
        Eigen::MatrixXd gram = xc.transpose() * xc;
        gram.diagonal().array() += lambda;
        p.weights = gram.ldlt().solve(xc.transpose() * yc);
    } else {
        p.weights = xc.completeOrthogonalDecomposition().solve(yc);
    }
    p.intercept = y_mean - x_mean.dot(p.weights);
    return p;
}

}  // namespace

void RegressionBackendSpec::validate() const {
    if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) throw std::invalid_argument("ridge_lambda must be >= 0");
    for (int h : mlp_hidden) {
        if (h < 1) throw std::invalid_argument("mlp hidden widths must be at least 1");
    }
    if (mlp_epochs < 1) throw std::invalid_argument("mlp_epochs must be positive");
    if (!(mlp_learning_rate > 0.0)) throw std::invalid_argument("mlp_learning_rate must be positive");
}

std::string to_string(BackendKind kind) {
    return kind == BackendKind::ridge ? "ridge" : "mlp";
}

BackendKind parse_backend_kind(const std::string& name) {
    if (name == "ridge") return BackendKind::ridge;
    if (name == "mlp") return BackendKind::mlp;
    throw std::invalid_argument("unknown backend '" + name + "' (expected ridge or mlp)");
}

FittedModel fit(const RegressionBackendSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    spec.validate();
    if (x.rows() == 0) throw std::invalid_argument("fit: no training rows");
    if (x.cols() == 0) throw std::invalid_argument("fit: zero-dimensional features");
    if (x.rows() != y.size()) throw std::invalid_argument("fit: X and y row counts differ");
    require_finite(x, "X");
    require_finite(y, "y");

    const auto d = static_cast<std::size_t>(x.cols());
    if (spec.kind == BackendKind::ridge) {
        return FittedModel(spec, d, fit_ridge(spec.ridge_lambda, x, y));
    }
    return FittedModel(spec, d, train_mlp(x, y, spec.mlp_hidden, spec.mlp_epochs, spec.mlp_learning_rate, spec.seed));
}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.cols()) != input_dim_) {
        throw std::invalid_argument("predict: expected " + std::to_string(input_dim_) + " features, got " +
                                    std::to_string(x.cols()));
    }
    require_finite(x, "predict input");
    if (const auto* r = std::get_if<RidgeParams>(&params_)) {
        return (x * r->weights).array() + r->intercept;
    }
    return std::get<MlpModel>(params_).predict(x);
}

double FittedModel::predict_one(std::span<const double> x) const {
    if (x.size() != input_dim_) {
        throw std::invalid_argument("predict: expected " + std::to_string(input_dim_) + " features, got " +
                                    std::to_string(x.size()));
    }
    Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
    if (!row.allFinite()) throw std::invalid_argument("non-finite values in predict input");
    if (const auto* r = std::get_if<RidgeParams>(&params_)) {
        return row.dot(r->weights) + r->intercept;
    }
    return std::get<MlpModel>(params_).predict(Eigen::MatrixXd(row))(0);
}

const RidgeParams& FittedModel::ridge() const {
    if (const auto* r = std::get_if<RidgeParams>(&params_)) return *r;
    throw std::logic_error("model is not a ridge model");
}

const MlpModel& FittedModel::mlp() const {
    if (const auto* m = std::get_if<MlpModel>(&params_)) return *m;
    throw std::logic_error("model is not an mlp model");
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vec(const nlohmann::json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const RegressionBackendSpec& spec) {
    return {{"kind", to_string(spec.kind)},
            {"ridge_lambda", spec.ridge_lambda},
            {"mlp_hidden", spec.mlp_hidden},
            {"mlp_epochs", spec.mlp_epochs},
            {"mlp_learning_rate", spec.mlp_learning_rate},
            {"seed", spec.seed}};
}

RegressionBackendSpec backend_spec_from_json(const nlohmann::json& j, RegressionBackendSpec s) {
    if (j.contains("kind")) s.kind = parse_backend_kind(j.at("kind").get<std::string>());
    if (j.contains("ridge_lambda")) s.ridge_lambda = j.at("ridge_lambda").get<double>();
    if (j.contains("mlp_hidden")) s.mlp_hidden = j.at("mlp_hidden").get<std::vector<int>>();
    if (j.contains("mlp_epochs")) s.mlp_epochs = j.at("mlp_epochs").get<int>();
    if (j.contains("mlp_learning_rate")) s.mlp_learning_rate = j.at("mlp_learning_rate").get<double>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
}

nlohmann::json FittedModel::to_json() const {
    nlohmann::json j;
    j["spec"] = ecad::to_json(spec_);
    j["input_dim"] = input_dim_;
    if (const auto* r = std::get_if<RidgeParams>(&params_)) {
        j["ridge"] = {{"weights", vec_json(r->weights)}, {"intercept", r->intercept}};
    } else {
        const auto& m = std::get<MlpModel>(params_);
        nlohmann::json layers = nlohmann::json::array();
        for (std::size_t l = 0; l < m.net.weights.size(); ++l) {
            const auto& W = m.net.weights[l];
            layers.push_back({{"rows", W.rows()},
                              {"cols", W.cols()},
                              {"weights", std::vector<double>(W.data(), W.data() + W.size())},
                              {"bias", vec_json(m.net.biases[l])}});
        }
        j["mlp"] = {{"layers", layers},
                    {"x_mean", vec_json(m.x_mean)},
                    {"x_scale", vec_json(m.x_scale)},
                    {"y_mean", m.y_mean},
                    {"y_scale", m.y_scale}};
    }
    return j;
}

FittedModel FittedModel::from_json(const nlohmann::json& j) {
    auto spec = backend_spec_from_json(j.at("spec"));
    const auto d = j.at("input_dim").get<std::size_t>();
    if (spec.kind == BackendKind::ridge) {
        RidgeParams p;
        p.weights = json_vec(j.at("ridge").at("weights"));
        p.intercept = j.at("ridge").at("intercept").get<double>();
        if (static_cast<std::size_t>(p.weights.size()) != d) throw std::invalid_argument("ridge weight length mismatch");
        return FittedModel(spec, d, p);
    }
    MlpModel m;
    const auto& jm = j.at("mlp");
    for (const auto& layer : jm.at("layers")) {
        const auto rows = layer.at("rows").get<Eigen::Index>();
        const auto cols = layer.at("cols").get<Eigen::Index>();
        auto w = layer.at("weights").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != rows * cols) throw std::invalid_argument("mlp layer shape mismatch");
        m.net.weights.emplace_back(Eigen::Map<Eigen::MatrixXd>(w.data(), rows, cols));
        m.net.biases.push_back(json_vec(layer.at("bias")));
    }
    m.x_mean = json_vec(jm.at("x_mean"));
    m.x_scale = json_vec(jm.at("x_scale"));
    m.y_mean = jm.at("y_mean").get<double>();
    m.y_scale = jm.at("y_scale").get<double>();
    return FittedModel(spec, d, std::move(m));
}

}  // namespace ecad
