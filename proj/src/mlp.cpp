#include "ecad/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ecad {

MlpNetwork MlpNetwork::init(std::size_t input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
    if (input_dim == 0) throw std::invalid_argument("mlp input dimension must be positive");
    MlpNetwork net;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t fan_in = input_dim;
    std::vector<std::size_t> widths;
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("mlp hidden widths must be at least 1");
        widths.push_back(static_cast<std::size_t>(h));
    }
    widths.push_back(1);
    for (std::size_t w : widths) {
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        Eigen::MatrixXd W(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index c = 0; c < W.cols(); ++c)
            for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = scale * normal(gen);
        net.weights.push_back(std::move(W));
        net.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w)));
        fan_in = w;
    }
    return net;
}

std::size_t MlpNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    return n;
}

Eigen::VectorXd MlpNetwork::flatten() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.segment(pos, weights[l].size()) = Eigen::Map<const Eigen::VectorXd>(weights[l].data(), weights[l].size());
        pos += weights[l].size();
        out.segment(pos, biases[l].size()) = biases[l];
        pos += biases[l].size();
    }
    return out;
}

void MlpNetwork::unflatten(const Eigen::VectorXd& params) {
    if (static_cast<std::size_t>(params.size()) != parameter_count()) {
        throw std::invalid_argument("parameter vector length does not match network shape");
    }
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Eigen::Map<Eigen::VectorXd>(weights[l].data(), weights[l].size()) = params.segment(pos, weights[l].size());
        pos += weights[l].size();
        biases[l] = params.segment(pos, biases[l].size());
        pos += biases[l].size();
    }
}

Eigen::VectorXd MlpNetwork::forward(const Eigen::MatrixXd& z) const {
    if (static_cast<std::size_t>(z.cols()) != input_dim()) throw std::invalid_argument("mlp input dimension mismatch");
    Eigen::MatrixXd a = z.transpose();
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Eigen::MatrixXd h = weights[l] * a;
        h.colwise() += biases[l];
        if (l + 1 < weights.size()) {
            a = h.cwiseMax(0.0);
        } else {
            a = std::move(h);
        }
    }
    return a.row(0).transpose();
}

double mlp_loss_and_gradient(const MlpNetwork& net, const Eigen::MatrixXd& z, const Eigen::VectorXd& target,
                             Eigen::VectorXd* grad) {
    const std::size_t layers = net.weights.size();
    const double n = static_cast<double>(z.rows());
    if (z.rows() == 0 || z.rows() != target.size()) throw std::invalid_argument("mlp batch shape mismatch");

    // Pre-activations per layer; activations[0] is the input.
    std::vector<Eigen::MatrixXd> pre(layers);
    std::vector<Eigen::MatrixXd> act(layers + 1);
    act[0] = z.transpose();
    for (std::size_t l = 0; l < layers; ++l) {
        pre[l] = net.weights[l] * act[l];
        pre[l].colwise() += net.biases[l];
        act[l + 1] = (l + 1 < layers) ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
    }
    const Eigen::RowVectorXd resid = act[layers].row(0) - target.transpose();
    const double loss = 0.5 * resid.squaredNorm() / n;
    if (!grad) return loss;

    grad->resize(static_cast<Eigen::Index>(net.parameter_count()));
    std::vector<Eigen::MatrixXd> gw(layers);
    std::vector<Eigen::VectorXd> gb(layers);
    Eigen::MatrixXd delta = resid / n;
    for (std::size_t l = layers; l-- > 0;) {
        gw[l] = delta * act[l].transpose();
        gb[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = net.weights[l].transpose() * delta;
            delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        grad->segment(pos, gw[l].size()) = Eigen::Map<const Eigen::VectorXd>(gw[l].data(), gw[l].size());
        pos += gw[l].size();
        grad->segment(pos, gb[l].size()) = gb[l];
        pos += gb[l].size();
    }
    return loss;
}

Eigen::VectorXd MlpModel::predict(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd z = (x.rowwise() - x_mean.transpose()).array().rowwise() / x_scale.transpose().array();
    Eigen::VectorXd out = net.forward(z);
    return (out.array() * y_scale + y_mean).matrix();
}

MlpModel train_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& hidden, int epochs,
                   double learning_rate, std::uint64_t seed) {
    MlpModel model;
    const double n = static_cast<double>(x.rows());
    model.x_mean = x.colwise().mean().transpose();
    Eigen::MatrixXd centered = x.rowwise() - model.x_mean.transpose();
    model.x_scale = (centered.array().square().colwise().sum() / n).sqrt().transpose();
    for (Eigen::Index j = 0; j < model.x_scale.size(); ++j) {
        if (!(model.x_scale(j) > 0.0)) model.x_scale(j) = 1.0;
    }
    model.y_mean = y.mean();
    model.y_scale = std::sqrt((y.array() - model.y_mean).square().sum() / n);
    if (!(model.y_scale > 0.0)) model.y_scale = 1.0;

    const Eigen::MatrixXd z = centered.array().rowwise() / model.x_scale.transpose().array();
    const Eigen::VectorXd target = (y.array() - model.y_mean) / model.y_scale;

    model.net = MlpNetwork::init(static_cast<std::size_t>(x.cols()), hidden, seed);
    Eigen::VectorXd params = model.net.flatten();
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd grad;
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double b1t = 1.0, b2t = 1.0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        mlp_loss_and_gradient(model.net, z, target, &grad);
        m1 = beta1 * m1 + (1.0 - beta1) * grad;
        m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseProduct(grad);
        b1t *= beta1;
        b2t *= beta2;
        params.array() -= learning_rate * (m1.array() / (1.0 - b1t)) / ((m2.array() / (1.0 - b2t)).sqrt() + eps);
        model.net.unflatten(params);
    }
    return model;
}

}  // namespace ecad
