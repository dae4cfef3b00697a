#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace ecad {

/// Fully connected ReLU network with a single linear output unit.
/// weights[l] has shape (width_l, width_{l-1}); the last layer has one row.
struct MlpNetwork {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    /// He-normal weights, zero biases.
    static MlpNetwork init(std::size_t input_dim, const std::vector<int>& hidden, std::uint64_t seed);

    std::size_t input_dim() const { return static_cast<std::size_t>(weights.front().cols()); }
    std::size_t parameter_count() const;
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& params);

    /// Outputs for each row of `z`.
    Eigen::VectorXd forward(const Eigen::MatrixXd& z) const;
};

/// Mean squared error loss 0.5/n * sum (net(z_i) - target_i)^2 and, when
/// `grad` is non-null, its gradient by backpropagation in flatten() order.
double mlp_loss_and_gradient(const MlpNetwork& net, const Eigen::MatrixXd& z, const Eigen::VectorXd& target,
                             Eigen::VectorXd* grad);

/// A trained network plus the input/target standardization it was fit under.
struct MlpModel {
    MlpNetwork net;
    Eigen::VectorXd x_mean;
    Eigen::VectorXd x_scale;
    double y_mean = 0.0;
    double y_scale = 1.0;

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Full-batch training with Adam steps on the standardized problem.
MlpModel train_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& hidden, int epochs,
                   double learning_rate, std::uint64_t seed);

}  // namespace ecad
