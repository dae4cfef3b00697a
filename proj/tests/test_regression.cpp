#include "ecad/mlp.hpp"
#include "ecad/regression.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace ecad;

namespace {

// Dense Gaussian elimination with partial pivoting on plain arrays.
std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = g(gen);
    return x;
}

}  // namespace

TEST(Ridge, ZeroLambdaInterpolatesLinearData) {
    Eigen::MatrixXd x(5, 1);
    x << -2, -1, 0.5, 1, 3;
    const Eigen::VectorXd y = 2.0 * x.col(0);
    const auto m = fit(RegressionBackendSpec::ridge(0.0), x, y);
    EXPECT_NEAR(m.ridge().weights(0), 2.0, 1e-8);
    const Eigen::VectorXd pred = m.predict(x);
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(pred(i), y(i), 1e-8);
    const double xi[] = {0.5};
    EXPECT_NEAR(m.predict_one(xi) - 1.0, 0.0, 1e-8);
}

TEST(Ridge, HugeLambdaShrinksToMean) {
    const Eigen::MatrixXd x = random_matrix(30, 3, 1);
    Eigen::VectorXd y = x * Eigen::Vector3d(1.0, -2.0, 0.5);
    y.array() += 4.0;
    const auto m = fit(RegressionBackendSpec::ridge(1e12), x, y);
    EXPECT_LT(m.ridge().weights.cwiseAbs().maxCoeff(), 1e-9);
    const Eigen::VectorXd pred = m.predict(x);
    for (Eigen::Index i = 0; i < pred.size(); ++i) EXPECT_NEAR(pred(i), y.mean(), 1e-7);
}

TEST(Ridge, MatchesNormalEquationOracle) {
    const Eigen::MatrixXd x = random_matrix(20, 3, 7);
    std::mt19937_64 gen(8);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd y(20);
    for (Eigen::Index i = 0; i < 20; ++i) y(i) = 0.3 * x(i, 0) - x(i, 2) + 2.0 + g(gen);

    // Oracle: center by hand, form X'X + I and X'y elementwise, eliminate.
    std::vector<double> mean(3, 0.0);
    double ymean = 0.0;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 3; ++j) mean[j] += x(i, j) / 20.0;
        ymean += y(i) / 20.0;
    }
    std::vector<std::vector<double>> a(3, std::vector<double>(3, 0.0));
    std::vector<double> b(3, 0.0);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 3; ++j) {
            b[j] += (x(i, j) - mean[j]) * (y(i) - ymean);
            for (int l = 0; l < 3; ++l) a[j][l] += (x(i, j) - mean[j]) * (x(i, l) - mean[l]);
        }
    for (int j = 0; j < 3; ++j) a[j][j] += 1.0;
    const auto w = gauss_solve(a, b);
    double intercept = ymean;
    for (int j = 0; j < 3; ++j) intercept -= w[j] * mean[j];

    const auto m = fit(RegressionBackendSpec::ridge(1.0), x, y);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(m.ridge().weights(j), w[j], 1e-10);
    EXPECT_NEAR(m.ridge().intercept, intercept, 1e-10);
}

TEST(Ridge, DuplicatedRowsGiveDuplicatedOutputs) {
    const Eigen::MatrixXd x = random_matrix(10, 2, 3);
    const Eigen::VectorXd y = random_matrix(10, 1, 4).col(0);
    const auto m = fit(RegressionBackendSpec::ridge(0.5), x, y);
    Eigen::MatrixXd dup(4, 2);
    dup << x.row(2), x.row(2), x.row(5), x.row(5);
    const Eigen::VectorXd p = m.predict(dup);
    EXPECT_EQ(p(0), p(1));
    EXPECT_EQ(p(2), p(3));
}

TEST(Ridge, RejectsBadInput) {
    const Eigen::MatrixXd x = random_matrix(5, 2, 1);
    EXPECT_THROW(fit(RegressionBackendSpec::ridge(1.0), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), std::invalid_argument);
    EXPECT_THROW(fit(RegressionBackendSpec::ridge(1.0), x, Eigen::VectorXd::Zero(4)), std::invalid_argument);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(5);
    y(2) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(fit(RegressionBackendSpec::ridge(1.0), x, y), std::invalid_argument);
    EXPECT_THROW(fit(RegressionBackendSpec::ridge(-1.0), x, Eigen::VectorXd::Zero(5)), std::invalid_argument);
    const auto m = fit(RegressionBackendSpec::ridge(1.0), x, Eigen::VectorXd::Zero(5));
    EXPECT_THROW(m.predict(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST(Ridge, JsonRoundTripPredictsIdentically) {
    const Eigen::MatrixXd x = random_matrix(15, 4, 2);
    const Eigen::VectorXd y = random_matrix(15, 1, 6).col(0);
    const auto m = fit(RegressionBackendSpec::ridge(0.3), x, y);
    const auto back = FittedModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    EXPECT_EQ(back.predict(x), m.predict(x));
}

TEST(Mlp, FitsSineWave) {
    const int n = 200;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = -3.0 + 6.0 * i / (n - 1);
        y(i) = std::sin(x(i, 0));
    }
    const auto m = fit(RegressionBackendSpec::mlp({64, 64}, 1000, 1e-2, 5), x, y);
    const double max_residual = (m.predict(x) - y).cwiseAbs().maxCoeff();
    std::cout << "[ mlp sine ] max train residual " << max_residual << '\n';
    EXPECT_LT(max_residual, 0.1);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto net = MlpNetwork::init(3, {6}, seed);
        const Eigen::MatrixXd z = random_matrix(8, 3, seed + 100);
        const Eigen::VectorXd target = random_matrix(8, 1, seed + 200).col(0);
        Eigen::VectorXd grad;
        mlp_loss_and_gradient(net, z, target, &grad);
        Eigen::VectorXd theta = net.flatten();
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            auto probe = net;
            Eigen::VectorXd tp = theta, tm = theta;
            tp(i) += h;
            tm(i) -= h;
            probe.unflatten(tp);
            const double lp = mlp_loss_and_gradient(probe, z, target, nullptr);
            probe.unflatten(tm);
            const double lm = mlp_loss_and_gradient(probe, z, target, nullptr);
            const double fd = (lp - lm) / (2.0 * h);
            const double denom = std::max({std::abs(fd), std::abs(grad(i)), 1e-8});
            EXPECT_LT(std::abs(fd - grad(i)) / denom, 1e-4) << "seed " << seed << " param " << i;
        }
    }
}

TEST(Mlp, SeededTrainingIsReproducible) {
    const Eigen::MatrixXd x = random_matrix(40, 3, 1);
    const Eigen::VectorXd y = random_matrix(40, 1, 2).col(0);
    const auto spec = RegressionBackendSpec::mlp({8}, 50, 1e-2, 9);
    EXPECT_EQ(fit(spec, x, y).predict(x), fit(spec, x, y).predict(x));
    const auto m = fit(spec, x, y);
    const auto back = FittedModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    EXPECT_EQ(back.predict(x), m.predict(x));
}

TEST(BackendSpec, JsonRoundTrip) {
    const auto s = RegressionBackendSpec::mlp({16, 8}, 30, 5e-3, 4);
    EXPECT_EQ(backend_spec_from_json(to_json(s)), s);
    EXPECT_THROW(parse_backend_kind("forest"), std::invalid_argument);
}
