#include "ecad/regression.hpp"
#include "ecad/scenario.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace ecad;
using ecad::testing::brute_neighbors;

namespace {

ScenarioConfig small_config(std::uint64_t seed) {
    ScenarioConfig c;
    c.K = 6;
    c.T_train = 200;
    c.T_test = 100;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Scenario, DeterministicGivenSeed) {
    const auto a = generate(small_config(3));
    const auto b = generate(small_config(3));
    EXPECT_EQ(a.panel, b.panel);
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_FALSE(generate(small_config(4)).panel == a.panel);
    auto seasonal = small_config(3);
    seasonal.model = ScenarioModel::seasonal_nonlinear;
    EXPECT_EQ(generate(seasonal).panel, generate(seasonal).panel);
}

TEST(Scenario, DefaultShapeMatchesTwentySensors) {
    ScenarioConfig c;
    c.T_train = 50;
    c.T_test = 20;
    const auto s = generate(c);
    EXPECT_EQ(s.panel.cols(), 20u);
    EXPECT_EQ(s.panel.rows(), 70u);
    EXPECT_TRUE(s.panel.complete());
    for (const auto& m : s.panel.sensors()) {
        EXPECT_GE(m.x, 0.0);
        EXPECT_LE(m.x, 1.0);
    }
}

TEST(Scenario, AveragePairwiseDistanceOfUniformPlacement) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        ScenarioConfig c;
        c.T_train = 10;
        c.T_test = 5;
        c.seed = seed;
        const auto s = generate(c).panel.sensors();
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j) {
                sum += sensor_distance(s[i], s[j]);
                ++pairs;
            }
    }
    // Mean distance between two uniform points in the unit square.
    EXPECT_NEAR(sum / static_cast<double>(pairs), 0.5214, 0.02);
}

TEST(Scenario, NoiselessLinearRecursionIsExactlyLinear) {
    auto c = small_config(9);
    c.noise_sigma = 0.0;
    const auto s = generate(c);
    const auto& p = s.panel;
    for (std::size_t k = 0; k < p.cols(); ++k) {
        const auto nb = brute_neighbors(p.sensors(), k, 3);
        const std::size_t n = p.rows() - 2;
        Eigen::MatrixXd x(n, 4);
        Eigen::VectorXd y(n);
        for (std::size_t t = 2; t < p.rows(); ++t) {
            const auto r = static_cast<Eigen::Index>(t - 2);
            x(r, 0) = p.at(t - 1, k);
            x(r, 1) = p.at(t - 2, k);
            x(r, 2) = p.at(t - 1, nb[1]);
            x(r, 3) = p.at(t - 1, nb[2]);
            y(r) = p.at(t, k);
        }
        const auto m = fit(RegressionBackendSpec::ridge(0.0), x, y);
        EXPECT_LT((m.predict(x) - y).cwiseAbs().maxCoeff(), 1e-8) << "sensor " << k;
    }
}

TEST(Labeler, MatchesBruteForce) {
    const Panel p = ecad::testing::random_sited_panel(50, 5, 31);
    const auto truth = label_ground_truth(p, 0.01, 3, 4);
    const auto oracle = ecad::testing::brute_labels(p, 0.01, 3, 4);
    std::size_t positives = 0;
    for (std::size_t t = 0; t < 50; ++t)
        for (std::size_t k = 0; k < 5; ++k) {
            if (oracle[t][k] < 0) {
                EXPECT_FALSE(truth.labeled(t, k));
                continue;
            }
            ASSERT_TRUE(truth.labeled(t, k));
            EXPECT_EQ(truth.is_anomaly(t, k), oracle[t][k] == 1) << "t=" << t << " k=" << k;
            positives += static_cast<std::size_t>(oracle[t][k]);
        }
    EXPECT_GT(positives, 0u);
}

TEST(Labeler, ConstantPanelLabelsEverything) {
    Panel p(10, 4, {{0, 0.1, 0.1}, {1, 0.2, 0.2}, {2, 0.8, 0.1}, {3, 0.5, 0.9}});
    for (std::size_t t = 0; t < 10; ++t)
        for (std::size_t k = 0; k < 4; ++k) p.set(t, k, 7.0);
    const auto truth = label_ground_truth(p, 0.01, 3, 4);
    for (std::size_t t = 3; t < 10; ++t)
        for (std::size_t k = 0; k < 4; ++k) EXPECT_TRUE(truth.is_anomaly(t, k));
    EXPECT_THROW(truth.is_anomaly(1, 0), std::out_of_range);
}

TEST(Labeler, MarksMostInjectedSpikes) {
    ScenarioConfig c;
    c.K = 10;
    c.T_train = 500;
    c.T_test = 2000;
    c.seed = 1;
    c.anomaly_injection.rate = 0.02;
    c.anomaly_injection.magnitude_sigma = 6.0;
    const auto s = generate(c);
    std::size_t injected = 0, labeled = 0;
    for (std::size_t t = 0; t < s.truth.rows(); ++t)
        for (std::size_t k = 0; k < s.truth.cols(); ++k) {
            if (!s.truth.injected(t, k)) continue;
            EXPECT_GE(t, c.T_train);
            ++injected;
            labeled += s.truth.is_anomaly(t, k) ? 1 : 0;
        }
    ASSERT_GT(injected, 0u);
    const double recall = static_cast<double>(labeled) / static_cast<double>(injected);
    std::cout << "[ labeler ] injected " << injected << " labeled fraction " << recall << '\n';
    EXPECT_GE(recall, 0.8);
}

TEST(InjectMissing, ZeroFractionIsIdentity) {
    const auto s = generate(small_config(1));
    EXPECT_EQ(inject_missing(s.panel, 0.0, 200, 3), s.panel);
}

TEST(InjectMissing, ExactPerColumnCountsInTrainingRowsOnly) {
    auto c = small_config(2);
    c.T_train = 1000;
    const auto s = generate(c);
    const auto m = inject_missing(s.panel, 0.4, 1000, 7);
    for (std::size_t k = 0; k < m.cols(); ++k) {
        std::size_t train_obs = 0;
        for (std::size_t t = 0; t < 1000; ++t) train_obs += m.observed(t, k) ? 1 : 0;
        EXPECT_EQ(train_obs, 600u);
        for (std::size_t t = 1000; t < m.rows(); ++t) EXPECT_TRUE(m.observed(t, k));
    }
}

TEST(InjectMissing, ColumnsAreMaskedIndependently) {
    Panel p(50, 2);
    for (std::size_t t = 0; t < 50; ++t)
        for (std::size_t k = 0; k < 2; ++k) p.set(t, k, 1.0);
    int differ = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto m = inject_missing(p, 0.4, 50, seed);
        bool same = true;
        for (std::size_t t = 0; t < 50; ++t) same = same && (m.observed(t, 0) == m.observed(t, 1));
        differ += same ? 0 : 1;
    }
    EXPECT_GE(differ, 99);
}

TEST(ScenarioIo, TruthCsvAndConfigJsonRoundTrip) {
    auto c = small_config(5);
    c.anomaly_injection.rate = 0.05;
    const auto s = generate(c);
    EXPECT_EQ(parse_truth(format_truth(s.truth)), s.truth);

    c.model = ScenarioModel::seasonal_nonlinear;
    c.error_dependence = {ErrorKind::ar1, 0.5};
    const auto back = scenario_config_from_json(nlohmann::json::parse(to_json(c).dump()));
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(ScenarioIo, ValidationRejectsBadParameters) {
    auto c = small_config(1);
    c.anomaly_injection.rate = 0.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config(1);
    c.error_dependence = {ErrorKind::ar1, 1.0};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config(1);
    c.missing_fraction = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}
