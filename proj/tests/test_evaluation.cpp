#include "ecad/evaluation.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ecad;

TEST(Confusion, PerfectAndAlwaysAnomalous) {
    const std::vector<bool> labels{true, false, true, false, false};
    const auto perfect = confusion(labels, labels);
    EXPECT_EQ(perfect.fp, 0u);
    EXPECT_EQ(perfect.fn, 0u);
    const auto all = confusion(labels, std::vector<bool>(5, true));
    EXPECT_EQ(all.fn, 0u);
    EXPECT_EQ(all.tn, 0u);
    EXPECT_THROW(confusion(labels, {true}), std::invalid_argument);
}

TEST(Confusion, MatchesLoopOracle) {
    std::mt19937_64 gen(12);
    std::bernoulli_distribution b(0.3);
    std::vector<bool> labels(200), flags(200);
    for (std::size_t i = 0; i < 200; ++i) {
        labels[i] = b(gen);
        flags[i] = b(gen);
    }
    ConfusionCounts oracle;
    for (std::size_t i = 0; i < 200; ++i) {
        if (labels[i] && flags[i]) ++oracle.tp;
        if (!labels[i] && flags[i]) ++oracle.fp;
        if (!labels[i] && !flags[i]) ++oracle.tn;
        if (labels[i] && !flags[i]) ++oracle.fn;
    }
    EXPECT_EQ(confusion(labels, flags), oracle);
}

TEST(Metrics, DegenerateZeroOverZero) {
    const auto m = metrics({0, 0, 10, 0});
    EXPECT_EQ(m.precision, 0.0);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.f1, 0.0);
    EXPECT_TRUE(m.degenerate);
}

TEST(Metrics, AlwaysAnomalousGivesRGuessF1) {
    // 32 anomalies among 100 points, every point flagged.
    const auto m = metrics({32, 68, 0, 0});
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_DOUBLE_EQ(m.precision, 0.32);
    EXPECT_NEAR(m.f1, 2 * 0.32 / 1.32, 1e-12);
    EXPECT_NEAR(m.f1, rguess_expected_f1(0.32), 1e-12);
}

TEST(RGuess, TableValues) {
    EXPECT_EQ(rguess_expected_f1(0.0), 0.0);
    EXPECT_EQ(rguess_expected_f1(1.0), 1.0);
    EXPECT_NEAR(rguess_expected_f1(0.32), 0.4848, 1e-4);
    EXPECT_NEAR(rguess_expected_f1(0.38), 0.5507, 1e-4);
    EXPECT_THROW(rguess_expected_f1(1.1), std::invalid_argument);
    EXPECT_THROW(rguess_expected_f1(-0.1), std::invalid_argument);
}

TEST(Evaluate, PerfectDetectorScoresOneEverywhere) {
    ScenarioTruth truth(20, 3, {});
    std::vector<Detection> dets;
    for (std::size_t t = 0; t < 20; ++t)
        for (std::size_t k = 0; k < 3; ++k) {
            if (t < 3) continue;
            const bool anomalous = (t + k) % 4 == 0;
            truth.set_label(t, k, anomalous);
            dets.push_back({t, k, 0.0, anomalous ? 0.0 : 1.0, anomalous, 0});
        }
    dets.push_back({1, 0, 0.0, 1.0, false, 0});
    const auto r = evaluate(dets, truth);
    ASSERT_EQ(r.sensors.size(), 3u);
    for (const auto& s : r.sensors) EXPECT_EQ(s.metrics.f1, 1.0);
    EXPECT_EQ(r.mean_f1, 1.0);
    EXPECT_EQ(r.unlabeled_skipped, 1u);
    EXPECT_NE(format_report_csv(r).find("sensor,q,precision,recall,f1"), std::string::npos);
}

TEST(Evaluate, AnomalyFractionAndRGuessPerSensor) {
    ScenarioTruth truth(10, 1, {});
    std::vector<Detection> dets;
    for (std::size_t t = 0; t < 10; ++t) {
        truth.set_label(t, 0, t < 4);
        dets.push_back({t, 0, 0.0, 1.0, t == 0, 0});
    }
    const auto r = evaluate(dets, truth);
    EXPECT_DOUBLE_EQ(r.sensors[0].q, 0.4);
    EXPECT_NEAR(r.sensors[0].rguess_f1, 0.8 / 1.4, 1e-12);
    EXPECT_DOUBLE_EQ(r.sensors[0].metrics.precision, 1.0);
    EXPECT_DOUBLE_EQ(r.sensors[0].metrics.recall, 0.25);
    EXPECT_DOUBLE_EQ(r.flag_rate, 0.1);
}
