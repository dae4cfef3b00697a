#include "ecad/panel.hpp"
#include "ecad/scenario.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

using namespace ecad;

namespace {

std::vector<SensorMetadata> random_sensors(std::size_t K, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SensorMetadata> out(K);
    for (std::size_t k = 0; k < K; ++k) out[k] = {k, u(gen), u(gen)};
    return out;
}

Panel random_panel(std::size_t T, std::size_t K, std::uint64_t seed) {
    Panel p(T, K, random_sensors(K, seed + 1));
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) p.set(t, k, n(gen));
    return p;
}

}  // namespace

TEST(PanelIo, OneMissingCellLeavesFiveObserved) {
    const Panel p = parse_panel("sensor_0,sensor_1\n1.0,2.0\nNA,4.5\n5,6\n");
    EXPECT_EQ(p.rows(), 3u);
    EXPECT_EQ(p.cols(), 2u);
    EXPECT_EQ(p.observed_count(), 5u);
    EXPECT_FALSE(p.observed(1, 0));
    EXPECT_DOUBLE_EQ(p.at(1, 1), 4.5);
    EXPECT_THROW((void)p.at(1, 0), std::logic_error);
    EXPECT_FALSE(p.get(1, 0).has_value());
}

TEST(PanelIo, HeaderOnlyIsEmptyPanel) {
    try {
        (void)parse_panel("sensor_0,sensor_1\n");
        FAIL() << "expected an error";
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find("empty panel"), std::string::npos) << e.what();
    }
}

TEST(PanelIo, MalformedInputsAreRejected) {
    EXPECT_THROW(parse_panel("sensor_0,sensor_1\n1,2\n3\n"), std::exception);
    EXPECT_THROW(parse_panel("sensor_0,sensor_1\n1,abc\n"), std::exception);
    EXPECT_THROW(parse_panel("sensor_0,sensor_0\n1,2\n"), std::exception);
    EXPECT_THROW(parse_panel("sensor_0,sensor_2\n1,2\n"), std::exception);
    EXPECT_THROW(parse_panel(""), std::exception);
}

TEST(PanelIo, RoundTripPreservesValuesAndMask) {
    Panel p = random_panel(12, 4, 3);
    p.mark_missing(2, 1);
    p.mark_missing(7, 3);
    const Panel q = parse_panel(format_panel(p));
    ASSERT_EQ(q.rows(), p.rows());
    for (std::size_t t = 0; t < p.rows(); ++t)
        for (std::size_t k = 0; k < p.cols(); ++k) {
            ASSERT_EQ(q.observed(t, k), p.observed(t, k));
            if (p.observed(t, k)) EXPECT_EQ(q.at(t, k), p.at(t, k));
        }
}

TEST(PanelIo, FullScaleFortyPercentMissingPerColumn) {
    const std::size_t T = 8783, K = 20;
    const Panel full = random_panel(T, K, 11);
    const Panel masked = parse_panel(format_panel(inject_missing(full, 0.4, T, 5)));
    for (std::size_t k = 0; k < K; ++k) {
        const double expected = 0.6 * static_cast<double>(T);
        EXPECT_LE(std::abs(static_cast<double>(masked.observed_count(k)) - expected), 1.0) << "column " << k;
    }
}

TEST(SensorsIo, RoundTripAndValidation) {
    const auto text = std::string("sensor_id,lat,lon\n0,0.1,0.2\n1,0.5,0.9\n");
    const auto parsed = parse_sensors(text);
    ASSERT_EQ(parsed.size(), 2u);
    EXPECT_DOUBLE_EQ(parsed[1].y, 0.9);
    EXPECT_THROW(parse_sensors("sensor_id,lat,lon\n0,1.5,0.2\n"), std::exception);
}

TEST(NeighborSets, CollinearSensors) {
    const std::vector<SensorMetadata> s{{0, 0.0, 0.0}, {1, 0.1, 0.0}, {2, 0.9, 0.0}};
    const auto n = neighbor_sets(s, 2);
    EXPECT_EQ(n[0], (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(n[2], (std::vector<std::size_t>{2, 1}));
}

TEST(NeighborSets, FullSizeIsPermutation) {
    const auto s = random_sensors(7, 2);
    const auto n = neighbor_sets(s, 7);
    for (std::size_t k = 0; k < 7; ++k) {
        auto sorted = n[k];
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(sorted[j], j);
        EXPECT_EQ(n[k].front(), k);
    }
}

TEST(NeighborSets, MatchesBruteForceSort) {
    const auto s = random_sensors(20, 17);
    const auto n = neighbor_sets(s, 5);
    for (std::size_t k = 0; k < 20; ++k) {
        std::vector<std::pair<double, std::size_t>> row;
        for (std::size_t j = 0; j < 20; ++j) {
            row.emplace_back(std::hypot(s[k].x - s[j].x, s[k].y - s[j].y), j);
        }
        std::sort(row.begin(), row.end());
        for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(n[k][i], row[i].second);
    }
}

TEST(NeighborSets, RejectsBadSizes) {
    const auto s = random_sensors(4, 1);
    EXPECT_THROW(neighbor_sets(s, 0), std::invalid_argument);
    EXPECT_THROW(neighbor_sets(s, 5), std::invalid_argument);
}

TEST(Features, SingleSensorLags) {
    Panel p(4, 1, {{0, 0.5, 0.5}});
    for (std::size_t t = 0; t < 4; ++t) p.set(t, 0, static_cast<double>(t + 1));
    const auto rows = build_features(p, neighbor_sets(p.sensors(), 1), 2);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].t, 2u);
    EXPECT_EQ(rows[0].x, (std::vector<double>{2, 1}));
    EXPECT_EQ(rows[0].y, 3.0);
    EXPECT_EQ(rows[1].t, 3u);
    EXPECT_EQ(rows[1].x, (std::vector<double>{3, 2}));
    EXPECT_EQ(rows[1].y, 4.0);
}

TEST(Features, DimensionIsLagsTimesNeighbors) {
    const Panel p = random_panel(30, 8, 4);
    const auto rows = build_features(p, neighbor_sets(p.sensors(), 5), 5);
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows.front().x.size(), 25u);
    EXPECT_EQ(stack_features(rows).dim(), 25u);
}

TEST(Features, EntriesMatchIndexArithmetic) {
    const Panel p = random_panel(10, 3, 8);
    const auto nbrs = neighbor_sets(p.sensors(), 2);
    const std::size_t m = 3;
    const auto rows = build_features(p, nbrs, m);
    ASSERT_EQ(rows.size(), (10 - m) * 3);
    std::size_t r = 0;
    for (std::size_t t = m; t < 10; ++t) {
        for (std::size_t k = 0; k < 3; ++k, ++r) {
            ASSERT_EQ(rows[r].t, t);
            ASSERT_EQ(rows[r].k, k);
            EXPECT_EQ(rows[r].y, p.raw(t, k));
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t lag = 1; lag <= m; ++lag) {
                    EXPECT_EQ(rows[r].x[a * m + (lag - 1)], p.raw(t - lag, nbrs[k][a]));
                }
        }
    }
    const auto fm = stack_features(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto back = fm.row(i);
        EXPECT_EQ(back.x, rows[i].x);
        EXPECT_EQ(back.y, rows[i].y);
    }
}

TEST(Features, PureAndValidated) {
    Panel p = random_panel(10, 3, 8);
    const auto nbrs = neighbor_sets(p.sensors(), 2);
    const auto a = build_features(p, nbrs, 2);
    const auto b = build_features(p, nbrs, 2);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].x, b[i].x);
        EXPECT_EQ(a[i].y, b[i].y);
    }
    EXPECT_THROW(build_features(p, nbrs, 0), std::invalid_argument);
    EXPECT_THROW(build_features(p, nbrs, 10), std::invalid_argument);
    p.mark_missing(4, 1);
    EXPECT_THROW(build_features(p, nbrs, 2), std::exception);
}

TEST(PanelOps, SliceAndConcat) {
    const Panel p = random_panel(9, 2, 1);
    const Panel joined = p.slice_rows(0, 4).concat_rows(p.slice_rows(4, 9));
    EXPECT_EQ(joined, p);
}
