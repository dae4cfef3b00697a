// Independent reference implementations shared by the unit and acceptance tests.
#pragma once

#include "ecad/panel.hpp"
#include "ecad/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace ecad::testing {

inline double brute_p(const std::vector<double>& window, double s) {
    std::size_t c = 0;
    for (double x : window)
        if (x >= s) ++c;
    return static_cast<double>(c) / static_cast<double>(window.size());
}

inline std::vector<std::size_t> brute_neighbors(const std::vector<SensorMetadata>& s, std::size_t k, std::size_t size) {
    std::vector<std::pair<double, std::size_t>> row;
    for (std::size_t j = 0; j < s.size(); ++j) row.emplace_back(std::hypot(s[k].x - s[j].x, s[k].y - s[j].y), j);
    std::sort(row.begin(), row.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size; ++i) out.push_back(row[i].second);
    return out;
}

/// Anomaly rule evaluated by sorting each pool; -1 where t < d.
inline std::vector<std::vector<int>> brute_labels(const Panel& p, double alpha, std::size_t d, std::size_t n) {
    std::vector<std::vector<int>> out(p.rows(), std::vector<int>(p.cols(), -1));
    for (std::size_t t = d; t < p.rows(); ++t)
        for (std::size_t k = 0; k < p.cols(); ++k) {
            std::vector<double> pool;
            for (std::size_t j : brute_neighbors(p.sensors(), k, n))
                for (std::size_t lag = 1; lag <= d; ++lag) pool.push_back(p.at(t - lag, j));
            std::sort(pool.begin(), pool.end());
            const double size = static_cast<double>(pool.size());
            auto rank = [&](double level) {
                const auto r = static_cast<long>(std::ceil(level * size)) - 1;
                return pool[static_cast<std::size_t>(std::max(0L, r))];
            };
            out[t][k] = (p.at(t, k) >= rank(1.0 - alpha) || p.at(t, k) <= rank(alpha)) ? 1 : 0;
        }
    return out;
}

inline Panel random_sited_panel(std::size_t T, std::size_t K, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SensorMetadata> sensors(K);
    for (std::size_t k = 0; k < K; ++k) sensors[k] = {k, u(gen), u(gen)};
    Panel p(T, K, sensors);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) p.set(t, k, g(gen));
    return p;
}

/// Ridge on centered data via normal equations and Gauss-Jordan elimination.
/// Returns (weights, intercept).
inline std::pair<std::vector<double>, double> naive_ridge(const std::vector<std::vector<double>>& xs,
                                                          const std::vector<double>& ys, double lambda) {
    const std::size_t n = ys.size(), d = xs.front().size();
    std::vector<double> mx(d, 0.0);
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) mx[j] += xs[i][j] / static_cast<double>(n);
        my += ys[i] / static_cast<double>(n);
    }
    std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t l = 0; l < d; ++l) a[j][l] += (xs[i][j] - mx[j]) * (xs[i][l] - mx[l]);
            a[j][d] += (xs[i][j] - mx[j]) * (ys[i] - my);
        }
    for (std::size_t j = 0; j < d; ++j) a[j][j] += lambda;
    for (std::size_t c = 0; c < d; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < d; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < d; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t l = c; l <= d; ++l) a[r][l] -= f * a[c][l];
        }
    }
    std::vector<double> w(d);
    double b0 = my;
    for (std::size_t j = 0; j < d; ++j) {
        w[j] = a[j][d] / a[j][j];
        b0 -= w[j] * mx[j];
    }
    return {w, b0};
}

/// Y_tk = a_t * b_k with a_t in [1, 5] and b_k in [0.5, 2].
inline Panel rank_one_panel(std::size_t T, std::size_t K, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> ua(1.0, 5.0), ub(0.5, 2.0);
    std::vector<double> a(T), b(K);
    for (auto& v : a) v = ua(gen);
    for (auto& v : b) v = ub(gen);
    Panel p(T, K);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) p.set(t, k, a[t] * b[k]);
    return p;
}

/// RMSE over cells that `masked` hides.
inline double masked_rmse(const Panel& truth, const Panel& masked, const Panel& filled) {
    double se = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < truth.rows(); ++t)
        for (std::size_t k = 0; k < truth.cols(); ++k) {
            if (masked.observed(t, k)) continue;
            const double d = filled.at(t, k) - truth.at(t, k);
            se += d * d;
            ++n;
        }
    return std::sqrt(se / static_cast<double>(n));
}

inline Panel column_mean_fill(const Panel& masked) {
    Panel out = masked;
    for (std::size_t k = 0; k < masked.cols(); ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t < masked.rows(); ++t)
            if (masked.observed(t, k)) s += masked.at(t, k);
        const double mean = s / static_cast<double>(masked.observed_count(k));
        for (std::size_t t = 0; t < masked.rows(); ++t)
            if (!masked.observed(t, k)) out.set(t, k, mean);
    }
    return out;
}

}  // namespace ecad::testing
