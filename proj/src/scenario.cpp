#include "ecad/scenario.hpp"

#include "csv.hpp"
#include "ecad/aggregate.hpp"
#include "ecad/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ecad {

namespace {

// Generating structure. Feature construction (5 lags of 5 neighbors by
// default) nests these, so the linear model is correctly specified for ridge.
constexpr std::size_t kTrueNeighbors = 3;
constexpr double kLinearLevel = 10.0;
constexpr double kSelfLag1 = 0.5;
constexpr double kSelfLag2 = 0.1;
constexpr double kNeighborLag1 = 0.15;

constexpr double kSeasonalSelf = 0.6;
constexpr double kSeasonalNeighbor = 0.2;
constexpr double kSeasonalSaturation = 2.0;

enum Stream : std::uint64_t { kPlacement = 1, kInit, kNoise, kInjection, kProfile };

double daily_profile(double hour) {
    auto bump = [](double h, double center, double width) {
        double dist = std::fmod(std::abs(h - center), 24.0);
        dist = std::min(dist, 24.0 - dist);
        return std::exp(-0.5 * dist * dist / (width * width));
    };
    return 0.2 + bump(hour, 8.0, 1.5) + 0.8 * bump(hour, 17.0, 2.0);
}

}  // namespace

void ScenarioConfig::validate() const {
    if (K < 1) throw std::invalid_argument("scenario K must be at least 1");
    if (T_train < 2) throw std::invalid_argument("scenario T_train must be at least 2");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("scenario noise_sigma must be non-negative");
    if (error_dependence.kind == ErrorKind::ar1 && !(std::abs(error_dependence.rho) < 1.0)) {
        throw std::invalid_argument("ar1 rho must satisfy |rho| < 1");
    }
    if (!(anomaly_injection.rate >= 0.0 && anomaly_injection.rate < 0.5)) {
        throw std::invalid_argument("anomaly injection rate must lie in [0, 0.5)");
    }
    if (!(anomaly_injection.magnitude_sigma > 0.0)) throw std::invalid_argument("anomaly magnitude must be positive");
    if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) {
        throw std::invalid_argument("missing_fraction must lie in [0, 1)");
    }
    if (!(truth.alpha_gt > 0.0 && truth.alpha_gt < 0.5)) throw std::invalid_argument("truth alpha_gt must lie in (0, 0.5)");
    if (truth.d < 1) throw std::invalid_argument("truth d must be at least 1");
    if (truth.neighbor_size < 1 || truth.neighbor_size > K) {
        throw std::invalid_argument("truth neighbor_size must lie in [1, K]");
    }
}

std::string to_string(ScenarioModel m) {
    return m == ScenarioModel::linear_neighbor_lag ? "linear_neighbor_lag" : "seasonal_nonlinear";
}

ScenarioModel parse_scenario_model(const std::string& name) {
    if (name == "linear_neighbor_lag") return ScenarioModel::linear_neighbor_lag;
    if (name == "seasonal_nonlinear") return ScenarioModel::seasonal_nonlinear;
    throw std::invalid_argument("unknown scenario model '" + name + "'");
}

nlohmann::json to_json(const ScenarioConfig& c) {
    return {{"K", c.K},
            {"T_train", c.T_train},
            {"T_test", c.T_test},
            {"model", to_string(c.model)},
            {"noise_sigma", c.noise_sigma},
            {"error_dependence",
             {{"kind", c.error_dependence.kind == ErrorKind::iid ? "iid" : "ar1"}, {"rho", c.error_dependence.rho}}},
            {"anomaly_injection",
             {{"rate", c.anomaly_injection.rate},
              {"magnitude_sigma", c.anomaly_injection.magnitude_sigma},
              {"include_training", c.anomaly_injection.include_training}}},
            {"missing_fraction", c.missing_fraction},
            {"truth", {{"alpha_gt", c.truth.alpha_gt}, {"d", c.truth.d}, {"neighbor_size", c.truth.neighbor_size}}},
            {"seed", c.seed}};
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j, ScenarioConfig c) {
    if (j.contains("K")) c.K = j.at("K").get<std::size_t>();
    if (j.contains("T_train")) c.T_train = j.at("T_train").get<std::size_t>();
    if (j.contains("T_test")) c.T_test = j.at("T_test").get<std::size_t>();
    if (j.contains("model")) c.model = parse_scenario_model(j.at("model").get<std::string>());
    if (j.contains("noise_sigma")) c.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("error_dependence")) {
        const auto& e = j.at("error_dependence");
        if (e.contains("kind")) {
            const auto kind = e.at("kind").get<std::string>();
            if (kind == "iid") {
                c.error_dependence.kind = ErrorKind::iid;
            } else if (kind == "ar1") {
                c.error_dependence.kind = ErrorKind::ar1;
            } else {
                throw std::invalid_argument("unknown error dependence '" + kind + "' (expected iid or ar1)");
            }
        }
        if (e.contains("rho")) c.error_dependence.rho = e.at("rho").get<double>();
    }
    if (j.contains("anomaly_injection")) {
        const auto& a = j.at("anomaly_injection");
        if (a.contains("rate")) c.anomaly_injection.rate = a.at("rate").get<double>();
        if (a.contains("magnitude_sigma")) c.anomaly_injection.magnitude_sigma = a.at("magnitude_sigma").get<double>();
        if (a.contains("include_training")) c.anomaly_injection.include_training = a.at("include_training").get<bool>();
    }
    if (j.contains("missing_fraction")) c.missing_fraction = j.at("missing_fraction").get<double>();
    if (j.contains("truth")) {
        const auto& t = j.at("truth");
        if (t.contains("alpha_gt")) c.truth.alpha_gt = t.at("alpha_gt").get<double>();
        if (t.contains("d")) c.truth.d = t.at("d").get<std::size_t>();
        if (t.contains("neighbor_size")) c.truth.neighbor_size = t.at("neighbor_size").get<std::size_t>();
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

ScenarioTruth::ScenarioTruth(std::size_t rows, std::size_t cols, GroundTruthParams params)
    : rows_(rows), cols_(cols), params_(params), label_(rows * cols, -1), injected_(rows * cols, 0) {}

bool ScenarioTruth::is_anomaly(std::size_t t, std::size_t k) const {
    const auto v = label_.at(t * cols_ + k);
    if (v < 0) throw std::out_of_range("no ground-truth label at t=" + std::to_string(t) + " (t < d)");
    return v == 1;
}

Scenario generate(const ScenarioConfig& cfg) {
    cfg.validate();
    const std::size_t K = cfg.K;
    const std::size_t T = cfg.rows();

    std::vector<SensorMetadata> sensors(K);
    {
        std::mt19937_64 gen(derive_seed(cfg.seed, kPlacement));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t k = 0; k < K; ++k) sensors[k] = {k, u(gen), u(gen)};
    }
    const auto true_neighbors = neighbor_sets(sensors, std::min(kTrueNeighbors, K));

    // Errors, generated per sensor so sensors are independent.
    std::vector<double> eps(T * K);
    {
        std::mt19937_64 gen(derive_seed(cfg.seed, kNoise));
        std::normal_distribution<double> normal(0.0, 1.0);
        const bool ar1 = cfg.error_dependence.kind == ErrorKind::ar1;
        const double rho = ar1 ? cfg.error_dependence.rho : 0.0;
        const double innov = std::sqrt(1.0 - rho * rho);
        for (std::size_t k = 0; k < K; ++k) {
            double prev = normal(gen);
            for (std::size_t t = 0; t < T; ++t) {
                const double e = (t == 0) ? prev : rho * prev + innov * normal(gen);
                eps[t * K + k] = cfg.noise_sigma * e;
                prev = e;
            }
        }
    }

    std::mt19937_64 init_gen(derive_seed(cfg.seed, kInit));
    std::uniform_real_distribution<double> init_offset(-1.0, 1.0);
    Panel panel(T, K, sensors);

    if (cfg.model == ScenarioModel::linear_neighbor_lag) {
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t k = 0; k < K; ++k) {
                double v;
                if (t < 2) {
                    v = kLinearLevel + init_offset(init_gen);
                } else {
                    double dev = kSelfLag1 * (panel.at(t - 1, k) - kLinearLevel) +
                                 kSelfLag2 * (panel.at(t - 2, k) - kLinearLevel);
                    for (std::size_t i = 1; i < true_neighbors[k].size(); ++i) {
                        dev += kNeighborLag1 * (panel.at(t - 1, true_neighbors[k][i]) - kLinearLevel);
                    }
                    v = kLinearLevel + dev;
                }
                panel.set(t, k, v + eps[t * K + k]);
            }
        }
    } else {
        std::mt19937_64 gen(derive_seed(cfg.seed, kProfile));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> level(K), amplitude(K), shift(K);
        for (std::size_t k = 0; k < K; ++k) {
            level[k] = 5.0 + 10.0 * u(gen);
            amplitude[k] = 20.0 * (0.6 + 0.8 * u(gen));
            shift[k] = 2.0 * (sensors[k].x - 0.5);  // hours; nearby sensors peak together
        }
        auto profile = [&](std::size_t t, std::size_t k) {
            return level[k] + amplitude[k] * daily_profile(static_cast<double>(t % 24) - shift[k]);
        };
        std::vector<double> dev(T * K, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t k = 0; k < K; ++k) {
                double d;
                if (t == 0) {
                    d = init_offset(init_gen);
                } else {
                    double drive = kSeasonalSelf * dev[(t - 1) * K + k];
                    for (std::size_t i = 1; i < true_neighbors[k].size(); ++i) {
                        drive += kSeasonalNeighbor * dev[(t - 1) * K + true_neighbors[k][i]];
                    }
                    d = kSeasonalSaturation * std::tanh(drive / kSeasonalSaturation);
                }
                dev[t * K + k] = d + eps[t * K + k];
                panel.set(t, k, profile(t, k) + dev[t * K + k]);
            }
        }
    }

    std::vector<std::uint8_t> injected(T * K, 0);
    if (cfg.anomaly_injection.rate > 0.0) {
        std::mt19937_64 gen(derive_seed(cfg.seed, kInjection));
        std::bernoulli_distribution hit(cfg.anomaly_injection.rate);
        std::bernoulli_distribution up(0.5);
        const double shift = cfg.anomaly_injection.magnitude_sigma * cfg.noise_sigma;
        const std::size_t first = cfg.anomaly_injection.include_training ? 0 : cfg.T_train;
        for (std::size_t t = first; t < T; ++t) {
            for (std::size_t k = 0; k < K; ++k) {
                if (!hit(gen)) continue;
                const double sign = up(gen) ? 1.0 : -1.0;
                panel.set(t, k, panel.at(t, k) + sign * shift);
                injected[t * K + k] = 1;
            }
        }
    }

    Scenario out{std::move(panel), {}};
    out.truth = label_ground_truth(out.panel, cfg.truth.alpha_gt, cfg.truth.d, cfg.truth.neighbor_size);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) out.truth.set_injected(t, k, injected[t * K + k] != 0);
    return out;
}

ScenarioTruth label_ground_truth(const Panel& panel, double alpha_gt, std::size_t d, std::size_t n_size) {
    if (!(alpha_gt > 0.0 && alpha_gt < 1.0)) throw std::invalid_argument("alpha_gt must lie in (0, 1)");
    if (d < 1) throw std::invalid_argument("lag depth d must be at least 1");
    const auto nbrs = neighbor_sets(panel.sensors(), n_size);
    ScenarioTruth truth(panel.rows(), panel.cols(), {alpha_gt, d, n_size});
    std::vector<double> pool;
    pool.reserve(d * n_size);
    for (std::size_t t = d; t < panel.rows(); ++t) {
        for (std::size_t k = 0; k < panel.cols(); ++k) {
            pool.clear();
            for (std::size_t j : nbrs[k]) {
                for (std::size_t lag = 1; lag <= d; ++lag) pool.push_back(panel.at(t - lag, j));
            }
            const double hi = empirical_quantile_inplace(pool, 1.0 - alpha_gt);
            const double lo = empirical_quantile_inplace(pool, alpha_gt);
            const double y = panel.at(t, k);
            truth.set_label(t, k, y >= hi || y <= lo);
        }
    }
    return truth;
}

Panel inject_missing(const Panel& panel, double fraction, std::size_t train_rows, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("missing fraction must lie in [0, 1)");
    if (train_rows > panel.rows()) throw std::invalid_argument("train_rows exceeds panel length");
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train_rows)));
    if (count > 0 && train_rows - count < 2) {
        throw std::invalid_argument("missing fraction leaves fewer than 2 observed training entries per column");
    }
    Panel out = panel;
    if (count == 0) return out;
    std::mt19937_64 gen(seed);
    std::vector<std::size_t> idx(train_rows);
    for (std::size_t k = 0; k < panel.cols(); ++k) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), gen);
        for (std::size_t i = 0; i < count; ++i) out.mark_missing(idx[i], k);
    }
    return out;
}

std::string format_truth(const ScenarioTruth& truth) {
    std::string out = "t,k,label,injected\n";
    for (std::size_t t = 0; t < truth.rows(); ++t) {
        for (std::size_t k = 0; k < truth.cols(); ++k) {
            const char* label = !truth.labeled(t, k) ? "-1" : (truth.is_anomaly(t, k) ? "1" : "0");
            out += std::to_string(t) + ',' + std::to_string(k) + ',' + label + ',' + (truth.injected(t, k) ? "1" : "0") + '\n';
        }
    }
    return out;
}

void write_truth(const std::string& path, const ScenarioTruth& truth) {
    csv::write_file(path, format_truth(truth));
}

ScenarioTruth parse_truth(const std::string& text) {
    auto lines = csv::split_lines(text);
    if (lines.empty() || csv::split_fields(lines[0]) != std::vector<std::string>{"t", "k", "label", "injected"}) {
        throw std::invalid_argument("truth CSV header must be 't,k,label,injected'");
    }
    struct Row {
        std::size_t t, k;
        int label;
        bool injected;
    };
    std::vector<Row> rows;
    std::size_t T = 0, K = 0;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto c = csv::split_fields(lines[r]);
        if (c.size() != 4) throw std::invalid_argument("ragged row " + std::to_string(r + 1) + " in truth CSV");
        auto t = csv::parse_index(c[0]);
        auto k = csv::parse_index(c[1]);
        if (!t || !k || (c[2] != "-1" && c[2] != "0" && c[2] != "1") || (c[3] != "0" && c[3] != "1")) {
            throw std::invalid_argument("malformed row " + std::to_string(r + 1) + " in truth CSV");
        }
        rows.push_back({*t, *k, std::stoi(c[2]), c[3] == "1"});
        T = std::max(T, *t + 1);
        K = std::max(K, *k + 1);
    }
    if (rows.size() != T * K) throw std::invalid_argument("truth CSV does not cover a full T x K grid");
    ScenarioTruth truth(T, K, {});
    for (const auto& r : rows) {
        if (r.label >= 0) truth.set_label(r.t, r.k, r.label == 1);
        truth.set_injected(r.t, r.k, r.injected);
    }
    return truth;
}

ScenarioTruth load_truth(const std::string& path) {
    return parse_truth(csv::read_file(path));
}

}  // namespace ecad
