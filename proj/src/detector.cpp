#include "ecad/detector.hpp"

#include "csv.hpp"

#include <algorithm>
#include <stdexcept>

namespace ecad {

double p_value(std::span<const double> window, double s) {
    if (window.empty()) throw std::invalid_argument("p_value: empty comparison window");
    std::size_t ge = 0;
    for (double v : window) ge += (v >= s) ? 1 : 0;
    return static_cast<double>(ge) / static_cast<double>(window.size());
}

ScoreStore ScoreStore::from_training(const std::vector<TrainingScore>& scores, std::size_t sensors) {
    ScoreStore store(sensors);
    for (const auto& s : scores) store.seed(s.k, s.t, s.score);
    return store;
}

void ScoreStore::seed(std::size_t k, std::size_t t, double score) {
    if (k >= windows_.size()) throw std::out_of_range("unknown sensor id " + std::to_string(k));
    auto& w = windows_[k];
    if (!w.empty() && w.back().t >= t) throw std::invalid_argument("score store seeded out of time order");
    w.push_back({t, score});
}

void ScoreStore::slide(std::size_t k, std::size_t t, double score) {
    if (k >= windows_.size()) throw std::out_of_range("unknown sensor id " + std::to_string(k));
    auto& w = windows_[k];
    if (w.empty()) throw std::logic_error("cannot slide an empty window (sensor " + std::to_string(k) + ")");
    if (w.back().t >= t) {
        throw std::invalid_argument("out-of-order timestamp " + std::to_string(t) + " for sensor " + std::to_string(k));
    }
    w.pop_front();
    w.push_back({t, score});
    ++evicted_[k];
}

std::size_t ScoreStore::total() const {
    std::size_t n = 0;
    for (const auto& w : windows_) n += w.size();
    return n;
}

std::optional<std::size_t> ScoreStore::last_time(std::size_t k) const {
    const auto& w = windows_.at(k);
    if (w.empty()) return std::nullopt;
    return w.back().t;
}

std::string to_string(LocalityVariant v) {
    return v == LocalityVariant::neighbor_sensors ? "neighbor_sensors" : "as_printed";
}

LocalityVariant parse_locality_variant(const std::string& name) {
    if (name == "neighbor_sensors") return LocalityVariant::neighbor_sensors;
    if (name == "as_printed") return LocalityVariant::as_printed;
    throw std::invalid_argument("unknown locality variant '" + name + "' (expected neighbor_sensors or as_printed)");
}

void DetectorConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (locality.enabled && locality.m < 1) throw std::invalid_argument("locality m must be at least 1");
    if (locality.neighbor_size < 1) throw std::invalid_argument("locality neighbor_size must be at least 1");
}

namespace {

using Window = std::deque<ScoreStore::Entry>;

// Index range [first, last) of entries with lo <= time < hi.
std::pair<std::size_t, std::size_t> time_range(const Window& w, std::size_t lo, std::size_t hi) {
    auto by_time = [](const ScoreStore::Entry& e, std::size_t t) { return e.t < t; };
    auto first = std::lower_bound(w.begin(), w.end(), lo, by_time);
    auto last = std::lower_bound(first, w.end(), hi, by_time);
    return {static_cast<std::size_t>(first - w.begin()), static_cast<std::size_t>(last - w.begin())};
}

// Calls visit(sensor, entry) for every entry of the local comparison set.
template <class Visit>
void for_each_local(const ScoreStore& store, std::size_t t, std::size_t k, std::size_t m, const NeighborMap& neighbors,
                    LocalityVariant variant, Visit&& visit) {
    if (k >= store.sensors()) throw std::out_of_range("unknown sensor id " + std::to_string(k));
    if (store.total() == 0) throw std::invalid_argument("local_window: cold score store");
    std::vector<char> is_neighbor(store.sensors(), variant == LocalityVariant::as_printed ? 1 : 0);
    if (variant == LocalityVariant::neighbor_sensors) {
        for (std::size_t j : neighbors.at(k)) is_neighbor.at(j) = 1;
    }
    const std::size_t recent_lo = t >= m ? t - m : 0;
    for (std::size_t j = 0; j < store.sensors(); ++j) {
        const auto& w = store.window(j);
        const auto [first, last] = time_range(w, is_neighbor[j] ? 0 : recent_lo, t);
        for (std::size_t i = first; i < last; ++i) visit(j, w[i]);
    }
}

}  // namespace

std::vector<ScoreKey> local_window_entries(const ScoreStore& store, std::size_t t, std::size_t k, std::size_t m,
                                           const NeighborMap& neighbors, LocalityVariant variant) {
    std::vector<ScoreKey> out;
    for_each_local(store, t, k, m, neighbors, variant,
                   [&](std::size_t j, const ScoreStore::Entry& e) { out.push_back({e.t, j, e.score}); });
    return out;
}

std::vector<double> local_window(const ScoreStore& store, std::size_t t, std::size_t k, std::size_t m,
                                 const NeighborMap& neighbors, LocalityVariant variant) {
    std::vector<double> out;
    for_each_local(store, t, k, m, neighbors, variant,
                   [&](std::size_t, const ScoreStore::Entry& e) { out.push_back(e.score); });
    return out;
}

ConformalDetector::ConformalDetector(ScoreStore store, DetectorConfig cfg, NeighborMap neighbors)
    : store_(std::move(store)), cfg_(cfg), neighbors_(std::move(neighbors)) {
    cfg_.validate();
    if (cfg_.locality.enabled && neighbors_.size() != store_.sensors()) {
        throw std::invalid_argument("neighbor map does not cover every sensor");
    }
}

Detection ConformalDetector::observe(std::size_t t, std::size_t k, double test_score) {
    if (k >= store_.sensors()) throw std::out_of_range("unknown sensor id " + std::to_string(k));
    if (auto last = store_.last_time(k); last && *last >= t) {
        throw std::invalid_argument("out-of-order timestamp " + std::to_string(t) + " for sensor " + std::to_string(k));
    }

    std::size_t ge = 0, n = 0;
    if (cfg_.locality.enabled) {
        for_each_local(store_, t, k, cfg_.locality.m, neighbors_, cfg_.locality.variant,
                       [&](std::size_t, const ScoreStore::Entry& e) {
                           ++n;
                           ge += (e.score >= test_score) ? 1 : 0;
                       });
    } else {
        for (const auto& e : store_.window(k)) {
            ++n;
            ge += (e.score >= test_score) ? 1 : 0;
        }
    }
    if (n == 0) {
        throw std::invalid_argument("no retained scores to compare against at (t=" + std::to_string(t) +
                                    ", k=" + std::to_string(k) + ")");
    }

    Detection d;
    d.t = t;
    d.k = k;
    d.test_score = test_score;
    d.comparison_count = n;
    d.p_value = static_cast<double>(ge) / static_cast<double>(n);
    d.flagged = is_flagged(d.p_value, cfg_.alpha);

    if (!(d.flagged && cfg_.exclude_flagged_from_window)) store_.slide(k, t, test_score);
    return d;
}

std::vector<Detection> detect_stream(const Ensemble& ensemble, const FeatureMatrix& stream, const DetectorConfig& cfg,
                                     const NeighborMap& neighbors, Execution exec) {
    cfg.validate();
    const std::size_t K = ensemble.layout.sensors;
    for (std::size_t r = 0; r < stream.size(); ++r) {
        if (stream.sensor[r] >= K) throw std::out_of_range("unknown sensor id " + std::to_string(stream.sensor[r]));
    }
    const auto scores = test_scores(ensemble, stream, cfg.alpha, exec);
    ConformalDetector detector(ScoreStore::from_training(ensemble.training_scores, K), cfg, neighbors);
    std::vector<Detection> out;
    out.reserve(stream.size());
    for (std::size_t r = 0; r < stream.size(); ++r) out.push_back(detector.observe(stream.time[r], stream.sensor[r], scores[r]));
    return out;
}

std::string format_detections(const std::vector<Detection>& detections) {
    std::string out = "t,k,test_score,p_value,flagged\n";
    for (const auto& d : detections) {
        out += std::to_string(d.t) + ',' + std::to_string(d.k) + ',' + csv::format_double(d.test_score) + ',' +
               csv::format_double(d.p_value) + ',' + (d.flagged ? "1" : "0") + '\n';
    }
    return out;
}

void write_detections(const std::string& path, const std::vector<Detection>& detections) {
    csv::write_file(path, format_detections(detections));
}

std::vector<Detection> parse_detections(const std::string& text) {
    auto lines = csv::split_lines(text);
    if (lines.empty() || csv::split_fields(lines[0]) != std::vector<std::string>{"t", "k", "test_score", "p_value", "flagged"}) {
        throw std::invalid_argument("detections CSV header must be 't,k,test_score,p_value,flagged'");
    }
    std::vector<Detection> out;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto c = csv::split_fields(lines[r]);
        if (c.size() != 5) throw std::invalid_argument("ragged row " + std::to_string(r + 1) + " in detections CSV");
        auto t = csv::parse_index(c[0]);
        auto k = csv::parse_index(c[1]);
        auto s = csv::parse_double(c[2]);
        auto p = csv::parse_double(c[3]);
        if (!t || !k || !s || !p || (c[4] != "0" && c[4] != "1")) {
            throw std::invalid_argument("malformed row " + std::to_string(r + 1) + " in detections CSV");
        }
        out.push_back({*t, *k, *s, *p, c[4] == "1", 0});
    }
    return out;
}

std::vector<Detection> load_detections(const std::string& path) {
    return parse_detections(csv::read_file(path));
}

}  // namespace ecad
