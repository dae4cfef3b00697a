#pragma once

#include "ecad/ensemble.hpp"
#include "ecad/panel.hpp"

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace ecad {

/// Fraction of `window` scores that are >= s.
double p_value(std::span<const double> window, double s);

inline bool is_flagged(double p, double alpha) { return p <= alpha; }

struct ScoreKey {
    std::size_t t = 0;
    std::size_t k = 0;
    double score = 0.0;
    bool operator==(const ScoreKey&) const = default;
};

/// Per-sensor sliding windows of (time, score). Each window keeps the length
/// it was seeded with: every slide drops the oldest entry and appends one.
class ScoreStore {
public:
    struct Entry {
        std::size_t t = 0;
        double score = 0.0;
    };

    explicit ScoreStore(std::size_t sensors = 0) : windows_(sensors), evicted_(sensors, 0) {}
    static ScoreStore from_training(const std::vector<TrainingScore>& scores, std::size_t sensors);

    /// Appends without eviction while the store is being seeded.
    void seed(std::size_t k, std::size_t t, double score);
    /// Drops the oldest score of sensor k and appends (t, score).
    void slide(std::size_t k, std::size_t t, double score);

    std::size_t sensors() const { return windows_.size(); }
    const std::deque<Entry>& window(std::size_t k) const { return windows_.at(k); }
    std::size_t window_len(std::size_t k) const { return windows_.at(k).size(); }
    std::size_t evicted(std::size_t k) const { return evicted_.at(k); }
    std::size_t total() const;
    /// Latest time stored for sensor k, if any.
    std::optional<std::size_t> last_time(std::size_t k) const;

private:
    std::vector<std::deque<Entry>> windows_;
    std::vector<std::size_t> evicted_;
};

/// How the localized comparison reads "t-m <= t' <= t-1 or k in N_k".
enum class LocalityVariant {
    /// Recent scores from every sensor, plus all retained scores of k's neighbors.
    neighbor_sensors,
    /// The second clause taken literally, which always holds: every retained score.
    as_printed,
};

std::string to_string(LocalityVariant v);
LocalityVariant parse_locality_variant(const std::string& name);

struct LocalityConfig {
    bool enabled = true;
    std::size_t m = 5;
    std::size_t neighbor_size = 5;
    LocalityVariant variant = LocalityVariant::neighbor_sensors;
};

struct DetectorConfig {
    double alpha = 0.05;
    LocalityConfig locality;
    bool exclude_flagged_from_window = false;

    void validate() const;
};

/// Retained scores compared against a test score at (t, k): scores at times
/// t-m..t-1 from all sensors, plus every retained score of k's neighbors.
/// Only times strictly before t are eligible. Ordered by sensor, then time.
std::vector<ScoreKey> local_window_entries(const ScoreStore& store, std::size_t t, std::size_t k, std::size_t m,
                                           const NeighborMap& neighbors,
                                           LocalityVariant variant = LocalityVariant::neighbor_sensors);
std::vector<double> local_window(const ScoreStore& store, std::size_t t, std::size_t k, std::size_t m,
                                 const NeighborMap& neighbors,
                                 LocalityVariant variant = LocalityVariant::neighbor_sensors);

struct Detection {
    std::size_t t = 0;
    std::size_t k = 0;
    double test_score = 0.0;
    double p_value = 1.0;
    bool flagged = false;
    std::size_t comparison_count = 0;
    bool operator==(const Detection&) const = default;
};

/// Sequential p-value and window state. Feed test scores in time order per sensor.
class ConformalDetector {
public:
    ConformalDetector(ScoreStore store, DetectorConfig cfg, NeighborMap neighbors);

    Detection observe(std::size_t t, std::size_t k, double test_score);
    const ScoreStore& store() const { return store_; }
    const DetectorConfig& config() const { return cfg_; }

private:
    ScoreStore store_;
    DetectorConfig cfg_;
    NeighborMap neighbors_;
};

/// Scores every stream row against the ensemble, then runs the sequential
/// detection pass in stream order. The score store is seeded from the
/// ensemble's training scores.
std::vector<Detection> detect_stream(const Ensemble& ensemble, const FeatureMatrix& stream, const DetectorConfig& cfg,
                                     const NeighborMap& neighbors, Execution exec = Execution::parallel);

void write_detections(const std::string& path, const std::vector<Detection>& detections);
std::string format_detections(const std::vector<Detection>& detections);
std::vector<Detection> load_detections(const std::string& path);
std::vector<Detection> parse_detections(const std::string& text);

}  // namespace ecad
