#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ecad {

struct SensorMetadata {
    std::size_t sensor_id = 0;
    double x = 0.0;  // scaled coordinates, each in [0, 1]
    double y = 0.0;

    bool operator==(const SensorMetadata&) const = default;
};

double sensor_distance(const SensorMetadata& a, const SensorMetadata& b);

/// T x K matrix of hourly values with a per-cell observation mask.
///
/// Unobserved cells are not readable through `at()`; callers that can
/// tolerate gaps use `get()`. `set()` writes a value and marks the cell
/// observed, which is how imputation completes a panel.
class Panel {
public:
    Panel() = default;
    Panel(std::size_t rows, std::size_t cols);
    Panel(std::size_t rows, std::size_t cols, std::vector<SensorMetadata> sensors);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    bool observed(std::size_t t, std::size_t k) const { return mask_[t * cols_ + k] != 0; }
    double at(std::size_t t, std::size_t k) const;
    std::optional<double> get(std::size_t t, std::size_t k) const;
    void set(std::size_t t, std::size_t k, double v);
    void mark_missing(std::size_t t, std::size_t k);

    std::size_t observed_count(std::size_t k) const;
    std::size_t observed_count() const;
    bool complete() const;

    const std::vector<SensorMetadata>& sensors() const { return sensors_; }
    void set_sensors(std::vector<SensorMetadata> sensors);

    /// Rows [begin, end) as a new panel sharing sensor metadata.
    Panel slice_rows(std::size_t begin, std::size_t end) const;
    /// Rows of `tail` appended below this panel. Column counts must agree.
    Panel concat_rows(const Panel& tail) const;

    // Mask-oblivious access, for writers and test oracles. Unobserved
    // cells hold whatever was last stored there (0 unless set).
    double raw(std::size_t t, std::size_t k) const { return values_[t * cols_ + k]; }

    bool operator==(const Panel&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
    std::vector<SensorMetadata> sensors_;
};

/// Reads a panel CSV (`sensor_0,...,sensor_{K-1}` header, one row per hour).
/// Cells equal to `missing_token` are unobserved. Sensor coordinates are
/// zero until attached from a coordinates file.
Panel load_panel(const std::string& path, const std::string& missing_token = "NA");
Panel parse_panel(const std::string& text, const std::string& missing_token = "NA");
void write_panel(const std::string& path, const Panel& panel, const std::string& missing_token = "NA");
std::string format_panel(const Panel& panel, const std::string& missing_token = "NA");

/// Coordinates CSV with header `sensor_id,lat,lon`.
std::vector<SensorMetadata> load_sensors(const std::string& path);
std::vector<SensorMetadata> parse_sensors(const std::string& text);
void write_sensors(const std::string& path, const std::vector<SensorMetadata>& sensors);

using NeighborMap = std::vector<std::vector<std::size_t>>;

/// For each sensor, the `size` closest sensors including itself, ordered by
/// ascending distance with ties broken by ascending sensor id.
NeighborMap neighbor_sets(const std::vector<SensorMetadata>& sensors, std::size_t size);

struct FeatureRow {
    std::size_t t = 0;
    std::size_t k = 0;
    std::vector<double> x;
    double y = 0.0;
};

/// Feature rows stacked for the regression backends: row r of `x` and
/// entry r of `y` belong to (time[r], sensor[r]).
struct FeatureMatrix {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::size_t> time;
    std::vector<std::size_t> sensor;

    std::size_t size() const { return time.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
    FeatureRow row(std::size_t r) const;
};

/// Lagged-neighbor features for every (t, k) with t in [t_begin, t_end).
/// x lists neighbors in map order; for each neighbor, lags t-1 down to t-m.
/// Rows are ordered by t, then k.
std::vector<FeatureRow> build_features(const Panel& panel, const NeighborMap& neighbors, std::size_t m);
std::vector<FeatureRow> build_features(const Panel& panel, const NeighborMap& neighbors, std::size_t m,
                                       std::size_t t_begin, std::size_t t_end);

FeatureMatrix stack_features(const std::vector<FeatureRow>& rows);

}  // namespace ecad
