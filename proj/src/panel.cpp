#include "ecad/panel.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ecad {

double sensor_distance(const SensorMetadata& a, const SensorMetadata& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

Panel::Panel(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0), mask_(rows * cols, 0) {
    sensors_.resize(cols);
    for (std::size_t k = 0; k < cols; ++k) sensors_[k].sensor_id = k;
}

Panel::Panel(std::size_t rows, std::size_t cols, std::vector<SensorMetadata> sensors) : Panel(rows, cols) {
    set_sensors(std::move(sensors));
}

double Panel::at(std::size_t t, std::size_t k) const {
    if (t >= rows_ || k >= cols_) throw std::out_of_range("panel index out of range");
    if (!observed(t, k)) {
        throw std::logic_error("read of unobserved panel cell (t=" + std::to_string(t) + ", k=" + std::to_string(k) + ")");
    }
    return values_[t * cols_ + k];
}

std::optional<double> Panel::get(std::size_t t, std::size_t k) const {
    if (t >= rows_ || k >= cols_) throw std::out_of_range("panel index out of range");
    if (!observed(t, k)) return std::nullopt;
    return values_[t * cols_ + k];
}

void Panel::set(std::size_t t, std::size_t k, double v) {
    if (t >= rows_ || k >= cols_) throw std::out_of_range("panel index out of range");
    values_[t * cols_ + k] = v;
    mask_[t * cols_ + k] = 1;
}

void Panel::mark_missing(std::size_t t, std::size_t k) {
    if (t >= rows_ || k >= cols_) throw std::out_of_range("panel index out of range");
    mask_[t * cols_ + k] = 0;
}

std::size_t Panel::observed_count(std::size_t k) const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < rows_; ++t) n += mask_[t * cols_ + k];
    return n;
}

std::size_t Panel::observed_count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

bool Panel::complete() const {
    return std::all_of(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; });
}

void Panel::set_sensors(std::vector<SensorMetadata> sensors) {
    if (sensors.size() != cols_) {
        throw std::invalid_argument("sensor metadata count " + std::to_string(sensors.size()) +
                                    " does not match panel width " + std::to_string(cols_));
    }
    std::sort(sensors.begin(), sensors.end(),
              [](const SensorMetadata& a, const SensorMetadata& b) { return a.sensor_id < b.sensor_id; });
    for (std::size_t k = 0; k < sensors.size(); ++k) {
        if (sensors[k].sensor_id != k) throw std::invalid_argument("sensor ids must be the contiguous range 0..K-1");
    }
    sensors_ = std::move(sensors);
}

Panel Panel::slice_rows(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows_) throw std::out_of_range("invalid row slice");
    Panel out(end - begin, cols_, sensors_);
    std::copy(values_.begin() + begin * cols_, values_.begin() + end * cols_, out.values_.begin());
    std::copy(mask_.begin() + begin * cols_, mask_.begin() + end * cols_, out.mask_.begin());
    return out;
}

Panel Panel::concat_rows(const Panel& tail) const {
    if (tail.cols_ != cols_) throw std::invalid_argument("cannot concatenate panels of different widths");
    Panel out(rows_ + tail.rows_, cols_, sensors_);
    std::copy(values_.begin(), values_.end(), out.values_.begin());
    std::copy(tail.values_.begin(), tail.values_.end(), out.values_.begin() + values_.size());
    std::copy(mask_.begin(), mask_.end(), out.mask_.begin());
    std::copy(tail.mask_.begin(), tail.mask_.end(), out.mask_.begin() + mask_.size());
    return out;
}

namespace {

std::size_t parse_sensor_header(const std::string& name) {
    static const std::string prefix = "sensor_";
    if (name.rfind(prefix, 0) != 0) throw std::invalid_argument("malformed panel header cell '" + name + "'");
    auto id = csv::parse_index(name.substr(prefix.size()));
    if (!id) throw std::invalid_argument("malformed panel header cell '" + name + "'");
    return *id;
}

}  // namespace

Panel parse_panel(const std::string& text, const std::string& missing_token) {
    auto lines = csv::split_lines(text);
    if (lines.empty()) throw std::invalid_argument("malformed CSV: missing header");

    auto header = csv::split_fields(lines.front());
    std::vector<std::size_t> ids;
    ids.reserve(header.size());
    std::set<std::size_t> seen;
    for (const auto& h : header) {
        std::size_t id = parse_sensor_header(h);
        if (!seen.insert(id).second) throw std::invalid_argument("duplicate sensor id " + std::to_string(id));
        ids.push_back(id);
    }
    const std::size_t cols = ids.size();
    if (*seen.rbegin() != cols - 1) throw std::invalid_argument("sensor ids must be the contiguous range 0..K-1");
    if (lines.size() == 1) throw std::invalid_argument("empty panel");

    Panel panel(lines.size() - 1, cols);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto cells = csv::split_fields(lines[r]);
        if (cells.size() != cols) {
            throw std::invalid_argument("ragged row " + std::to_string(r + 1) + ": expected " + std::to_string(cols) +
                                        " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (cells[c] == missing_token) continue;
            auto v = csv::parse_double(cells[c]);
            if (!v) {
                throw std::invalid_argument("non-numeric cell '" + cells[c] + "' at row " + std::to_string(r + 1));
            }
            panel.set(r - 1, ids[c], *v);
        }
    }
    return panel;
}

Panel load_panel(const std::string& path, const std::string& missing_token) {
    return parse_panel(csv::read_file(path), missing_token);
}

std::string format_panel(const Panel& panel, const std::string& missing_token) {
    std::string out;
    for (std::size_t k = 0; k < panel.cols(); ++k) {
        if (k) out += ',';
        out += "sensor_" + std::to_string(k);
    }
    out += '\n';
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        for (std::size_t k = 0; k < panel.cols(); ++k) {
            if (k) out += ',';
            if (panel.observed(t, k)) {
                out += csv::format_double(panel.raw(t, k));
            } else {
                out += missing_token;
            }
        }
        out += '\n';
    }
    return out;
}

void write_panel(const std::string& path, const Panel& panel, const std::string& missing_token) {
    csv::write_file(path, format_panel(panel, missing_token));
}

std::vector<SensorMetadata> parse_sensors(const std::string& text) {
    auto lines = csv::split_lines(text);
    if (lines.empty()) throw std::invalid_argument("malformed sensors CSV: missing header");
    auto header = csv::split_fields(lines.front());
    if (header != std::vector<std::string>{"sensor_id", "lat", "lon"}) {
        throw std::invalid_argument("sensors CSV header must be 'sensor_id,lat,lon'");
    }
    std::vector<SensorMetadata> out;
    std::set<std::size_t> seen;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto cells = csv::split_fields(lines[r]);
        if (cells.size() != 3) throw std::invalid_argument("ragged row " + std::to_string(r + 1) + " in sensors CSV");
        auto id = csv::parse_index(cells[0]);
        auto lat = csv::parse_double(cells[1]);
        auto lon = csv::parse_double(cells[2]);
        if (!id || !lat || !lon) throw std::invalid_argument("non-numeric cell in sensors CSV row " + std::to_string(r + 1));
        if (*lat < 0.0 || *lat > 1.0 || *lon < 0.0 || *lon > 1.0) {
            throw std::invalid_argument("sensor coordinates must be scaled to [0, 1]");
        }
        if (!seen.insert(*id).second) throw std::invalid_argument("duplicate sensor id " + std::to_string(*id));
        out.push_back({*id, *lat, *lon});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sensor_id < b.sensor_id; });
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out[k].sensor_id != k) throw std::invalid_argument("sensor ids must be the contiguous range 0..K-1");
    }
    return out;
}

std::vector<SensorMetadata> load_sensors(const std::string& path) {
    return parse_sensors(csv::read_file(path));
}

void write_sensors(const std::string& path, const std::vector<SensorMetadata>& sensors) {
    std::string out = "sensor_id,lat,lon\n";
    for (const auto& s : sensors) {
        out += std::to_string(s.sensor_id) + ',' + csv::format_double(s.x) + ',' + csv::format_double(s.y) + '\n';
    }
    csv::write_file(path, out);
}

NeighborMap neighbor_sets(const std::vector<SensorMetadata>& sensors, std::size_t size) {
    const std::size_t K = sensors.size();
    if (size < 1) throw std::invalid_argument("neighbor set size must be at least 1");
    if (size > K) {
        throw std::invalid_argument("neighbor set size " + std::to_string(size) + " exceeds sensor count " +
                                    std::to_string(K));
    }
    NeighborMap out(K);
    std::vector<std::size_t> order(K);
    std::vector<double> dist(K);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < K; ++j) dist[j] = sensor_distance(sensors[k], sensors[j]);
        dist[k] = 0.0;
        std::iota(order.begin(), order.end(), std::size_t{0});
        // Self first even if another sensor shares its coordinates.
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (dist[a] != dist[b]) return dist[a] < dist[b];
            if ((a == k) != (b == k)) return a == k;
            return a < b;
        });
        out[k].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size));
    }
    return out;
}

FeatureRow FeatureMatrix::row(std::size_t r) const {
    FeatureRow out;
    out.t = time.at(r);
    out.k = sensor.at(r);
    out.x.resize(dim());
    for (std::size_t j = 0; j < dim(); ++j) out.x[j] = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
    out.y = y(static_cast<Eigen::Index>(r));
    return out;
}

std::vector<FeatureRow> build_features(const Panel& panel, const NeighborMap& neighbors, std::size_t m) {
    return build_features(panel, neighbors, m, m, panel.rows());
}

std::vector<FeatureRow> build_features(const Panel& panel, const NeighborMap& neighbors, std::size_t m,
                                       std::size_t t_begin, std::size_t t_end) {
    if (m < 1) throw std::invalid_argument("lag depth m must be at least 1");
    if (m >= panel.rows()) throw std::invalid_argument("lag depth m must be smaller than the panel length");
    if (neighbors.size() != panel.cols()) throw std::invalid_argument("neighbor map does not cover every sensor");
    if (t_begin < m) throw std::invalid_argument("feature rows start at t = m");
    if (t_end > panel.rows() || t_begin > t_end) throw std::out_of_range("invalid feature time range");
    for (std::size_t t = t_begin - m; t < t_end; ++t) {
        for (std::size_t k = 0; k < panel.cols(); ++k) {
            if (!panel.observed(t, k)) {
                throw std::invalid_argument("panel still has missing entries (t=" + std::to_string(t) +
                                            ", k=" + std::to_string(k) + "); run imputation first");
            }
        }
    }

    std::vector<FeatureRow> rows;
    rows.reserve((t_end - t_begin) * panel.cols());
    for (std::size_t t = t_begin; t < t_end; ++t) {
        for (std::size_t k = 0; k < panel.cols(); ++k) {
            FeatureRow row{t, k, {}, panel.at(t, k)};
            row.x.reserve(m * neighbors[k].size());
            for (std::size_t j : neighbors[k]) {
                for (std::size_t lag = 1; lag <= m; ++lag) row.x.push_back(panel.at(t - lag, j));
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

FeatureMatrix stack_features(const std::vector<FeatureRow>& rows) {
    FeatureMatrix out;
    const std::size_t n = rows.size();
    const std::size_t d = n ? rows.front().x.size() : 0;
    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    out.y.resize(static_cast<Eigen::Index>(n));
    out.time.resize(n);
    out.sensor.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (rows[r].x.size() != d) throw std::invalid_argument("feature rows have inconsistent dimensions");
        for (std::size_t j = 0; j < d; ++j) out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r].x[j];
        out.y(static_cast<Eigen::Index>(r)) = rows[r].y;
        out.time[r] = rows[r].t;
        out.sensor[r] = rows[r].k;
    }
    return out;
}

}  // namespace ecad
