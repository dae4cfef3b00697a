#include "ecad/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ecad {

namespace {

std::size_t nearest_rank_index(std::size_t n, double level) {
    const double pos = std::ceil(level * static_cast<double>(n));
    if (pos <= 1.0) return 0;
    return std::min(n - 1, static_cast<std::size_t>(pos) - 1);
}

}  // namespace

double empirical_quantile_inplace(std::span<double> scratch, double level) {
    if (scratch.empty()) throw std::invalid_argument("empirical_quantile: empty input");
    if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("empirical_quantile: level outside [0, 1]");
    const std::size_t idx = nearest_rank_index(scratch.size(), level);
    auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(idx);
    std::nth_element(scratch.begin(), nth, scratch.end());
    return *nth;
}

double empirical_quantile(std::span<const double> values, double level) {
    std::vector<double> scratch(values.begin(), values.end());
    return empirical_quantile_inplace(scratch, level);
}

Aggregator Aggregator::trimmed_mean(double fraction) {
    Aggregator a{AggregatorKind::trimmed_mean, fraction};
    a.validate();
    return a;
}

void Aggregator::validate() const {
    if (kind == AggregatorKind::trimmed_mean && !(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
        throw std::invalid_argument("trimmed mean fraction must lie in [0, 0.5)");
    }
}

double Aggregator::apply_inplace(std::span<double> scratch) const {
    const std::size_t n = scratch.size();
    if (n == 0) throw std::invalid_argument("aggregator applied to an empty set");
    switch (kind) {
        case AggregatorKind::mean:
            return std::accumulate(scratch.begin(), scratch.end(), 0.0) / static_cast<double>(n);
        case AggregatorKind::median: {
            std::sort(scratch.begin(), scratch.end());
            if (n % 2 == 1) return scratch[n / 2];
            return 0.5 * (scratch[n / 2 - 1] + scratch[n / 2]);
        }
        case AggregatorKind::trimmed_mean: {
            std::sort(scratch.begin(), scratch.end());
            const auto cut = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n)));
            const std::size_t kept = n - 2 * cut;
            return std::accumulate(scratch.begin() + static_cast<std::ptrdiff_t>(cut),
                                   scratch.end() - static_cast<std::ptrdiff_t>(cut), 0.0) /
                   static_cast<double>(kept);
        }
    }
    throw std::logic_error("unknown aggregator kind");
}

double Aggregator::apply(std::span<const double> values) const {
    if (kind == AggregatorKind::mean) {
        if (values.empty()) throw std::invalid_argument("aggregator applied to an empty set");
        return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    }
    std::vector<double> scratch(values.begin(), values.end());
    return apply_inplace(scratch);
}

std::string Aggregator::name() const {
    switch (kind) {
        case AggregatorKind::mean: return "mean";
        case AggregatorKind::median: return "median";
        case AggregatorKind::trimmed_mean: return "trimmed_mean";
    }
    return "?";
}

Aggregator Aggregator::parse(const std::string& name, double trim_fraction) {
    if (name == "mean") return mean();
    if (name == "median") return median();
    if (name == "trimmed_mean") return trimmed_mean(trim_fraction);
    throw std::invalid_argument("unknown aggregator '" + name + "' (expected mean, median or trimmed_mean)");
}

}  // namespace ecad
