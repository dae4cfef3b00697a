#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ecad {

/// Nearest-rank empirical quantile: element max(0, ceil(level * n) - 1)
/// of the ascending sort of `values`.
double empirical_quantile(std::span<const double> values, double level);

/// Same rule, but partially reorders `scratch` in place instead of copying.
double empirical_quantile_inplace(std::span<double> scratch, double level);

enum class AggregatorKind { mean, median, trimmed_mean };

/// The pointwise combiner applied to bootstrap predictions.
struct Aggregator {
    AggregatorKind kind = AggregatorKind::mean;
    double trim_fraction = 0.0;  // per tail, used by trimmed_mean only

    static Aggregator mean() { return {AggregatorKind::mean, 0.0}; }
    static Aggregator median() { return {AggregatorKind::median, 0.0}; }
    static Aggregator trimmed_mean(double fraction);

    void validate() const;

    /// Combines `values`. Median of an even count averages the middle pair;
    /// trimmed mean drops floor(fraction * n) values from each end.
    double apply(std::span<const double> values) const;
    /// As apply(), but may reorder `scratch`.
    double apply_inplace(std::span<double> scratch) const;

    std::string name() const;
    static Aggregator parse(const std::string& name, double trim_fraction = 0.1);

    bool operator==(const Aggregator&) const = default;
};

}  // namespace ecad
