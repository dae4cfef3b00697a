#pragma once

#include "ecad/aggregate.hpp"
#include "ecad/kernels.hpp"
#include "ecad/panel.hpp"
#include "ecad/regression.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ecad {

/// B bootstrap draws over time indices. Each in-bag multiset has
/// |available| entries drawn uniformly with replacement from `available`.
class BootstrapPlan {
public:
    BootstrapPlan() = default;
    BootstrapPlan(std::vector<std::size_t> available, std::vector<std::vector<std::size_t>> in_bag, std::uint64_t seed);

    std::size_t B() const { return in_bag_.size(); }
    std::uint64_t seed() const { return seed_; }
    const std::vector<std::size_t>& available() const { return available_; }
    const std::vector<std::vector<std::size_t>>& in_bag() const { return in_bag_; }

    /// Position of time index t within available(), if present.
    std::optional<std::size_t> position(std::size_t t) const;
    /// Models whose in-bag multiset excludes t.
    const std::vector<std::uint32_t>& loo_models(std::size_t t) const;
    /// How often t was drawn into bag b.
    std::size_t multiplicity(std::size_t b, std::size_t t) const;

private:
    std::vector<std::size_t> available_;
    std::vector<std::vector<std::size_t>> in_bag_;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<std::uint32_t>> counts_;  // [b][position]
    ModelSets loo_;                                   // [position]
};

/// Draws B multisets of size |available| uniformly with replacement.
BootstrapPlan bootstrap_indices(std::vector<std::size_t> available, std::size_t B, std::uint64_t seed);

struct TrainingScore {
    std::size_t t = 0;
    std::size_t k = 0;
    double score = 0.0;
    bool operator==(const TrainingScore&) const = default;
};

/// Where the ensemble's features came from. Detection reuses these to build
/// matching test features.
struct FeatureLayout {
    std::size_t train_rows = 0;   // panel rows [0, train_rows) were training data
    std::size_t lags = 0;         // m
    std::size_t neighbor_size = 0;
    std::size_t sensors = 0;
    bool operator==(const FeatureLayout&) const = default;
};

struct Ensemble {
    BootstrapPlan plan;
    std::vector<FittedModel> models;
    Aggregator phi;
    /// Leave-one-out scores |y - phi(out-of-bag predictions)|, ordered by (t, k).
    std::vector<TrainingScore> training_scores;
    /// Time indices dropped from the score set because every model had them in-bag.
    std::vector<std::size_t> empty_loo_times;
    FeatureLayout layout;

    std::size_t input_dim() const { return models.empty() ? 0 : models.front().input_dim(); }
    /// Model sets of every time index with a non-empty leave-one-out set, in time order.
    ModelSets loo_sets() const;
};

Ensemble train_ensemble(const FeatureMatrix& rows, const RegressionBackendSpec& spec, std::size_t B,
                        const Aggregator& phi, std::uint64_t seed, Execution exec = Execution::parallel);
Ensemble train_ensemble(const std::vector<FeatureRow>& rows, const RegressionBackendSpec& spec, std::size_t B,
                        const Aggregator& phi, std::uint64_t seed, Execution exec = Execution::parallel);

/// phi over predictions at x of the models whose bag excludes time index i.
double loo_predict(const Ensemble& ensemble, std::size_t i, std::span<const double> x);

/// f_{-i}(x) for every time index i with a non-empty leave-one-out set.
std::vector<double> loo_predictions(const Ensemble& ensemble, std::span<const double> x);

/// |y - (1 - alpha) nearest-rank quantile of loo_predictions(x)|.
double test_score(const Ensemble& ensemble, std::span<const double> x, double y, double alpha);

/// Test scores for every row of `rows`, computed through the kernels.
std::vector<double> test_scores(const Ensemble& ensemble, const FeatureMatrix& rows, double alpha,
                                Execution exec = Execution::parallel);

inline constexpr const char* kEnsembleFormat = "ecad-ensemble";
inline constexpr int kEnsembleVersion = 1;

void save_ensemble(const std::string& path, const Ensemble& ensemble);
Ensemble load_ensemble(const std::string& path);
std::string serialize_ensemble(const Ensemble& ensemble);
Ensemble deserialize_ensemble(const std::string& text);

}  // namespace ecad
