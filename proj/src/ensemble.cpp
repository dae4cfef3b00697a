#include "ecad/ensemble.hpp"

#include "csv.hpp"
#include "ecad/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ecad {

BootstrapPlan::BootstrapPlan(std::vector<std::size_t> available, std::vector<std::vector<std::size_t>> in_bag,
                             std::uint64_t seed)
    : available_(std::move(available)), in_bag_(std::move(in_bag)), seed_(seed) {
    if (available_.empty()) throw std::invalid_argument("bootstrap plan: empty available set");
    if (!std::is_sorted(available_.begin(), available_.end()) ||
        std::adjacent_find(available_.begin(), available_.end()) != available_.end()) {
        throw std::invalid_argument("bootstrap plan: available indices must be sorted and distinct");
    }
    const std::size_t n = available_.size();
    counts_.assign(in_bag_.size(), std::vector<std::uint32_t>(n, 0));
    for (std::size_t b = 0; b < in_bag_.size(); ++b) {
        if (in_bag_[b].size() != n) throw std::invalid_argument("bootstrap plan: bag size differs from |available|");
        for (std::size_t t : in_bag_[b]) {
            auto pos = position(t);
            if (!pos) throw std::invalid_argument("bootstrap plan: bag contains an unavailable index");
            ++counts_[b][*pos];
        }
    }
    loo_.assign(n, {});
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t b = 0; b < in_bag_.size(); ++b) {
            if (counts_[b][p] == 0) loo_[p].push_back(static_cast<std::uint32_t>(b));
        }
    }
}

std::optional<std::size_t> BootstrapPlan::position(std::size_t t) const {
    auto it = std::lower_bound(available_.begin(), available_.end(), t);
    if (it == available_.end() || *it != t) return std::nullopt;
    return static_cast<std::size_t>(it - available_.begin());
}

const std::vector<std::uint32_t>& BootstrapPlan::loo_models(std::size_t t) const {
    auto pos = position(t);
    if (!pos) throw std::out_of_range("time index " + std::to_string(t) + " is not a training index");
    return loo_[*pos];
}

std::size_t BootstrapPlan::multiplicity(std::size_t b, std::size_t t) const {
    auto pos = position(t);
    if (!pos) return 0;
    return counts_.at(b)[*pos];
}

BootstrapPlan bootstrap_indices(std::vector<std::size_t> available, std::size_t B, std::uint64_t seed) {
    std::sort(available.begin(), available.end());
    available.erase(std::unique(available.begin(), available.end()), available.end());
    if (available.empty()) throw std::invalid_argument("bootstrap_indices: empty available set");
    if (B < 1) throw std::invalid_argument("bootstrap_indices: B must be at least 1");
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, available.size() - 1);
    std::vector<std::vector<std::size_t>> bags(B);
    for (auto& bag : bags) {
        bag.resize(available.size());
        for (auto& t : bag) t = available[pick(gen)];
    }
    return BootstrapPlan(std::move(available), std::move(bags), seed);
}

ModelSets Ensemble::loo_sets() const {
    ModelSets out;
    for (std::size_t t : plan.available()) {
        const auto& set = plan.loo_models(t);
        if (!set.empty()) out.push_back(set);
    }
    return out;
}

Ensemble train_ensemble(const FeatureMatrix& rows, const RegressionBackendSpec& spec, std::size_t B,
                        const Aggregator& phi, std::uint64_t seed, Execution exec) {
    if (rows.size() == 0) throw std::invalid_argument("train_ensemble: no feature rows");
    phi.validate();
    spec.validate();

    Ensemble ens;
    ens.phi = phi;
    ens.plan = bootstrap_indices(rows.time, B, seed);

    const std::size_t n_times = ens.plan.available().size();
    std::vector<std::vector<std::size_t>> rows_at(n_times);
    for (std::size_t r = 0; r < rows.size(); ++r) rows_at[*ens.plan.position(rows.time[r])].push_back(r);

    kernels::BagRows bags(B);
    std::vector<RegressionBackendSpec> specs(B, spec);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t : ens.plan.in_bag()[b]) {
            const auto& at = rows_at[*ens.plan.position(t)];
            bags[b].insert(bags[b].end(), at.begin(), at.end());
        }
        specs[b].seed = derive_seed(spec.seed + seed, b);
    }

    const bool par = exec == Execution::parallel;
    ens.models = par ? kernels::parallel::fit_models(rows, bags, specs) : kernels::serial::fit_models(rows, bags, specs);
    const Eigen::MatrixXd pred = par ? kernels::parallel::prediction_matrix(ens.models, rows.x)
                                     : kernels::serial::prediction_matrix(ens.models, rows.x);

    ModelSets sets(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) sets[r] = ens.plan.loo_models(rows.time[r]);
    const auto agg = par ? kernels::parallel::loo_aggregate(pred, sets, phi) : kernels::serial::loo_aggregate(pred, sets, phi);

    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (sets[r].empty()) continue;
        ens.training_scores.push_back({rows.time[r], rows.sensor[r], std::abs(rows.y(static_cast<Eigen::Index>(r)) - agg[r])});
    }
    std::sort(ens.training_scores.begin(), ens.training_scores.end(),
              [](const TrainingScore& a, const TrainingScore& b) { return a.t != b.t ? a.t < b.t : a.k < b.k; });
    for (std::size_t t : ens.plan.available()) {
        if (ens.plan.loo_models(t).empty()) ens.empty_loo_times.push_back(t);
    }
    return ens;
}

Ensemble train_ensemble(const std::vector<FeatureRow>& rows, const RegressionBackendSpec& spec, std::size_t B,
                        const Aggregator& phi, std::uint64_t seed, Execution exec) {
    return train_ensemble(stack_features(rows), spec, B, phi, seed, exec);
}

double loo_predict(const Ensemble& ensemble, std::size_t i, std::span<const double> x) {
    const auto& set = ensemble.plan.loo_models(i);
    if (set.empty()) {
        throw std::invalid_argument("loo_predict: every bootstrap model contains time index " + std::to_string(i));
    }
    std::vector<double> preds;
    preds.reserve(set.size());
    for (auto b : set) preds.push_back(ensemble.models[b].predict_one(x));
    return ensemble.phi.apply_inplace(preds);
}

std::vector<double> loo_predictions(const Ensemble& ensemble, std::span<const double> x) {
    std::vector<double> per_model;
    per_model.reserve(ensemble.models.size());
    for (const auto& m : ensemble.models) per_model.push_back(m.predict_one(x));
    std::vector<double> out, scratch;
    for (std::size_t t : ensemble.plan.available()) {
        const auto& set = ensemble.plan.loo_models(t);
        if (set.empty()) continue;
        scratch.clear();
        for (auto b : set) scratch.push_back(per_model[b]);
        out.push_back(ensemble.phi.apply_inplace(scratch));
    }
    return out;
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace

double test_score(const Ensemble& ensemble, std::span<const double> x, double y, double alpha) {
    check_alpha(alpha);
    auto preds = loo_predictions(ensemble, x);
    if (preds.empty()) throw std::invalid_argument("test_score: no leave-one-out predictor available");
    return std::abs(y - empirical_quantile_inplace(preds, 1.0 - alpha));
}

std::vector<double> test_scores(const Ensemble& ensemble, const FeatureMatrix& rows, double alpha, Execution exec) {
    check_alpha(alpha);
    if (rows.size() == 0) return {};
    if (rows.dim() != ensemble.input_dim()) throw std::invalid_argument("test_scores: feature dimension mismatch");
    const auto sets = ensemble.loo_sets();
    if (sets.empty()) throw std::invalid_argument("test_scores: no leave-one-out predictor available");
    const bool par = exec == Execution::parallel;
    const Eigen::MatrixXd pred = par ? kernels::parallel::prediction_matrix(ensemble.models, rows.x)
                                     : kernels::serial::prediction_matrix(ensemble.models, rows.x);
    auto q = par ? kernels::parallel::loo_quantile(pred, sets, ensemble.phi, 1.0 - alpha)
                 : kernels::serial::loo_quantile(pred, sets, ensemble.phi, 1.0 - alpha);
    for (std::size_t r = 0; r < q.size(); ++r) q[r] = std::abs(rows.y(static_cast<Eigen::Index>(r)) - q[r]);
    return q;
}

std::string serialize_ensemble(const Ensemble& e) {
    nlohmann::json j;
    j["format"] = kEnsembleFormat;
    j["version"] = kEnsembleVersion;
    j["phi"] = {{"kind", e.phi.name()}, {"trim_fraction", e.phi.trim_fraction}};
    j["layout"] = {{"train_rows", e.layout.train_rows},
                   {"lags", e.layout.lags},
                   {"neighbor_size", e.layout.neighbor_size},
                   {"sensors", e.layout.sensors}};
    j["plan"] = {{"seed", e.plan.seed()}, {"available", e.plan.available()}, {"in_bag", e.plan.in_bag()}};
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : e.models) models.push_back(m.to_json());
    j["models"] = std::move(models);
    std::vector<std::size_t> ts, ks;
    std::vector<double> ss;
    for (const auto& s : e.training_scores) {
        ts.push_back(s.t);
        ks.push_back(s.k);
        ss.push_back(s.score);
    }
    j["training_scores"] = {{"t", ts}, {"k", ks}, {"score", ss}};
    j["empty_loo_times"] = e.empty_loo_times;
    return j.dump() + "\n";
}

Ensemble deserialize_ensemble(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw std::invalid_argument(std::string("ensemble artifact is not valid JSON: ") + ex.what());
    }
    if (!j.is_object() || j.value("format", std::string{}) != kEnsembleFormat) {
        throw std::invalid_argument("not an ensemble artifact");
    }
    const int version = j.at("version").get<int>();
    if (version != kEnsembleVersion) {
        throw std::invalid_argument("unsupported ensemble artifact version " + std::to_string(version) + " (expected " +
                                    std::to_string(kEnsembleVersion) + ")");
    }
    Ensemble e;
    e.phi = Aggregator::parse(j.at("phi").at("kind").get<std::string>(), j.at("phi").at("trim_fraction").get<double>());
    const auto& lay = j.at("layout");
    e.layout = {lay.at("train_rows").get<std::size_t>(), lay.at("lags").get<std::size_t>(),
                lay.at("neighbor_size").get<std::size_t>(), lay.at("sensors").get<std::size_t>()};
    const auto& plan = j.at("plan");
    e.plan = BootstrapPlan(plan.at("available").get<std::vector<std::size_t>>(),
                           plan.at("in_bag").get<std::vector<std::vector<std::size_t>>>(),
                           plan.at("seed").get<std::uint64_t>());
    for (const auto& m : j.at("models")) e.models.push_back(FittedModel::from_json(m));
    if (e.models.size() != e.plan.B()) throw std::invalid_argument("ensemble artifact: model count differs from B");
    const auto& sc = j.at("training_scores");
    auto ts = sc.at("t").get<std::vector<std::size_t>>();
    auto ks = sc.at("k").get<std::vector<std::size_t>>();
    auto ss = sc.at("score").get<std::vector<double>>();
    if (ts.size() != ks.size() || ts.size() != ss.size()) throw std::invalid_argument("ensemble artifact: ragged scores");
    for (std::size_t i = 0; i < ts.size(); ++i) e.training_scores.push_back({ts[i], ks[i], ss[i]});
    e.empty_loo_times = j.at("empty_loo_times").get<std::vector<std::size_t>>();
    return e;
}

void save_ensemble(const std::string& path, const Ensemble& ensemble) {
    csv::write_file(path, serialize_ensemble(ensemble));
}

Ensemble load_ensemble(const std::string& path) {
    return deserialize_ensemble(csv::read_file(path));
}

}  // namespace ecad
