#include "ecad/pipeline.hpp"

#include "csv.hpp"
#include "ecad/ensemble.hpp"
#include "ecad/evaluation.hpp"
#include "ecad/rng.hpp"

#include <filesystem>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace ecad {

namespace {

enum SeedStream : std::uint64_t { kMissing = 101, kBootstrap = 102, kImputer = 103, kBackend = 104 };

std::string out_path(const PipelineConfig& cfg, const char* name) {
    return (fs::path(cfg.paths.out_dir) / name).string();
}

std::string input_path(const PipelineConfig& cfg, const std::string& override_path, const char* name) {
    return override_path.empty() ? out_path(cfg, name) : override_path;
}

void require_artifact(const std::string& stage, const std::string& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw PipelineError(ErrorCategory::missing_artifact, stage,
                            "missing artifact '" + path + "' (run '" + producer + "' first)");
    }
}

void ensure_out_dir(const PipelineConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.paths.out_dir, ec);
    if (ec) {
        throw PipelineError(ErrorCategory::config, "config",
                            "cannot create output directory '" + cfg.paths.out_dir + "': " + ec.message());
    }
}

// Runs a stage body, tagging plain exceptions with the stage name.
template <class Body>
std::string stage(const std::string& name, Body&& body) {
    try {
        return body();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(ErrorCategory::stage, name, e.what());
    }
}

Panel load_complete_with_sensors(const PipelineConfig& cfg, const std::string& stage_name) {
    const auto panel_path = out_path(cfg, artifacts::completed);
    require_artifact(stage_name, panel_path, "impute");
    const auto sensors_path = input_path(cfg, cfg.paths.sensors, artifacts::sensors);
    require_artifact(stage_name, sensors_path, "generate");
    Panel panel = load_panel(panel_path, cfg.paths.missing_token);
    panel.set_sensors(load_sensors(sensors_path));
    return panel;
}

std::string train_on(const PipelineConfig& cfg, std::size_t train_rows, const std::string& stage_name) {
    return stage(stage_name, [&] {
        ensure_out_dir(cfg);
        const Panel panel = load_complete_with_sensors(cfg, stage_name);
        const auto& loc = cfg.detector.locality;
        if (train_rows > panel.rows()) throw std::invalid_argument("train_rows exceeds the completed panel length");
        const auto nbrs = neighbor_sets(panel.sensors(), loc.neighbor_size);
        const auto rows = stack_features(build_features(panel, nbrs, loc.m, loc.m, train_rows));
        Ensemble ens = train_ensemble(rows, cfg.backend, cfg.ensemble.B, cfg.ensemble.phi, derive_seed(cfg.seed, kBootstrap));
        ens.layout = {train_rows, loc.m, loc.neighbor_size, panel.cols()};
        save_ensemble(out_path(cfg, artifacts::ensemble), ens);
        std::ostringstream s;
        s << "stage=" << stage_name << " status=ok rows=" << rows.size() << " B=" << cfg.ensemble.B
          << " training_scores=" << ens.training_scores.size() << " empty_loo_times=" << ens.empty_loo_times.size();
        return s.str();
    });
}

}  // namespace

int PipelineError::exit_code() const {
    switch (category_) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::missing_artifact: return 3;
        case ErrorCategory::stage: return 4;
    }
    return 1;
}

void PipelineConfig::validate() const {
    scenario.validate();
    imputer.validate();
    backend.validate();
    ensemble.phi.validate();
    detector.validate();
    if (ensemble.B < 1) throw std::invalid_argument("ensemble B must be at least 1");
    if (detector.locality.m < 1) throw std::invalid_argument("feature lag depth m must be at least 1");
    if (paths.out_dir.empty()) throw std::invalid_argument("paths.out_dir must not be empty");
}

void PipelineConfig::apply_seed(std::uint64_t s) {
    seed = s;
    scenario.seed = s;
    imputer.seed = derive_seed(s, kImputer);
    backend.seed = derive_seed(s, kBackend);
}

nlohmann::json to_json(const PipelineConfig& c) {
    nlohmann::json paths = {{"out_dir", c.paths.out_dir},
                            {"panel", c.paths.panel},
                            {"sensors", c.paths.sensors},
                            {"truth", c.paths.truth},
                            {"missing_token", c.paths.missing_token}};
    if (c.paths.train_rows) paths["train_rows"] = *c.paths.train_rows;
    return {{"seed", c.seed},
            {"scenario", to_json(c.scenario)},
            {"imputer",
             {{"max_iters", c.imputer.max_iters},
              {"tol", c.imputer.tol},
              {"init", "column_mean"},
              {"inner_backend", to_json(c.imputer.inner_backend)}}},
            {"backend", to_json(c.backend)},
            {"ensemble", {{"B", c.ensemble.B}, {"phi", c.ensemble.phi.name()}, {"trim_fraction", c.ensemble.phi.trim_fraction}}},
            {"detector",
             {{"alpha", c.detector.alpha},
              {"locality",
               {{"enabled", c.detector.locality.enabled},
                {"m", c.detector.locality.m},
                {"neighbor_size", c.detector.locality.neighbor_size},
                {"variant", to_string(c.detector.locality.variant)}}},
              {"exclude_flagged_from_window", c.detector.exclude_flagged_from_window}}},
            {"paths", paths}};
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw std::invalid_argument("unknown key '" + key + "' in " + where);
    }
}

}  // namespace

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    reject_unknown(j, {"seed", "scenario", "imputer", "backend", "ensemble", "detector", "paths"}, "config");
    std::uint64_t seed = j.value("seed", std::uint64_t{0});
    c.apply_seed(seed);
    if (j.contains("scenario")) {
        c.scenario = scenario_config_from_json(j.at("scenario"), c.scenario);
        c.scenario.seed = seed;
    }
    if (j.contains("imputer")) {
        const auto& im = j.at("imputer");
        reject_unknown(im, {"max_iters", "tol", "init", "inner_backend"}, "imputer");
        if (im.contains("max_iters")) c.imputer.max_iters = im.at("max_iters").get<int>();
        if (im.contains("tol")) c.imputer.tol = im.at("tol").get<double>();
        if (im.contains("init") && im.at("init").get<std::string>() != "column_mean") {
            throw std::invalid_argument("imputer.init must be column_mean");
        }
        if (im.contains("inner_backend")) c.imputer.inner_backend = backend_spec_from_json(im.at("inner_backend"), c.imputer.inner_backend);
    }
    if (j.contains("backend")) c.backend = backend_spec_from_json(j.at("backend"), c.backend);
    if (j.contains("ensemble")) {
        const auto& e = j.at("ensemble");
        reject_unknown(e, {"B", "phi", "trim_fraction"}, "ensemble");
        if (e.contains("B")) c.ensemble.B = e.at("B").get<std::size_t>();
        if (e.contains("phi")) c.ensemble.phi = Aggregator::parse(e.at("phi").get<std::string>(), e.value("trim_fraction", 0.1));
    }
    if (j.contains("detector")) {
        const auto& d = j.at("detector");
        reject_unknown(d, {"alpha", "locality", "exclude_flagged_from_window"}, "detector");
        if (d.contains("alpha")) c.detector.alpha = d.at("alpha").get<double>();
        if (d.contains("exclude_flagged_from_window")) {
            c.detector.exclude_flagged_from_window = d.at("exclude_flagged_from_window").get<bool>();
        }
        if (d.contains("locality")) {
            const auto& l = d.at("locality");
            reject_unknown(l, {"enabled", "m", "neighbor_size", "variant"}, "detector.locality");
            if (l.contains("enabled")) c.detector.locality.enabled = l.at("enabled").get<bool>();
            if (l.contains("m")) c.detector.locality.m = l.at("m").get<std::size_t>();
            if (l.contains("neighbor_size")) c.detector.locality.neighbor_size = l.at("neighbor_size").get<std::size_t>();
            if (l.contains("variant")) c.detector.locality.variant = parse_locality_variant(l.at("variant").get<std::string>());
        }
    }
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        reject_unknown(p, {"out_dir", "panel", "sensors", "truth", "missing_token", "train_rows"}, "paths");
        c.paths.out_dir = p.value("out_dir", c.paths.out_dir);
        c.paths.panel = p.value("panel", c.paths.panel);
        c.paths.sensors = p.value("sensors", c.paths.sensors);
        c.paths.truth = p.value("truth", c.paths.truth);
        c.paths.missing_token = p.value("missing_token", c.paths.missing_token);
        if (p.contains("train_rows")) c.paths.train_rows = p.at("train_rows").get<std::size_t>();
    }
    c.validate();
    return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    if (path.empty()) return PipelineConfig{};
    try {
        return pipeline_config_from_json(nlohmann::json::parse(csv::read_file(path)));
    } catch (const std::exception& e) {
        throw PipelineError(ErrorCategory::config, "config", e.what());
    }
}

std::string run_generate(const PipelineConfig& cfg) {
    return stage("generate", [&] {
        ensure_out_dir(cfg);
        const Scenario sc = generate(cfg.scenario);
        const Panel masked = inject_missing(sc.panel, cfg.scenario.missing_fraction, cfg.scenario.T_train,
                                            derive_seed(cfg.seed, kMissing));
        write_panel(out_path(cfg, artifacts::panel), masked, cfg.paths.missing_token);
        write_sensors(out_path(cfg, artifacts::sensors), sc.panel.sensors());
        write_truth(out_path(cfg, artifacts::truth), sc.truth);
        csv::write_file(out_path(cfg, artifacts::scenario), to_json(cfg.scenario).dump(2) + "\n");

        std::size_t labeled = 0, anomalies = 0;
        for (std::size_t t = cfg.scenario.T_train; t < sc.truth.rows(); ++t) {
            for (std::size_t k = 0; k < sc.truth.cols(); ++k) {
                if (!sc.truth.labeled(t, k)) continue;
                ++labeled;
                anomalies += sc.truth.is_anomaly(t, k) ? 1 : 0;
            }
        }
        std::ostringstream s;
        s << "stage=generate status=ok rows=" << masked.rows() << " sensors=" << masked.cols()
          << " observed=" << masked.observed_count() << " test_anomaly_fraction="
          << (labeled ? static_cast<double>(anomalies) / static_cast<double>(labeled) : 0.0);
        return s.str();
    });
}

std::string run_impute(const PipelineConfig& cfg) {
    return stage("impute", [&] {
        ensure_out_dir(cfg);
        const auto panel_path = input_path(cfg, cfg.paths.panel, artifacts::panel);
        require_artifact("impute", panel_path, "generate");
        const Panel panel = load_panel(panel_path, cfg.paths.missing_token);
        const std::size_t train_rows = cfg.train_rows();
        if (train_rows > panel.rows()) throw std::invalid_argument("train_rows exceeds the panel length");
        const Panel test = panel.slice_rows(train_rows, panel.rows());
        if (!test.complete()) throw std::invalid_argument("test rows must be fully observed");

        auto result = impute(panel.slice_rows(0, train_rows), cfg.imputer);
        write_panel(out_path(cfg, artifacts::completed), result.panel.concat_rows(test), cfg.paths.missing_token);
        csv::write_file(out_path(cfg, artifacts::impute_report), result.report.to_json().dump(2) + "\n");
        std::size_t missing = 0;
        for (auto m : result.report.missing_per_column) missing += m;
        std::ostringstream s;
        s << "stage=impute status=ok imputed=" << missing << " iterations=" << result.report.iterations
          << " final_max_delta=" << result.report.final_max_delta;
        return s.str();
    });
}

std::string run_train(const PipelineConfig& cfg) {
    return train_on(cfg, cfg.train_rows(), "train");
}

std::string run_retrain(const PipelineConfig& cfg, std::optional<std::size_t> train_rows) {
    return train_on(cfg, train_rows.value_or(cfg.train_rows()), "retrain");
}

std::string run_detect(const PipelineConfig& cfg) {
    return stage("detect", [&] {
        ensure_out_dir(cfg);
        const auto ens_path = out_path(cfg, artifacts::ensemble);
        require_artifact("detect", ens_path, "train");
        const Ensemble ens = load_ensemble(ens_path);
        const Panel panel = load_complete_with_sensors(cfg, "detect");
        if (panel.cols() != ens.layout.sensors) throw std::invalid_argument("panel width differs from the trained ensemble");
        const auto feature_nbrs = neighbor_sets(panel.sensors(), ens.layout.neighbor_size);
        const auto stream = stack_features(
            build_features(panel, feature_nbrs, ens.layout.lags, std::max(ens.layout.train_rows, ens.layout.lags), panel.rows()));
        const auto local_nbrs = neighbor_sets(panel.sensors(), cfg.detector.locality.neighbor_size);
        const auto detections = detect_stream(ens, stream, cfg.detector, local_nbrs);
        write_detections(out_path(cfg, artifacts::detections), detections);
        std::size_t flagged = 0;
        for (const auto& d : detections) flagged += d.flagged ? 1 : 0;
        std::ostringstream s;
        s << "stage=detect status=ok detections=" << detections.size() << " flagged=" << flagged;
        return s.str();
    });
}

std::string run_evaluate(const PipelineConfig& cfg) {
    return stage("evaluate", [&] {
        ensure_out_dir(cfg);
        const auto det_path = out_path(cfg, artifacts::detections);
        require_artifact("evaluate", det_path, "detect");
        const auto truth_path = input_path(cfg, cfg.paths.truth, artifacts::truth);
        require_artifact("evaluate", truth_path, "generate");
        const auto detections = load_detections(det_path);
        const auto truth = load_truth(truth_path);
        const auto report = evaluate(detections, truth);
        write_report(out_path(cfg, artifacts::report_csv), out_path(cfg, artifacts::report_json), report);
        csv::write_file(out_path(cfg, artifacts::pvalues), format_pvalue_trajectories(detections, truth));
        std::ostringstream s;
        s << "stage=evaluate status=ok sensors=" << report.sensors.size() << " mean_f1=" << report.mean_f1
          << " mean_rguess_f1=" << report.mean_rguess_f1 << " flag_rate=" << report.flag_rate;
        return s.str();
    });
}

std::string run_all(const PipelineConfig& cfg) {
    std::string out;
    for (auto* step : {&run_generate, &run_impute, &run_train, &run_detect, &run_evaluate}) {
        if (!out.empty()) out += '\n';
        out += step(cfg);
    }
    return out;
}

}  // namespace ecad
