// ecad: run the detection pipeline stage by stage or end to end.
#include "ecad/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> train_rows;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON config file (defaults apply when omitted)");
    cmd->add_option("--seed", o.seed, "master seed, overrides the config");
    cmd->add_option("--out", o.out, "output directory, overrides the config");
}

ecad::PipelineConfig resolve(const Options& o) {
    ecad::PipelineConfig cfg = ecad::load_pipeline_config(o.config);
    if (o.seed) cfg.apply_seed(*o.seed);
    if (!o.out.empty()) cfg.paths.out_dir = o.out;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble conformal anomaly detection for sensor panels"};
    app.require_subcommand(1);
    Options opts;

    auto* generate = app.add_subcommand("generate", "simulate a panel, sensor layout and ground truth");
    auto* impute = app.add_subcommand("impute", "complete the training block of the panel");
    auto* train = app.add_subcommand("train", "fit the bootstrap ensemble and training scores");
    auto* detect = app.add_subcommand("detect", "score the test stream and compute p-values");
    auto* evaluate = app.add_subcommand("evaluate", "compare detections with ground truth");
    auto* run_all = app.add_subcommand("run-all", "generate, impute, train, detect, evaluate");
    auto* retrain = app.add_subcommand("retrain", "rerun training on a new prefix of the completed panel");
    for (auto* cmd : {generate, impute, train, detect, evaluate, run_all, retrain}) add_common(cmd, opts);
    retrain->add_option("--train-rows", opts.train_rows, "number of leading rows to train on");

    CLI11_PARSE(app, argc, argv);

    try {
        const ecad::PipelineConfig cfg = resolve(opts);
        std::string summary;
        if (*generate) summary = ecad::run_generate(cfg);
        else if (*impute) summary = ecad::run_impute(cfg);
        else if (*train) summary = ecad::run_train(cfg);
        else if (*detect) summary = ecad::run_detect(cfg);
        else if (*evaluate) summary = ecad::run_evaluate(cfg);
        else if (*run_all) summary = ecad::run_all(cfg);
        else summary = ecad::run_retrain(cfg, opts.train_rows);
        std::cout << summary << '\n';
        return 0;
    } catch (const ecad::PipelineError& e) {
        const char* category = e.category() == ecad::ErrorCategory::config             ? "config"
                               : e.category() == ecad::ErrorCategory::missing_artifact ? "missing_artifact"
                                                                                         : "stage";
        std::cerr << "error[" << category << "] " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error[internal] " << e.what() << '\n';
        return 1;
    }
}
