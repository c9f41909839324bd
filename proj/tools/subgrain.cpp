#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subgrain/config.hpp"
#include "subgrain/pipeline.hpp"

namespace {

using subgrain::config::Overrides;
using subgrain::config::PipelineConfig;
using subgrain::pipeline::StageReport;

struct CommonArgs {
    std::string config_path;
    Overrides overrides;
    std::vector<double> k_flags;
    std::string workdir_flag;
    std::int64_t window_half_ms = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline config JSON")->required();
    cmd->add_option("--window-half-ms", args.window_half_ms, "override window half-width");
    cmd->add_option("--k", args.k_flags, "override selective k list (repeatable)");
    cmd->add_option("--seed", args.seed, "override seed")->each([&](const std::string&) {
        args.seed_set = true;
    });
    cmd->add_option("--workdir", args.workdir_flag, "override work directory");
}

PipelineConfig load(const CommonArgs& args) {
    PipelineConfig cfg = subgrain::config::load_config(args.config_path);
    Overrides o;
    if (args.window_half_ms > 0) o.window_half_ms = args.window_half_ms;
    if (!args.k_flags.empty()) o.k_list = args.k_flags;
    if (args.seed_set) o.seed = args.seed;
    if (!args.workdir_flag.empty()) o.workdir = args.workdir_flag;
    subgrain::config::apply_overrides(cfg, o);
    return cfg;
}

int finish(const StageReport& rep) {
    std::cout << rep.stage << ": " << rep.segments << " segments, " << rep.backend_calls
              << " backend calls";
    if (!rep.failures.empty()) std::cout << ", " << rep.failures.size() << " FAILED";
    std::cout << "\n";
    if (!rep.extra.empty()) std::cout << rep.extra.dump(2) << "\n";
    for (const auto& f : rep.failures) std::cerr << "failure: " << f << "\n";
    return rep.ok() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"visually-grounded subtitle translation pipeline"};
    app.require_subcommand(1);

    CommonArgs prepare_args, context_args, translate_args, evaluate_args, report_args, drift_args;
    std::string method, variant;
    std::string results_override, gain_condition = "sel30";
    double drift_rate = 0.0;
    std::int64_t drift_offset = 0, drift_jitter = 0;
    std::string drift_out;

    auto* prepare = app.add_subcommand("prepare", "parse subtitles, pair corpora, load frames");
    add_common(prepare, prepare_args);

    auto* contextualize = app.add_subcommand("contextualize", "build visual contexts per segment");
    add_common(contextualize, context_args);
    contextualize->add_option("--method", method, "attr_vc or inter_vs")->required();

    auto* translate = app.add_subcommand("translate", "produce translations for a variant");
    add_common(translate, translate_args);
    translate->add_option("--variant", variant, "baseline, attr_vc or inter_vs")->required();

    auto* evaluate = app.add_subcommand("evaluate", "compute metrics and selective conditions");
    add_common(evaluate, evaluate_args);

    auto* report = app.add_subcommand("report", "render tables, summaries and the gain matrix");
    add_common(report, report_args);
    report->add_option("--results", results_override, "read results from this file instead");
    report->add_option("--gain-condition", gain_condition, "condition for the gain matrix");

    auto* drift = app.add_subcommand("drift", "apply a drift model and re-emit the frame timeline");
    add_common(drift, drift_args);
    drift->add_option("--rate", drift_rate, "seconds of drift per hour");
    drift->add_option("--offset", drift_offset, "constant offset in ms");
    drift->add_option("--jitter", drift_jitter, "uniform jitter half-width in ms");
    drift->add_option("--out", drift_out, "output frames JSONL (default <workdir>/frames_drifted.jsonl)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) {
            PipelineConfig cfg = load(prepare_args);
            auto clients = subgrain::pipeline::make_backends(cfg);
            return finish(subgrain::pipeline::cmd_prepare(cfg, clients));
        }
        if (contextualize->parsed()) {
            PipelineConfig cfg = load(context_args);
            auto clients = subgrain::pipeline::make_backends(cfg);
            return finish(subgrain::pipeline::cmd_contextualize(cfg, method, clients));
        }
        if (translate->parsed()) {
            PipelineConfig cfg = load(translate_args);
            auto clients = subgrain::pipeline::make_backends(cfg);
            return finish(subgrain::pipeline::cmd_translate(cfg, variant, clients));
        }
        if (evaluate->parsed()) {
            return finish(subgrain::pipeline::cmd_evaluate(load(evaluate_args)));
        }
        if (report->parsed()) {
            PipelineConfig cfg = load(report_args);
            std::optional<std::filesystem::path> results;
            if (!results_override.empty()) results = results_override;
            return finish(subgrain::pipeline::cmd_report(cfg, results, gain_condition));
        }
        if (drift->parsed()) {
            PipelineConfig cfg = load(drift_args);
            subgrain::timeline::DriftModel model{drift_offset, drift_rate, drift_jitter};
            const std::filesystem::path out = drift_out.empty()
                ? cfg.paths.workdir / "frames_drifted.jsonl"
                : std::filesystem::path(drift_out);
            return finish(subgrain::pipeline::cmd_drift(cfg, model, out));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
