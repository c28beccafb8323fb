// Command-line front end for the run pipeline. Every subcommand works on one
// run directory; generate (or compare) creates it from a JSON config.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "thermotwin/core/errors.hpp"
#include "thermotwin/harness/pipeline.hpp"

namespace fs = std::filesystem;
using namespace thermotwin;

namespace {

enum Exit : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_usage = 2,
    exit_config = 3,
    exit_missing_file = 4,
    exit_manifest = 5,
    exit_data = 6,
    exit_numeric = 7,
};

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::config:
        case ErrorKind::parameter: return exit_config;
        case ErrorKind::io: return exit_missing_file;
        case ErrorKind::manifest: return exit_manifest;
        case ErrorKind::data:
        case ErrorKind::insufficient_data:
        case ErrorKind::shape:
        case ErrorKind::span_mismatch:
        case ErrorKind::combinatorics: return exit_data;
        default: return exit_numeric;
    }
}

int report_error(const std::string& kind, const std::string& message, int code) {
    const nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    std::cerr << j.dump() << std::endl;
    return code;
}

void setup_logging(const std::string& level, const fs::path& runs) {
    std::vector<spdlog::sink_ptr> sinks{std::make_shared<spdlog::sinks::stderr_color_sink_mt>()};
    if (!runs.empty()) {
        fs::create_directories(runs / "logs");
        sinks.push_back(std::make_shared<spdlog::sinks::basic_file_sink_mt>((runs / "logs" / "thermotwin.log").string()));
    }
    auto logger = std::make_shared<spdlog::logger>("thermotwin", sinks.begin(), sinks.end());
    logger->set_level(spdlog::level::from_str(level));
    spdlog::set_default_logger(logger);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermocline / GHX surrogate and active-learning toolkit"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    fs::path config, runs, replay;
    std::string family;

    auto* gen = app.add_subcommand("generate", "Simulate the pool, eval set and pseudo-experiment");
    gen->add_option("--config", config, "run config JSON")->required();
    gen->add_option("--runs", runs, "run directory")->required();

    auto* fit = app.add_subcommand("fit-sindyc", "Fit the fixed-set and reference SINDyC models");
    fit->add_option("--runs", runs, "run directory")->required();

    auto* ens = app.add_subcommand("build-ensemble", "Fit the SINDyC ensemble and its Gaussian");
    ens->add_option("--runs", runs, "run directory")->required();

    auto* train = app.add_subcommand("train", "Train a neural surrogate on the fixed set");
    train->add_option("--runs", runs, "run directory")->required();
    train->add_option("--family", family, "fnn or gru")->required()->check(CLI::IsMember({"fnn", "gru"}));

    auto* al = app.add_subcommand("al-run", "Paired AL and random runs for one family");
    al->add_option("--runs", runs, "run directory")->required();
    al->add_option("--family", family, "mvg, sindyc, fnn or gru")
        ->required()
        ->check(CLI::IsMember({"mvg", "sindyc", "fnn", "gru"}));

    auto* cmp = app.add_subcommand("compare", "Every stage for every configured family");
    auto* cmp_cfg = cmp->add_option("--config", config, "run config JSON");
    auto* cmp_replay = cmp->add_option("--replay", replay, "run.json of an earlier run to repeat");
    cmp_cfg->excludes(cmp_replay);
    cmp->add_option("--runs", runs, "run directory")->required();

    auto* rep = app.add_subcommand("report", "Evaluate stored models and write the report bundle");
    rep->add_option("--runs", runs, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", e.what(), exit_usage);
    }
    if (cmp->parsed() && config.empty() && replay.empty())
        return report_error("usage", "compare needs --config or --replay", exit_usage);

    try {
        setup_logging(log_level, runs);
        const RunLayout layout{runs};
        if (gen->parsed()) {
            stage_generate(load_run_config(config), layout);
        } else if (fit->parsed()) {
            stage_fit_sindyc(layout);
        } else if (ens->parsed()) {
            stage_build_ensemble(layout);
        } else if (train->parsed()) {
            stage_train(layout, net_kind_from_string(family));
        } else if (al->parsed()) {
            stage_al(layout, family_from_string(family));
        } else if (cmp->parsed()) {
            const RunConfig cfg =
                replay.empty() ? load_run_config(config) : manifest_config(read_run_manifest(replay));
            run_comparison(cfg, runs);
        } else if (rep->parsed()) {
            stage_report(layout);
        }
    } catch (const Error& e) {
        return report_error(std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), exit_internal);
    }
    return exit_ok;
}
