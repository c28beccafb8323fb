#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "thermotwin/core/csv_io.hpp"
#include "thermotwin/core/errors.hpp"
#include "thermotwin/core/signal.hpp"
#include "thermotwin/harness/pipeline.hpp"

using namespace thermotwin;
namespace fs = std::filesystem;

namespace {

const char* tiny_config = R"({
  "seed": 3,
  "data": {"pool": 12, "eval": 2, "n_steps": 300, "span": 1560.0},
  "ensemble": {"n_models": 12, "subset_size": 3},
  "table": {"train_size": 6, "band_samples": 100,
            "fnn": {"widths": [8, 8], "epochs": 5},
            "gru": {"widths": [8], "lookback": 10, "epochs": 2, "window_stride": 10}},
  "families": ["mvg", "sindyc", "fnn", "gru"],
  "al": {
    "mvg": {"init_size": 4, "batch": 2, "max_rounds": 2, "target": "experiment"},
    "sindyc": {"init_size": 2, "batch": 2, "max_rounds": 2},
    "fnn": {"init_size": 2, "batch": 2, "max_rounds": 2, "train": {"widths": [8, 8], "epochs": 5}},
    "gru": {"init_size": 2, "batch": 2, "max_rounds": 1,
            "train": {"widths": [8], "lookback": 10, "epochs": 2, "window_stride": 10}}
  }
})";

fs::path tmp(const std::string& name) {
    const fs::path p = fs::path(THERMOTWIN_TEST_TMP) / "harness" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ActuatorSchedule test_schedule(const TimeGrid& grid) {
    ActuatorBounds b;
    RngStream s(5, "schedules");
    return generate_schedules(1, b, grid, 50.0, s).front();
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::io;
}

std::uint64_t hash_file(const fs::path& p) { return fnv1a64(read_text_file(p)); }

// Every file the determinism contract covers: histories and report tables.
std::map<std::string, std::uint64_t> deterministic_hashes(const fs::path& root) {
    std::map<std::string, std::uint64_t> out;
    for (const auto& sub : {"histories", "report"}) {
        for (const auto& e : fs::directory_iterator(root / sub)) {
            const std::string name = e.path().filename().string();
            if (name.find("runtime") != std::string::npos) continue;
            out[std::string(sub) + "/" + name] = hash_file(e.path());
        }
    }
    return out;
}

int run_cli(const std::string& args, const fs::path& err) {
    const std::string cmd = std::string(THERMOTWIN_CLI) + " " + args + " >/dev/null 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("pseudo-experiment without perturbation or noise matches the nominal run") {
    const TimeGrid grid = TimeGrid::from_span(0.0, 1560.0, 300);
    const GeneratorConfig g;
    const auto sched = test_schedule(grid);
    RngStream s(1, "noise");
    const auto pe = make_pseudo_experiment(g, Perturbation::none(), NoiseSpec::none(), sched, grid, s, 7);
    const Trajectory nominal = simulate(sched, g.initial_bed(), g.bed, g.ghx, grid, g.plant, 7);
    CHECK(pe.raw.ghx == nominal.ghx);
    CHECK(pe.raw.tes == nominal.tes);
    CHECK(pe.raw.controls == nominal.controls);
    CHECK(pe.raw.provenance == Provenance::pseudo_experimental);
    CHECK(pe.denoised.grid == pe.raw.grid);
    CHECK(pe.denoised.id == pe.raw.id);
}

TEST_CASE("pseudo-experiment noise has the requested std") {
    const TimeGrid grid = TimeGrid::from_span(0.0, 5460.0, 2000);
    const GeneratorConfig g;
    const auto sched = test_schedule(grid);
    NoiseSpec noise{0.01, 800.0, 0.02, 0.5};
    RngStream s(2, "noise");
    const auto pe = make_pseudo_experiment(g, Perturbation::none(), noise, sched, grid, s);
    const Trajectory nominal = simulate(sched, g.initial_bed(), g.bed, g.ghx, grid, g.plant);
    for (Channel c : {Channel::m_ghx, Channel::q_ghx, Channel::m_tes_in, Channel::t_top, Channel::t_bot}) {
        CAPTURE(channel_name(c));
        const double r = rmse(pe.raw.channel(c), nominal.channel(c));
        CHECK(std::abs(r / noise.sigma(c) - 1.0) < 0.1);
        // smoothing removes most of the noise on the slow temperatures; q has
        // sharp onsets after valve steps, so there it only has to help
        if (c == Channel::t_top || c == Channel::t_bot)
            CHECK(rmse(pe.denoised.channel(c), nominal.channel(c)) < 0.6 * r);
        if (c == Channel::q_ghx) CHECK(rmse(pe.denoised.channel(c), nominal.channel(c)) < r);
    }
    CHECK(pe.raw.channel(Channel::pv006) == nominal.channel(Channel::pv006));
}

TEST_CASE("default perturbation shifts the plant") {
    const TimeGrid grid = TimeGrid::from_span(0.0, 5460.0, 1050);
    const GeneratorConfig g;
    const auto sched = test_schedule(grid);
    RngStream s(3, "noise");
    const auto pe = make_pseudo_experiment(g, Perturbation{}, NoiseSpec::none(), sched, grid, s);
    const Trajectory nominal = simulate(sched, g.initial_bed(), g.bed, g.ghx, grid, g.plant);
    CHECK(rmse(pe.raw.channel(Channel::q_ghx), nominal.channel(Channel::q_ghx)) > 100.0);
    CHECK(rmse(pe.raw.channel(Channel::m_ghx), nominal.channel(Channel::m_ghx)) >= 0.0);

    Perturbation bad;
    bad.effectiveness_scale = 2.0;
    CHECK(kind_of([&] { bad.apply(g); }) == ErrorKind::parameter);
    bad = Perturbation{};
    bad.h_c_scale = -1.0;
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::parameter);
    CHECK(kind_of([&] {
              RngStream r(1, "n");
              make_pseudo_experiment(g, Perturbation{}, NoiseSpec{}, sched, grid, r, 0, SmoothingSpec{20, 3});
          }) == ErrorKind::parameter);
}

TEST_CASE("run config parsing is strict and round-trips") {
    const RunConfig c = run_config_from_json(tiny_config);
    CHECK(c.data.pool == 12);
    CHECK(c.al_config(Family::gru).train.lookback == 10);
    CHECK(c.al_config(Family::mvg).target == AlTarget::experiment);
    const std::string canon = run_config_to_json(c);
    CHECK(run_config_to_json(run_config_from_json(canon)) == canon);
    CHECK(run_id_for(c) == run_id_for(run_config_from_json(canon)));

    CHECK(kind_of([] { run_config_from_json("{\"seed\": 1, \"colour\": 2}"); }) == ErrorKind::config);
    CHECK(kind_of([] { run_config_from_json("{\"data\": {\"pool\": \"many\"}}"); }) == ErrorKind::config);
    CHECK(kind_of([] { run_config_from_json("{\"data\": {\"pool\": 10"); }) == ErrorKind::config);
    CHECK(kind_of([] { run_config_from_json("{\"families\": [\"svm\"]}"); }) == ErrorKind::config);
    CHECK(kind_of([] { run_config_from_json("{\"al\": {\"fnn\": {\"strategy\": \"mahalanobis\"}}}"); }) ==
          ErrorKind::config);
    CHECK(kind_of([] { run_config_from_json("{\"table\": {\"train_size\": 500}}"); }) == ErrorKind::config);
    CHECK(kind_of([] { load_run_config("/nonexistent/cfg.json"); }) == ErrorKind::io);
}

TEST_CASE("pipeline is deterministic, replayable and pure in evaluation") {
    const RunConfig cfg = run_config_from_json(tiny_config);
    const fs::path a = tmp("run_a");
    const fs::path b = tmp("run_b");
    const Report ra = run_comparison(cfg, a);
    run_comparison(cfg, b);

    const auto ha = deterministic_hashes(a);
    CHECK(ha.size() >= 4 * 3 + 5);
    CHECK(ha == deterministic_hashes(b));

    // replay from the seeds and config stored in the first run's manifest
    const fs::path c = tmp("run_replay");
    run_comparison(manifest_config(read_run_manifest(a / "run.json")), c);
    CHECK(ha == deterministic_hashes(c));

    // report regenerated from stored artifacts: identical tables, no new models
    const auto models_before = hash_file(a / "models" / "gru.json");
    const Report again = stage_report(RunLayout{a});
    CHECK(deterministic_hashes(a) == ha);
    CHECK(hash_file(a / "models" / "gru.json") == models_before);
    CHECK(again.rmse.size() == ra.rmse.size());

    // provenance: every artifact named in a table exists and is in the manifest
    const RunManifest m = read_run_manifest(a / "run.json");
    CHECK(m.run_id == run_id_for(cfg));
    for (const auto& r : ra.rmse) {
        CHECK(fs::exists(a / r.artifact));
        CHECK(m.artifacts.count(r.artifact) == 1);
    }
    for (const auto& cv : ra.curves) CHECK(m.artifacts.count(cv.artifact_al) == 1);
    CHECK(ra.rmse.size() == 4 * 3);
    CHECK(ra.coverage.size() == 3);
    CHECK(ra.curves.size() == 4);

    // a modified artifact is refused
    {
        std::ofstream f(a / "models" / "sindyc.json", std::ios::app);
        f << " ";
    }
    CHECK(kind_of([&] { stage_report(RunLayout{a}); }) == ErrorKind::manifest);
}

TEST_CASE("training-set optimism in diagnostic evaluation") {
    const RunConfig cfg = run_config_from_json(tiny_config);
    const fs::path dir = tmp("diag");
    const RunLayout layout{dir};
    stage_generate(cfg, layout);
    stage_fit_sindyc(layout);
    stage_build_ensemble(layout);
    stage_train(layout, NetKind::fnn);
    const RunData d = load_run_data(layout);

    ModelSet models;
    models.sindyc = load_sindyc(layout.models() / "sindyc.json");
    models.mvg = load_mvg(layout.models() / "mvg.json");
    models.fnn = load_neural(layout.models() / "fnn.json");
    EvalOptions opt;
    opt.band_samples = 100;
    for (std::size_t i = 0; i < cfg.table.train_size; ++i) opt.train.push_back(&d.pool.trajectories[i]);
    const Report r1 = evaluate_all(models, d.eval.all(), &d.experiment, opt);
    const Report r2 = evaluate_all(models, d.eval.all(), &d.experiment, opt);

    // purity: same inputs, same numbers
    REQUIRE(r1.rmse.size() == r2.rmse.size());
    for (std::size_t i = 0; i < r1.rmse.size(); ++i) {
        CHECK(r1.rmse[i].rmse_m == r2.rmse[i].rmse_m);
        CHECK(r1.rmse[i].rmse_q == r2.rmse[i].rmse_q);
    }

    int optimistic = 0, families = 0;
    for (const std::string f : {"mvg", "sindyc", "fnn"}) {
        double train = 0.0, held = 0.0;
        int nt = 0, nh = 0;
        for (const auto& r : r1.rmse) {
            if (r.family != f) continue;
            const double s = r.rmse_m + r.rmse_q / 1e4;
            if (r.set == "train") train += s, ++nt;
            if (r.set == "eval") held += s, ++nh;
        }
        ++families;
        if (train / nt <= held / nh) ++optimistic;
    }
    CHECK(2 * optimistic >= families);
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = tmp("cli");
    const fs::path err = dir / "stderr.txt";
    const fs::path cfg = dir / "tiny.json";
    write_text_file(cfg, tiny_config);

    CHECK(run_cli("generate --bogus", err) == 2);
    CHECK(nlohmann::json::parse(read_text_file(err)).at("error").at("kind") == "usage");
    CHECK(run_cli("", err) == 2);
    CHECK(run_cli("train --runs " + dir.string() + " --family svm", err) == 2);

    write_text_file(dir / "broken.json", "{\"seed\": ");
    CHECK(run_cli("generate --config " + (dir / "broken.json").string() + " --runs " + (dir / "r").string(), err) == 3);
    CHECK(nlohmann::json::parse(read_text_file(err)).at("error").at("kind") == "config");

    CHECK(run_cli("generate --config " + (dir / "missing.json").string() + " --runs " + (dir / "r").string(), err) == 4);
    CHECK(run_cli("fit-sindyc --runs " + (dir / "empty").string(), err) == 4);

    const fs::path run = dir / "run";
    CHECK(run_cli("generate --config " + cfg.string() + " --runs " + run.string(), err) == 0);
    CHECK(run_cli("fit-sindyc --runs " + run.string(), err) == 0);
    CHECK(run_cli("al-run --runs " + run.string() + " --family sindyc", err) == 0);
    CHECK(run_cli("report --runs " + run.string(), err) == 0);
    CHECK(fs::exists(run / "report" / "report.md"));
    CHECK(fs::exists(run / "logs" / "thermotwin.log"));

    // the MvG branch needs the ensemble artifact
    CHECK(run_cli("al-run --runs " + run.string() + " --family mvg", err) == 5);
    write_text_file(run / "run.json", "{\"run_id\": 3}");
    CHECK(run_cli("report --runs " + run.string(), err) == 5);
}
