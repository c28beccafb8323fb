#include "thermotwin/harness/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "thermotwin/core/csv_io.hpp"
#include "thermotwin/core/errors.hpp"
#include "thermotwin/sim/schedule.hpp"

namespace thermotwin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t file_hash(const fs::path& p) { return fnv1a64(read_text_file(p)); }

void record(const RunLayout& layout, RunManifest& m, const fs::path& file) {
    const std::string rel = fs::relative(file, layout.root).generic_string();
    m.artifacts[rel] = {rel, file_hash(file)};
}

RunManifest open_manifest(const RunLayout& layout) {
    require(fs::exists(layout.manifest()), ErrorKind::io,
            "run manifest '" + layout.manifest().string() + "' not found (run generate first)");
    return read_run_manifest(layout.manifest());
}

/// Fails unless `rel` is a recorded artifact whose bytes still match.
fs::path checked_artifact(const RunLayout& layout, const RunManifest& m, const std::string& rel) {
    const auto it = m.artifacts.find(rel);
    require(it != m.artifacts.end(), ErrorKind::manifest, "artifact '" + rel + "' is not in the run manifest");
    const fs::path p = layout.root / rel;
    require(fs::exists(p), ErrorKind::manifest, "artifact '" + rel + "' is listed but missing");
    require(file_hash(p) == it->second.hash, ErrorKind::manifest, "artifact '" + rel + "' changed since it was recorded");
    return p;
}

std::vector<const Trajectory*> training_set(const RunConfig& cfg, const RunData& d) {
    std::vector<const Trajectory*> out;
    for (std::size_t i = 0; i < cfg.table.train_size; ++i) out.push_back(&d.pool.trajectories[i]);
    return out;
}

std::string family_name(Family f) { return std::string(to_string(f)); }

const char* experiment_meta = "experiment.json";

double wall_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::string run_id_for(const RunConfig& cfg) { return "run-" + hex64(fnv1a64(run_config_to_json(cfg))); }

RunManifest read_run_manifest(const fs::path& path) {
    if (!fs::exists(path)) fail(ErrorKind::io, "run manifest '" + path.string() + "' not found");
    try {
        const json j = json::parse(read_text_file(path));
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config_json = j.at("config").dump(2) + "\n";
        m.streams = j.at("streams").get<std::map<std::string, std::string>>();
        for (const auto& [k, v] : j.at("artifacts").items())
            m.artifacts[k] = {k, std::stoull(v.at("fnv1a64").get<std::string>(), nullptr, 16)};
        return m;
    } catch (const json::exception& e) {
        fail(ErrorKind::manifest, path.string() + ": " + e.what());
    } catch (const std::invalid_argument&) {
        fail(ErrorKind::manifest, path.string() + ": bad hash");
    }
}

void write_run_manifest(const fs::path& path, const RunManifest& m) {
    json j;
    j["run_id"] = m.run_id;
    j["seed"] = m.seed;
    j["config"] = json::parse(m.config_json);
    j["streams"] = m.streams;
    json arts = json::object();
    for (const auto& [k, a] : m.artifacts) arts[k] = {{"fnv1a64", hex64(a.hash)}};
    j["artifacts"] = arts;
    write_text_file(path, j.dump(2) + "\n");
}

RunConfig manifest_config(const RunManifest& m) {
    RunConfig c = run_config_from_json(m.config_json);
    require(run_id_for(c) == m.run_id, ErrorKind::manifest, "run manifest: run id does not match its config");
    return c;
}

RunData load_run_data(const RunLayout& layout) {
    RunData d;
    d.pool = load_dataset(layout.pool_manifest());
    d.eval = load_dataset(layout.eval_manifest());
    const fs::path meta_path = layout.experiment_dir() / experiment_meta;
    if (!fs::exists(meta_path)) fail(ErrorKind::io, "experiment metadata '" + meta_path.string() + "' not found");
    int id = 0;
    std::string raw, denoised;
    try {
        const json j = json::parse(read_text_file(meta_path));
        id = j.at("id").get<int>();
        raw = j.at("raw").get<std::string>();
        denoised = j.at("denoised").get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorKind::manifest, meta_path.string() + ": " + e.what());
    }
    for (const auto& f : {raw, denoised})
        if (!fs::exists(layout.experiment_dir() / f))
            fail(ErrorKind::io, "experiment file '" + (layout.experiment_dir() / f).string() + "' not found");
    d.experiment_raw = read_trajectory_csv(layout.experiment_dir() / raw, id, Provenance::pseudo_experimental);
    d.experiment = read_trajectory_csv(layout.experiment_dir() / denoised, id, Provenance::pseudo_experimental);
    return d;
}

void stage_generate(const RunConfig& cfg, const RunLayout& layout) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const TimeGrid grid = cfg.data.grid();
    const auto& gen = cfg.data.generator;
    const std::size_t total = cfg.data.pool + cfg.data.eval + 1;

    RngStream sched(cfg.seed, "schedules");
    const auto schedules = generate_schedules(total, gen.bounds, grid, gen.stagger_gap, sched);
    const BedState bed0 = gen.initial_bed();
    Dataset pool, eval;
    pool.grid = eval.grid = grid;
    for (std::size_t i = 0; i < cfg.data.pool + cfg.data.eval; ++i) {
        Dataset& dst = i < cfg.data.pool ? pool : eval;
        dst.trajectories.push_back(simulate(schedules[i], bed0, gen.bed, gen.ghx, grid, gen.plant, static_cast<int>(i)));
    }

    for (const fs::path& stale : {layout.root / "data", layout.models(), layout.histories(), layout.report()})
        fs::remove_all(stale);
    fs::create_directories(layout.experiment_dir());
    write_dataset(layout.pool_manifest().parent_path(), pool, cfg.seed);
    write_dataset(layout.eval_manifest().parent_path(), eval, cfg.seed, eval.ids());

    RngStream noise(cfg.seed, "experiment/noise");
    const int exp_id = static_cast<int>(cfg.data.pool + cfg.data.eval);
    const PseudoExperiment pe = make_pseudo_experiment(gen, cfg.experiment.perturbation, cfg.experiment.noise,
                                                       schedules.back(), grid, noise, exp_id, cfg.experiment.smoothing);
    write_trajectory_csv(layout.experiment_dir() / "raw.csv", pe.raw);
    write_trajectory_csv(layout.experiment_dir() / "denoised.csv", pe.denoised);
    const json meta = {{"id", exp_id}, {"raw", "raw.csv"}, {"denoised", "denoised.csv"}};
    write_text_file(layout.experiment_dir() / experiment_meta, meta.dump(2) + "\n");

    RunManifest m;
    m.run_id = run_id_for(cfg);
    m.seed = cfg.seed;
    m.config_json = run_config_to_json(cfg);
    m.streams = {{"schedules", "schedules"},      {"experiment_noise", "experiment/noise"},
                 {"ensemble", "ensemble"},        {"train_fnn", "table/fnn"},
                 {"train_gru", "table/gru"},      {"band", "band/<set>/<trajectory>"}};
    for (Family f : cfg.families) m.streams["al_" + family_name(f)] = "al/" + family_name(f);
    for (const auto& e : fs::recursive_directory_iterator(layout.root / "data"))
        if (e.is_regular_file()) record(layout, m, e.path());
    write_text_file(layout.root / "config.json", m.config_json);
    record(layout, m, layout.root / "config.json");
    write_run_manifest(layout.manifest(), m);
    spdlog::info("generate: {} pool + {} eval trajectories and the pseudo-experiment in {:.1f} s", pool.size(),
                 eval.size(), wall_since(t0));
}

void stage_fit_sindyc(const RunLayout& layout) {
    RunManifest m = open_manifest(layout);
    const RunConfig cfg = manifest_config(m);
    const RunData d = load_run_data(layout);
    fs::create_directories(layout.models());

    SindycArtifact fixed;
    fixed.config = cfg.ensemble.stlsq;
    const auto train = training_set(cfg, d);
    for (const auto* t : train) fixed.subset_ids.push_back(t->id);
    fixed.model = fit_sindyc(train, fixed.config, fixed.options);
    save_sindyc(layout.models() / "sindyc.json", fixed);
    record(layout, m, layout.models() / "sindyc.json");

    SindycArtifact ref;
    ref.config = cfg.ensemble.stlsq;
    ref.subset_ids = {d.experiment.id};
    ref.model = fit_sindyc(std::vector<const Trajectory*>{&d.experiment}, ref.config, ref.options);
    save_sindyc(layout.models() / "reference.json", ref);
    record(layout, m, layout.models() / "reference.json");
    write_run_manifest(layout.manifest(), m);
    spdlog::info("fit-sindyc: fixed-set model on {} trajectories plus the experiment reference", train.size());
}

void stage_build_ensemble(const RunLayout& layout) {
    RunManifest m = open_manifest(layout);
    const RunConfig cfg = manifest_config(m);
    const RunData d = load_run_data(layout);
    fs::create_directories(layout.models());
    RngStream s(cfg.seed, "ensemble");
    MvgArtifact art;
    art.seed = cfg.seed;
    art.config = cfg.ensemble.stlsq;
    art.ensemble = build_ensemble(d.pool.all(), cfg.ensemble.n_models, cfg.ensemble.subset_size, art.config, s);
    art.model = fit_mvg(art.ensemble, cfg.al_config(Family::mvg).mvg_delta);
    save_mvg(layout.models() / "mvg.json", art);
    record(layout, m, layout.models() / "mvg.json");
    write_run_manifest(layout.manifest(), m);
    spdlog::info("build-ensemble: {} models ({} failed fits)", art.ensemble.size(), art.ensemble.failures.size());
}

void stage_train(const RunLayout& layout, NetKind kind) {
    RunManifest m = open_manifest(layout);
    const RunConfig cfg = manifest_config(m);
    const RunData d = load_run_data(layout);
    fs::create_directories(layout.models());
    const auto t0 = std::chrono::steady_clock::now();
    const std::string name(to_string(kind));
    RngStream s(cfg.seed, "table/" + name);
    const NeuralModel model =
        train_surrogate(kind, training_set(cfg, d), kind == NetKind::fnn ? cfg.table.fnn : cfg.table.gru, s);
    const fs::path out = layout.models() / (name + ".json");
    save_neural(out, model);
    record(layout, m, out);
    write_run_manifest(layout.manifest(), m);
    spdlog::info("train {}: {} epochs, final loss {:.4g}, {:.1f} s", name, model.epoch_loss.size(),
                 model.epoch_loss.empty() ? 0.0 : model.epoch_loss.back(), wall_since(t0));
}

void stage_al(const RunLayout& layout, Family family) {
    RunManifest m = open_manifest(layout);
    const RunConfig cfg = manifest_config(m);
    const RunData d = load_run_data(layout);
    const AlConfig ac = cfg.al_config(family);
    const std::string name = family_name(family);

    AlData data;
    data.pool = d.pool.all();
    data.eval = d.eval.all();
    data.experiment = &d.experiment;
    std::optional<MvgArtifact> mvg;
    if (family == Family::mvg) {
        mvg = load_mvg(checked_artifact(layout, m, "models/mvg.json"));
        data.ensemble = &mvg->ensemble;
        data.reference = load_sindyc(checked_artifact(layout, m, "models/reference.json")).model.flatten();
    }
    const auto t0 = std::chrono::steady_clock::now();
    const ArmPair pair = run_pair(ac, data, RngStream(cfg.seed, "al/" + name));

    fs::create_directories(layout.histories());
    const fs::path h = layout.histories();
    write_history_csv(h / (name + "_al.csv"), pair.al, false);
    write_history_csv(h / (name + "_random.csv"), pair.random, false);
    const json meta = {{"family", name},
                       {"target", std::string(to_string(pair.al.target))},
                       {"scales", {pair.al.scales(0), pair.al.scales(1)}},
                       {"stop_al", pair.al.stop_reason},
                       {"stop_random", pair.random.stop_reason},
                       {"selected_al", pair.al.selected},
                       {"selected_random", pair.random.selected}};
    write_text_file(h / (name + "_meta.json"), meta.dump(2) + "\n");
    std::ostringstream rt;
    rt << "arm,round,wall_s,cum_wall_s\n";
    for (const auto* arm : {&pair.al, &pair.random})
        for (const auto& r : arm->records)
            rt << (arm == &pair.al ? "al" : "random") << ',' << r.round << ',' << format_double(r.wall_s) << ','
               << format_double(r.cum_wall_s) << '\n';
    write_text_file(h / (name + "_runtime.csv"), rt.str());
    for (const char* suffix : {"_al.csv", "_random.csv", "_meta.json", "_runtime.csv"}) record(layout, m, h / (name + suffix));
    write_run_manifest(layout.manifest(), m);
    spdlog::info("al-run {}: AL final score {:.4g} ({} selected, {}), random {:.4g} ({} selected), {:.1f} s", name,
                 pair.al.final_score(), pair.al.records.back().n_selected, pair.al.stop_reason,
                 pair.random.final_score(), pair.random.records.back().n_selected, wall_since(t0));
}

Report stage_report(const RunLayout& layout) {
    RunManifest m = open_manifest(layout);
    const RunConfig cfg = manifest_config(m);
    const RunData d = load_run_data(layout);

    ModelSet models;
    const auto has = [&](const std::string& rel) { return m.artifacts.count(rel) > 0; };
    if (has("models/sindyc.json")) {
        models.sindyc = load_sindyc(checked_artifact(layout, m, "models/sindyc.json"));
        models.artifact[Family::sindyc] = "models/sindyc.json";
    }
    if (has("models/mvg.json")) {
        models.mvg = load_mvg(checked_artifact(layout, m, "models/mvg.json"));
        models.artifact[Family::mvg] = "models/mvg.json";
    }
    for (NetKind k : {NetKind::fnn, NetKind::gru}) {
        const std::string rel = "models/" + std::string(to_string(k)) + ".json";
        if (!has(rel)) continue;
        NeuralModel nm = load_neural(checked_artifact(layout, m, rel));
        (k == NetKind::fnn ? models.fnn : models.gru) = std::move(nm);
        models.artifact[k == NetKind::fnn ? Family::fnn : Family::gru] = rel;
    }

    EvalOptions opt;
    opt.band_samples = cfg.table.band_samples;
    opt.band_seed = cfg.seed;
    Report rep = evaluate_all(models, d.eval.all(), &d.experiment, opt);
    rep.run_id = m.run_id;
    rep.seed = m.seed;
    rep.config_json = m.config_json;

    for (Family f : cfg.families) {
        const std::string name = family_name(f);
        const std::string al_rel = "histories/" + name + "_al.csv";
        if (!has(al_rel)) continue;
        const std::string rnd_rel = "histories/" + name + "_random.csv";
        const std::string meta_rel = "histories/" + name + "_meta.json";
        AlCurves c;
        c.family = f;
        c.al = read_history_csv(checked_artifact(layout, m, al_rel));
        c.random = read_history_csv(checked_artifact(layout, m, rnd_rel));
        c.artifact_al = al_rel;
        c.artifact_random = rnd_rel;
        try {
            const json meta = json::parse(read_text_file(checked_artifact(layout, m, meta_rel)));
            c.target = target_from_string(meta.at("target").get<std::string>());
            c.scales = {meta.at("scales").at(0).get<double>(), meta.at("scales").at(1).get<double>()};
            c.stop_al = meta.at("stop_al").get<std::string>();
            c.stop_random = meta.at("stop_random").get<std::string>();
        } catch (const json::exception& e) {
            fail(ErrorKind::manifest, meta_rel + ": " + e.what());
        }
        rep.curves.push_back(std::move(c));

        const std::string rt_rel = "histories/" + name + "_runtime.csv";
        if (has(rt_rel) && fs::exists(layout.root / rt_rel)) {
            std::istringstream in(read_text_file(layout.root / rt_rel));
            std::string line;
            std::getline(in, line);
            double wall_al = 0.0, wall_rnd = 0.0;
            while (std::getline(in, line)) {
                std::istringstream ls(line);
                std::string arm, round, wall;
                std::getline(ls, arm, ',');
                std::getline(ls, round, ',');
                std::getline(ls, wall, ',');
                (arm == "al" ? wall_al : wall_rnd) += std::stod(wall);
            }
            rep.runtime.push_back({name, "al", wall_al});
            rep.runtime.push_back({name, "random", wall_rnd});
        }
    }

    write_report(layout.report(), rep);
    for (const char* f : {"report.md", "rmse.csv", "coverage.csv", "curves.csv", "al_summary.csv", "runtime.csv"})
        record(layout, m, layout.report() / f);
    write_run_manifest(layout.manifest(), m);
    spdlog::info("report: {} RMSE rows, {} coverage rows, {} AL comparisons", rep.rmse.size(), rep.coverage.size(),
                 rep.curves.size());
    return rep;
}

Report run_comparison(const RunConfig& cfg, const fs::path& root) {
    const RunLayout layout{root};
    fs::create_directories(root);
    stage_generate(cfg, layout);
    const auto wants = [&](Family f) { return std::find(cfg.families.begin(), cfg.families.end(), f) != cfg.families.end(); };
    stage_fit_sindyc(layout);
    if (wants(Family::mvg)) stage_build_ensemble(layout);
    if (wants(Family::fnn)) stage_train(layout, NetKind::fnn);
    if (wants(Family::gru)) stage_train(layout, NetKind::gru);
    for (Family f : cfg.families) stage_al(layout, f);
    return stage_report(layout);
}

}  // namespace thermotwin
