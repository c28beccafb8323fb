#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "thermotwin/harness/config.hpp"
#include "thermotwin/harness/experiment.hpp"
#include "thermotwin/harness/report.hpp"

namespace thermotwin {

/// File layout of one run directory. Paths in the run manifest are relative
/// to `root`.
struct RunLayout {
    std::filesystem::path root;

    std::filesystem::path manifest() const { return root / "run.json"; }
    std::filesystem::path pool_manifest() const { return root / "data" / "pool" / "manifest.json"; }
    std::filesystem::path eval_manifest() const { return root / "data" / "eval" / "manifest.json"; }
    std::filesystem::path experiment_dir() const { return root / "data" / "experiment"; }
    std::filesystem::path models() const { return root / "models"; }
    std::filesystem::path histories() const { return root / "histories"; }
    std::filesystem::path report() const { return root / "report"; }
};

struct ArtifactRecord {
    std::string path;
    std::uint64_t hash = 0;  // fnv1a64 of the file bytes
};

struct RunManifest {
    std::string run_id;
    std::uint64_t seed = 0;
    std::string config_json;
    std::map<std::string, std::string> streams;  // purpose -> stream label
    std::map<std::string, ArtifactRecord> artifacts;
};

/// "run-" + hex fnv1a64 of the canonical config.
std::string run_id_for(const RunConfig& cfg);
RunManifest read_run_manifest(const std::filesystem::path& path);
void write_run_manifest(const std::filesystem::path& path, const RunManifest& m);
/// Config stored in a run manifest.
RunConfig manifest_config(const RunManifest& m);
std::string hex64(std::uint64_t v);

/// Everything the generate stage writes, loaded back.
struct RunData {
    Dataset pool;
    Dataset eval;
    Trajectory experiment_raw;
    Trajectory experiment;  // denoised
};

RunData load_run_data(const RunLayout& layout);

/// Stage entry points. Each reads the run manifest (generate creates it),
/// writes its artifacts and records their hashes.
void stage_generate(const RunConfig& cfg, const RunLayout& layout);
/// Fixed-set SINDyC model and the reference model fitted on the experiment.
void stage_fit_sindyc(const RunLayout& layout);
void stage_build_ensemble(const RunLayout& layout);
void stage_train(const RunLayout& layout, NetKind kind);
void stage_al(const RunLayout& layout, Family family);
Report stage_report(const RunLayout& layout);

/// Every stage in order for the families in the config.
Report run_comparison(const RunConfig& cfg, const std::filesystem::path& root);

}  // namespace thermotwin
