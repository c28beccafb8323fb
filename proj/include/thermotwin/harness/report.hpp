#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermotwin/al/loop.hpp"
#include "thermotwin/mvg/mvg.hpp"
#include "thermotwin/nn/surrogate.hpp"
#include "thermotwin/sindy/fit.hpp"

namespace thermotwin {

/// Trained models plus the artifact each one was loaded from.
struct ModelSet {
    std::optional<SindycArtifact> sindyc;
    std::optional<MvgArtifact> mvg;
    std::optional<NeuralModel> fnn;
    std::optional<NeuralModel> gru;
    std::map<Family, std::string> artifact;  // run-relative path per family
};

struct EvalOptions {
    std::size_t band_samples = 500;
    std::uint64_t band_seed = 0;
    RolloutConfig rollout;
    /// Also score each model on these trajectories (set "train").
    std::vector<const Trajectory*> train;
};

struct RmseRow {
    std::string family;
    std::string set;  // eval | experiment | train
    int trajectory = 0;
    double rmse_m = 0.0;  // NaN when the prediction failed
    double rmse_q = 0.0;
    std::string artifact;
};

struct CoverageRow {
    std::string set;
    int trajectory = 0;
    double coverage_m = 0.0;
    double coverage_q = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_diverged = 0;
    std::string artifact;
};

/// One AL-vs-random comparison as stored by the AL stage.
struct AlCurves {
    Family family = Family::mvg;
    AlTarget target = AlTarget::eval;
    Eigen::Vector2d scales = Eigen::Vector2d::Ones();
    std::vector<AlRecord> al;
    std::vector<AlRecord> random;
    std::string stop_al;
    std::string stop_random;
    std::string artifact_al;
    std::string artifact_random;

    double score(const AlRecord& r) const;
    /// Selected count at which the AL arm first matches the random arm's
    /// final score, if it does.
    std::optional<std::size_t> al_to_reach_random_final() const;
};

struct RuntimeRow {
    std::string family;
    std::string arm;
    double total_wall_s = 0.0;
};

struct Report {
    std::string run_id;
    std::uint64_t seed = 0;
    std::string config_json;
    std::vector<RmseRow> rmse;
    std::vector<CoverageRow> coverage;
    std::vector<AlCurves> curves;
    std::vector<RuntimeRow> runtime;
};

/// Pure evaluation: per-channel RMSE of every model on each eval trajectory
/// and on the experiment, plus MvG band coverage. Nothing is trained or
/// written. A failed prediction gives NaN entries and a warning.
Report evaluate_all(const ModelSet& models, const std::vector<const Trajectory*>& eval,
                    const Trajectory* experiment, const EvalOptions& opt = {});

/// Writes report.md plus rmse.csv, coverage.csv, curves.csv and al_summary.csv
/// into `dir`. Wall times go to runtime.csv alone so the other files depend
/// only on the seeds.
void write_report(const std::filesystem::path& dir, const Report& report);

}  // namespace thermotwin
