#pragma once

#include <filesystem>
#include <vector>

#include "thermotwin/core/types.hpp"
#include "thermotwin/sindy/model.hpp"
#include "thermotwin/sindy/stlsq.hpp"

namespace thermotwin {

struct SindycOptions {
    StateSet states = StateSet::ghx;
    /// Savitzky-Golay smoothing of state channels before differencing; 0 = off.
    std::size_t smooth_window = 0;
    std::size_t smooth_order = 3;
};

/// Stacks library rows and derivative targets over all trajectories, then fits
/// each state equation with STLSQ.
LinearModel fit_sindyc(const std::vector<const Trajectory*>& subset, const StlsqConfig& cfg,
                       const SindycOptions& opt = {});
LinearModel fit_sindyc(const Dataset& subset, const StlsqConfig& cfg, const SindycOptions& opt = {});

/// Rollout from the first recorded state of `traj` under its own controls.
Eigen::MatrixXd rollout_on(const LinearModel& model, const Trajectory& traj, StateSet states = StateSet::ghx,
                           const RolloutConfig& rcfg = {});

struct SindycArtifact {
    LinearModel model;
    StlsqConfig config;
    SindycOptions options;
    std::vector<int> subset_ids;
};

void save_sindyc(const std::filesystem::path& path, const SindycArtifact& art);
SindycArtifact load_sindyc(const std::filesystem::path& path);

}  // namespace thermotwin
