#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "thermotwin/core/types.hpp"

namespace thermotwin {

inline constexpr const char* trajectory_csv_header =
    "t,pv006,m_pump_out,t_pump_in,t_heater_out,m_ghx,q_ghx,m_tes_in,t_tes_out,t_top,t_mid,t_bot";

/// Shortest round-trip decimal form ("%.17g").
std::string format_double(double v);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Reads a trajectory CSV. The grid is recovered from the `t` column, which
/// must be uniform to within 1e-9 relative.
Trajectory read_trajectory_csv(const std::filesystem::path& path, int id, Provenance provenance);

struct ManifestEntry {
    int id = 0;
    std::string path;  // relative to the manifest directory
    Provenance provenance = Provenance::simulated;
};

struct DatasetManifest {
    TimeGrid grid;
    std::vector<ManifestEntry> entries;
    std::optional<std::uint64_t> seed;
    std::vector<int> held_out;  // optional fixed evaluation list
};

/// Writes one CSV per trajectory plus `manifest.json` into `dir`.
DatasetManifest write_dataset(const std::filesystem::path& dir, const Dataset& data,
                              std::optional<std::uint64_t> seed = std::nullopt,
                              const std::vector<int>& held_out = {});

DatasetManifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const std::filesystem::path& manifest_path, const DatasetManifest& m);

/// Loads every trajectory listed in a manifest and validates the result.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Whole-file helpers.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace thermotwin
