#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "thermotwin/al/loop.hpp"
#include "thermotwin/harness/experiment.hpp"
#include "thermotwin/nn/surrogate.hpp"
#include "thermotwin/sim/simulator.hpp"

namespace thermotwin {

struct DataSettings {
    std::size_t pool = 80;
    std::size_t eval = 5;
    std::size_t n_steps = 1050;
    double span = 5460.0;  // s
    GeneratorConfig generator;

    TimeGrid grid() const { return TimeGrid::from_span(0.0, span, n_steps); }
};

struct ExperimentSettings {
    Perturbation perturbation;
    NoiseSpec noise;
    SmoothingSpec smoothing;
};

struct EnsembleSettings {
    std::size_t n_models = 120;
    std::size_t subset_size = 4;
    StlsqConfig stlsq = StlsqConfig::ghx_table1();
};

/// Fixed-training-set models behind the RMSE and coverage tables.
struct TableSettings {
    std::size_t train_size = 20;
    TrainConfig fnn = TrainConfig::fnn_desk();
    TrainConfig gru = TrainConfig::gru_desk();
    std::size_t band_samples = 500;
};

/// Everything one pipeline run depends on. All randomness derives from `seed`.
struct RunConfig {
    std::uint64_t seed = 0;
    DataSettings data;
    ExperimentSettings experiment;
    EnsembleSettings ensemble;
    TableSettings table;
    std::vector<Family> families{Family::mvg, Family::sindyc, Family::fnn, Family::gru};
    std::map<Family, AlConfig> al;

    /// AL settings for `f`: the configured block, else AlConfig::defaults.
    AlConfig al_config(Family f) const;
    void validate() const;
};

/// Unknown keys, wrong types and invalid values raise Error{config}.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Complete serialisation (every field, defaults included), stable key order.
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace thermotwin
