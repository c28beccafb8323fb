#pragma once

#include <string>

namespace acceptance {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome ac1_planted_recovery();
Outcome ac2_mahalanobis();
Outcome ac3_mvg_calibration();
Outcome ac4_gradients();
Outcome ac5_simulator_physics();
Outcome ac6_surrogate_ordering();
Outcome ac7_al_efficiency();
Outcome ac8_sindyc_null_result();
Outcome ac9_determinism_replay();
Outcome ac10_smoke();

/// Paths baked in at configure time.
const char* cli_path();
const char* smoke_config_path();
const char* scratch_dir();

}  // namespace acceptance
