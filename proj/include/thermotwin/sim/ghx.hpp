#pragma once

#include "thermotwin/core/types.hpp"

namespace thermotwin {

/// Lumped glycol heat exchanger with a lagged three-way valve.
struct GhxConfig {
    double effectiveness = 0.75;
    double t_glycol_in = 300.0;      // K
    double c_glycol = 3000.0;        // glycol capacity rate, W/K
    double valve_tau = 15.0;         // s
    double heat_tau = 30.0;          // exchanger thermal lag on q_ghx, s; 0 = instantaneous
    double cp_hot = 2300.0;          // hot-side heat capacity, J/(kg K)

    void validate() const;
};

/// Valve opening (1 = all flow through the GHX) plus the observed outputs.
struct GhxLoopState {
    double valve = 0.0;
    GhxState out;
};

/// Steady outputs for a given valve opening.
GhxState ghx_outputs(double valve, double bed_out_temp, const ControlVector& u, const GhxConfig& cfg);

/// Advance the valve lag by `dt` toward u.pv006 (exact exponential relaxation).
/// q_ghx relaxes toward its steady value at the end of the step with time
/// constant heat_tau.
GhxLoopState ghx_step(double bed_out_temp, const ControlVector& u, const GhxLoopState& prev, double dt,
                      const GhxConfig& cfg);

}  // namespace thermotwin
