#pragma once

#include <optional>

#include "thermotwin/core/ode.hpp"
#include "thermotwin/core/types.hpp"
#include "thermotwin/sim/bed.hpp"
#include "thermotwin/sim/ghx.hpp"
#include "thermotwin/sim/schedule.hpp"

namespace thermotwin {

/// Plumbing between the actuators and the bed during discharge.
struct PlantOptions {
    /// Bed (bottom) inlet = t_pump_in + heater_gain * (t_heater_out - t_pump_in).
    double heater_gain = 0.5;
    /// Valve opening at t0; unset means start at pv006(t0).
    std::optional<double> initial_valve = 0.0;
    OdeTolerance tol{1e-8, 1e-8};
    /// TES probe heights as fractions of the bed height from the bottom.
    double probe_top = 0.9;
    double probe_mid = 0.5;
    double probe_bot = 0.1;
};

double bed_inlet_temperature(const ControlVector& u, const PlantOptions& opt);

TesState tes_outputs(const BedState& bed, double mass_flow, const PlantOptions& opt);

struct SimResult {
    Trajectory trajectory;
    BedState final_bed;
    OdeStats stats;
};

/// Closed-loop discharge rollout. The pump drives flow bottom to top, the bed
/// outlet (top node) feeds the GHX, and controls sampled at t_k are held over
/// [t_k, t_{k+1}). Integration failures are re-raised with the trajectory id.
SimResult simulate_full(const ActuatorSchedule& schedule, const BedState& bed0, const BedConfig& cfg,
                        const GhxConfig& gcfg, const TimeGrid& grid, const PlantOptions& opt = {}, int id = 0);

Trajectory simulate(const ActuatorSchedule& schedule, const BedState& bed0, const BedConfig& cfg,
                    const GhxConfig& gcfg, const TimeGrid& grid, const PlantOptions& opt = {}, int id = 0);

/// Everything needed to produce a simulated dataset.
struct GeneratorConfig {
    BedConfig bed;
    GhxConfig ghx;
    PlantOptions plant;
    ActuatorBounds bounds;
    double stagger_gap = 50.0;
    double t_hot = 553.15;
    double t_cold = 423.15;
    double front = 0.45;
    double front_width = 0.2;

    BedState initial_bed() const;
};

/// Generates `n` trajectories with ids first_id.. from Sobol schedules.
Dataset generate_dataset(std::size_t n, std::uint64_t seed, const TimeGrid& grid, const GeneratorConfig& cfg,
                         int first_id = 0);

}  // namespace thermotwin
