#pragma once

#include "thermotwin/core/rng.hpp"
#include "thermotwin/core/types.hpp"
#include "thermotwin/sim/schedule.hpp"
#include "thermotwin/sim/simulator.hpp"

namespace thermotwin {

/// Multiplicative changes to the nominal physics. 1 leaves a parameter alone.
struct Perturbation {
    double h_c_scale = 1.15;
    double porosity_scale = 0.95;
    double effectiveness_scale = 0.90;

    static Perturbation none() { return {1.0, 1.0, 1.0}; }
    GeneratorConfig apply(const GeneratorConfig& base) const;
    void validate() const;
};

/// Per-channel std of the added measurement noise. Controls are commanded
/// values and stay clean.
struct NoiseSpec {
    double m_ghx = 0.005;       // kg/s
    double q_ghx = 500.0;       // W
    double m_tes_in = 0.005;    // kg/s
    double temperature = 0.2;   // K, all TES temperatures

    static NoiseSpec none() { return {0.0, 0.0, 0.0, 0.0}; }
    double sigma(Channel c) const;
    void validate() const;
};

struct SmoothingSpec {
    std::size_t window = 7;
    std::size_t order = 3;
};

struct PseudoExperiment {
    Trajectory raw;
    Trajectory denoised;
    Perturbation perturbation;
    NoiseSpec noise;
    SmoothingSpec smoothing;
};

/// Simulates `schedule` with perturbed physics, adds Gaussian noise from
/// `stream`, and smooths the noisy channels with Savitzky-Golay.
PseudoExperiment make_pseudo_experiment(const GeneratorConfig& base, const Perturbation& perturbation,
                                        const NoiseSpec& noise, const ActuatorSchedule& schedule,
                                        const TimeGrid& grid, RngStream& stream, int id = 0,
                                        const SmoothingSpec& smoothing = {});

}  // namespace thermotwin
