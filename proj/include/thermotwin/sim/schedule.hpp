#pragma once

#include <array>
#include <vector>

#include "thermotwin/core/rng.hpp"
#include "thermotwin/core/types.hpp"

namespace thermotwin {

/// Piecewise-constant setpoint: `initial` until the first switch.
struct Setpoint {
    double initial = 0.0;
    std::vector<double> switch_times;   // strictly increasing, s
    std::vector<double> levels;         // value after each switch

    double at(double t) const;
    bool operator==(const Setpoint&) const = default;
};

struct ActuatorSchedule {
    Setpoint pv006;
    Setpoint m_pump_out;
    Setpoint t_pump_in;
    Setpoint t_heater_out;
    double stagger_gap = 50.0;

    ControlVector at(double t) const;
    std::vector<ControlVector> sample(const TimeGrid& grid) const;
    /// Switch times increasing per actuator and all switches at least
    /// stagger_gap apart.
    void validate() const;

    bool operator==(const ActuatorSchedule&) const = default;
};

ActuatorSchedule constant_schedule(const ControlVector& u, double stagger_gap = 50.0);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct ActuatorBounds {
    Range pv006{0.0, 1.0};
    Range m_pump_out{0.3, 1.2};
    Range t_pump_in{400.0, 440.0};
    Range t_heater_out{410.0, 470.0};
    std::size_t max_switches = 3;   // per actuator

    void validate() const;
};

/// Sobol-parameterised schedules. Each actuator uses 2 * max_switches + 2
/// coordinates: switch count, switch times, and one level per segment.
/// Candidates that break the stagger rule or repeat an earlier schedule are
/// skipped and the next Sobol point is drawn.
std::vector<ActuatorSchedule> generate_schedules(std::size_t n, const ActuatorBounds& bounds, const TimeGrid& grid,
                                                 double stagger_gap, RngStream& stream);

}  // namespace thermotwin
