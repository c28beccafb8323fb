#include "thermotwin/sim/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thermotwin/core/errors.hpp"
#include "thermotwin/sim/sobol.hpp"

namespace thermotwin {

double Setpoint::at(double t) const {
    double v = initial;
    for (std::size_t i = 0; i < switch_times.size(); ++i) {
        if (t >= switch_times[i]) v = levels[i];
        else break;
    }
    return v;
}

ControlVector ActuatorSchedule::at(double t) const {
    return {pv006.at(t), m_pump_out.at(t), t_pump_in.at(t), t_heater_out.at(t)};
}

std::vector<ControlVector> ActuatorSchedule::sample(const TimeGrid& grid) const {
    std::vector<ControlVector> out(grid.n_steps);
    for (std::size_t i = 0; i < grid.n_steps; ++i) out[i] = at(grid.time(i));
    return out;
}

void ActuatorSchedule::validate() const {
    std::vector<double> all;
    for (const Setpoint* s : {&pv006, &m_pump_out, &t_pump_in, &t_heater_out}) {
        require(s->switch_times.size() == s->levels.size(), ErrorKind::parameter,
                "schedule: one level per switch time required");
        for (std::size_t i = 1; i < s->switch_times.size(); ++i) {
            require(s->switch_times[i] > s->switch_times[i - 1], ErrorKind::parameter,
                    "schedule: switch times must increase");
        }
        all.insert(all.end(), s->switch_times.begin(), s->switch_times.end());
    }
    std::sort(all.begin(), all.end());
    for (std::size_t i = 1; i < all.size(); ++i) {
        require(all[i] - all[i - 1] >= stagger_gap - 1e-9, ErrorKind::parameter,
                "schedule: switches closer than the stagger gap");
    }
}

ActuatorSchedule constant_schedule(const ControlVector& u, double stagger_gap) {
    ActuatorSchedule s;
    s.pv006.initial = u.pv006;
    s.m_pump_out.initial = u.m_pump_out;
    s.t_pump_in.initial = u.t_pump_in;
    s.t_heater_out.initial = u.t_heater_out;
    s.stagger_gap = stagger_gap;
    return s;
}

void ActuatorBounds::validate() const {
    for (const Range* r : {&pv006, &m_pump_out, &t_pump_in, &t_heater_out}) {
        require(std::isfinite(r->lo) && std::isfinite(r->hi) && r->lo <= r->hi, ErrorKind::parameter,
                "actuator bounds must be finite with lo <= hi");
    }
    require(pv006.lo >= 0.0 && pv006.hi <= 1.0, ErrorKind::parameter, "pv006 bounds must lie in [0, 1]");
    require(m_pump_out.lo >= 0.0, ErrorKind::parameter, "pump flow bounds must be non-negative");
    require(t_pump_in.lo > 0.0 && t_heater_out.lo > 0.0, ErrorKind::parameter, "temperature bounds must be > 0 K");
    require(max_switches >= 1 && max_switches <= 4, ErrorKind::parameter, "max_switches must be in [1, 4]");
}

namespace {

Setpoint decode(const std::vector<double>& x, std::size_t off, std::size_t max_sw, const Range& r, const TimeGrid& g) {
    Setpoint s;
    auto level = [&](double u) { return r.lo + (r.hi - r.lo) * u; };
    s.initial = level(x[off + 1 + max_sw]);
    const auto count = std::min(static_cast<std::size_t>(x[off] * static_cast<double>(max_sw + 1)), max_sw);
    // Switches land strictly inside the horizon, snapped to grid points.
    const double lo = g.t0 + 0.05 * g.span();
    const double hi = g.t0 + 0.95 * g.span();
    std::vector<double> times;
    for (std::size_t k = 0; k < count; ++k) {
        const double t = lo + (hi - lo) * x[off + 1 + k];
        const double idx = std::round((t - g.t0) / g.dt);
        times.push_back(g.time(static_cast<std::size_t>(idx)));
    }
    std::vector<std::size_t> order(count);
    for (std::size_t k = 0; k < count; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    for (std::size_t k = 0; k < count; ++k) {
        s.switch_times.push_back(times[order[k]]);
        s.levels.push_back(level(x[off + 2 + max_sw + order[k]]));
    }
    return s;
}

bool feasible(const ActuatorSchedule& s) {
    try {
        s.validate();
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace

std::vector<ActuatorSchedule> generate_schedules(std::size_t n, const ActuatorBounds& bounds, const TimeGrid& grid,
                                                 double stagger_gap, RngStream& stream) {
    require(n >= 1, ErrorKind::parameter, "generate_schedules: n must be >= 1");
    require(std::isfinite(stagger_gap) && stagger_gap >= 0.0, ErrorKind::parameter, "stagger gap must be >= 0");
    bounds.validate();
    grid.validate();

    const std::size_t per = 2 * bounds.max_switches + 2;
    const Sobol sobol(4 * per);
    std::uint64_t index = 1 + stream.uniform_index(4096);
    const std::uint64_t budget = index + 1000 * n + 10000;

    std::vector<ActuatorSchedule> out;
    out.reserve(n);
    while (out.size() < n) {
        require(index < budget, ErrorKind::combinatorics,
                "generate_schedules: could not find " + std::to_string(n) + " distinct feasible schedules");
        const auto x = sobol.point(index++);
        ActuatorSchedule s;
        s.stagger_gap = stagger_gap;
        s.pv006 = decode(x, 0, bounds.max_switches, bounds.pv006, grid);
        s.m_pump_out = decode(x, per, bounds.max_switches, bounds.m_pump_out, grid);
        s.t_pump_in = decode(x, 2 * per, bounds.max_switches, bounds.t_pump_in, grid);
        s.t_heater_out = decode(x, 3 * per, bounds.max_switches, bounds.t_heater_out, grid);
        if (!feasible(s)) continue;
        if (std::find(out.begin(), out.end(), s) != out.end()) continue;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace thermotwin
