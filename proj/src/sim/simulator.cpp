#include "thermotwin/sim/simulator.hpp"

#include <string>

#include <spdlog/spdlog.h>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

double bed_inlet_temperature(const ControlVector& u, const PlantOptions& opt) {
    return u.t_pump_in + opt.heater_gain * (u.t_heater_out - u.t_pump_in);
}

TesState tes_outputs(const BedState& bed, double mass_flow, const PlantOptions& opt) {
    TesState s;
    s.m_tes_in = std::abs(mass_flow);
    s.t_tes_out = bed.t_fluid(0);
    s.t_top = probe_temperature(bed, opt.probe_top);
    s.t_mid = probe_temperature(bed, opt.probe_mid);
    s.t_bot = probe_temperature(bed, opt.probe_bot);
    return s;
}

SimResult simulate_full(const ActuatorSchedule& schedule, const BedState& bed0, const BedConfig& cfg,
                        const GhxConfig& gcfg, const TimeGrid& grid, const PlantOptions& opt, int id) {
    cfg.validate();
    gcfg.validate();
    grid.validate();
    schedule.validate();
    bed0.validate(cfg);

    SimResult res;
    Trajectory& tr = res.trajectory;
    tr.grid = grid;
    tr.id = id;
    tr.provenance = Provenance::simulated;
    tr.controls = schedule.sample(grid);
    for (const auto& u : tr.controls) u.validate();
    tr.ghx.resize(grid.n_steps);
    tr.tes.resize(grid.n_steps);

    Dopri5 integrator(opt.tol);
    BedState bed = bed0;
    GhxLoopState ghx;
    ghx.valve = opt.initial_valve.value_or(tr.controls[0].pv006);
    ghx.out = ghx_outputs(ghx.valve, bed.t_fluid(0), tr.controls[0], gcfg);
    tr.ghx[0] = ghx.out;
    tr.tes[0] = tes_outputs(bed, tr.controls[0].m_pump_out, opt);

    for (std::size_t k = 0; k + 1 < grid.n_steps; ++k) {
        const auto& u = tr.controls[k];
        const double t = grid.time(k);
        try {
            bed = step_bed(bed, bed_inlet_temperature(u, opt), -u.m_pump_out, grid.dt, cfg, integrator, t);
        } catch (const Error& e) {
            fail(e.kind(), "trajectory " + std::to_string(id) + ": " + e.what(), e.time().value_or(t));
        }
        ghx = ghx_step(bed.t_fluid(0), u, ghx, grid.dt, gcfg);
        tr.ghx[k + 1] = ghx.out;
        tr.tes[k + 1] = tes_outputs(bed, u.m_pump_out, opt);
    }
    res.final_bed = bed;
    res.stats = integrator.stats();
    return res;
}

Trajectory simulate(const ActuatorSchedule& schedule, const BedState& bed0, const BedConfig& cfg,
                    const GhxConfig& gcfg, const TimeGrid& grid, const PlantOptions& opt, int id) {
    return simulate_full(schedule, bed0, cfg, gcfg, grid, opt, id).trajectory;
}

BedState GeneratorConfig::initial_bed() const { return thermocline_bed(bed, t_hot, t_cold, front, front_width); }

Dataset generate_dataset(std::size_t n, std::uint64_t seed, const TimeGrid& grid, const GeneratorConfig& cfg,
                         int first_id) {
    RngStream stream(seed, "schedules");
    const auto schedules = generate_schedules(n, cfg.bounds, grid, cfg.stagger_gap, stream);
    const BedState bed0 = cfg.initial_bed();
    Dataset d;
    d.grid = grid;
    d.trajectories.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int id = first_id + static_cast<int>(i);
        d.trajectories.push_back(simulate(schedules[i], bed0, cfg.bed, cfg.ghx, grid, cfg.plant, id));
    }
    spdlog::debug("generated {} trajectories (seed {})", n, seed);
    return d;
}

}  // namespace thermotwin
