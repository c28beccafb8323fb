#include "thermotwin/sim/ghx.hpp"

#include <algorithm>
#include <cmath>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

void GhxConfig::validate() const {
    require(effectiveness > 0.0 && effectiveness <= 1.0, ErrorKind::parameter, "ghx effectiveness must be in (0, 1]");
    require(std::isfinite(t_glycol_in) && t_glycol_in > 0.0, ErrorKind::parameter, "glycol inlet must be > 0 K");
    require(std::isfinite(c_glycol) && c_glycol > 0.0, ErrorKind::parameter, "glycol capacity rate must be > 0");
    require(std::isfinite(valve_tau) && valve_tau > 0.0, ErrorKind::parameter, "valve time constant must be > 0");
    require(std::isfinite(cp_hot) && cp_hot > 0.0, ErrorKind::parameter, "hot-side heat capacity must be > 0");
    require(std::isfinite(heat_tau) && heat_tau >= 0.0, ErrorKind::parameter, "exchanger lag must be >= 0");
}

GhxState ghx_outputs(double valve, double bed_out_temp, const ControlVector& u, const GhxConfig& cfg) {
    const double v = std::clamp(valve, 0.0, 1.0);
    const double c_min = std::min(u.m_pump_out * cfg.cp_hot, cfg.c_glycol);
    const double dT = std::max(bed_out_temp - cfg.t_glycol_in, 0.0);
    GhxState s;
    s.m_ghx = std::max((1.0 - v) * u.m_pump_out, 0.0);
    s.q_ghx = std::max(cfg.effectiveness * c_min * dT * v, 0.0);
    return s;
}

GhxLoopState ghx_step(double bed_out_temp, const ControlVector& u, const GhxLoopState& prev, double dt,
                      const GhxConfig& cfg) {
    require(dt > 0.0, ErrorKind::parameter, "ghx_step: dt must be > 0");
    require(std::isfinite(bed_out_temp), ErrorKind::numeric, "ghx_step: non-finite outlet temperature");
    GhxLoopState next;
    next.valve = u.pv006 + (prev.valve - u.pv006) * std::exp(-dt / cfg.valve_tau);
    next.out = ghx_outputs(next.valve, bed_out_temp, u, cfg);
    if (cfg.heat_tau > 0.0) {
        const double q_ss = next.out.q_ghx;
        next.out.q_ghx = q_ss + (prev.out.q_ghx - q_ss) * std::exp(-dt / cfg.heat_tau);
    }
    return next;
}

}  // namespace thermotwin
