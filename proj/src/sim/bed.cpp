#include "thermotwin/sim/bed.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

double BedConfig::area() const { return std::numbers::pi * radius * radius; }

double BedConfig::surface_per_length() const { return shape_factor * area() * (1.0 - porosity) / r_fill; }

double BedConfig::superficial_velocity(double mass_flow) const { return mass_flow / (rho_f * porosity * area()); }

double BedConfig::h_eff(double mass_flow) const {
    if (!wakao) return h_c;
    return h_c * std::pow(std::abs(mass_flow) / wakao_ref_flow, 0.6);
}

void BedConfig::validate() const {
    auto positive = [](double v, const char* name) {
        require(std::isfinite(v) && v > 0.0, ErrorKind::parameter, std::string("bed ") + name + " must be > 0");
    };
    positive(radius, "radius");
    positive(height, "height");
    positive(rho_f, "rho_f");
    positive(cp_f, "cp_f");
    positive(rho_r, "rho_r");
    positive(cp_r, "cp_r");
    positive(r_fill, "r_fill");
    positive(shape_factor, "shape_factor");
    positive(t_amb, "t_amb");
    positive(wakao_ref_flow, "wakao_ref_flow");
    require(porosity > 0.0 && porosity < 1.0, ErrorKind::parameter, "bed porosity must lie in (0, 1)");
    require(n_nodes >= 3, ErrorKind::parameter, "bed needs n_nodes >= 3");
    require(std::isfinite(h_c) && h_c >= 0.0, ErrorKind::parameter, "bed h_c must be >= 0");
    require(std::isfinite(k_loss) && k_loss >= 0.0, ErrorKind::parameter, "bed k_loss must be >= 0");
}

void BedState::validate(const BedConfig& cfg) const {
    require(t_fluid.size() == t_filler.size() && size() == cfg.n_nodes, ErrorKind::shape,
            "bed state size differs from n_nodes");
    const double lo = cfg.t_amb - 5.0;
    for (Eigen::Index i = 0; i < t_fluid.size(); ++i) {
        for (double v : {t_fluid(i), t_filler(i)}) {
            if (!std::isfinite(v) || v < lo || v > 700.0) {
                fail(ErrorKind::numeric, "bed temperature " + std::to_string(v) + " K out of range at node " +
                                             std::to_string(i));
            }
        }
    }
}

BedState uniform_bed(const BedConfig& cfg, double temp) {
    const auto n = static_cast<Eigen::Index>(cfg.n_nodes);
    return {Eigen::VectorXd::Constant(n, temp), Eigen::VectorXd::Constant(n, temp)};
}

BedState thermocline_bed(const BedConfig& cfg, double t_hot, double t_cold, double front, double width) {
    require(width > 0.0, ErrorKind::parameter, "thermocline width must be > 0");
    auto s = uniform_bed(cfg, t_cold);
    const double n = static_cast<double>(cfg.n_nodes);
    for (Eigen::Index i = 0; i < s.t_fluid.size(); ++i) {
        const double h = 1.0 - (static_cast<double>(i) + 0.5) / n;  // from the bottom
        const double w = 0.5 * (1.0 + std::tanh((h - front) / width));
        s.t_fluid(i) = t_cold + (t_hot - t_cold) * w;
    }
    s.t_filler = s.t_fluid;
    return s;
}

namespace {

// Packed form y = [T_f; T_r].
void packed_rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy, double inlet, double mass_flow, const BedConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(y.size() / 2);
    dy.resize(y.size());
    const double a = cfg.area();
    const double cap_f = cfg.rho_f * cfg.cp_f * cfg.porosity * a;
    const double cap_r = cfg.rho_r * cfg.cp_r * (1.0 - cfg.porosity) * a;
    const double hs = cfg.h_eff(mass_flow) * cfg.surface_per_length();
    const double u_dz = std::abs(cfg.superficial_velocity(mass_flow)) / cfg.dz();
    const bool down = mass_flow > 0.0;

    for (Eigen::Index i = 0; i < n; ++i) {
        const double tf = y(i);
        const double tr = y(n + i);
        if (!std::isfinite(tf) || !std::isfinite(tr)) {
            fail(ErrorKind::numeric, "non-finite bed temperature at node " + std::to_string(i));
        }
        double upstream;
        if (down) upstream = i == 0 ? inlet : y(i - 1);
        else upstream = i == n - 1 ? inlet : y(i + 1);
        const double exchange = hs * (tr - tf);
        const double loss = cfg.k_loss * (cfg.t_amb - tf);
        dy(i) = (mass_flow != 0.0 ? -u_dz * (tf - upstream) : 0.0) + (exchange + loss) / cap_f;
        dy(n + i) = -exchange / cap_r;
    }
}

Eigen::VectorXd pack(const BedState& s) {
    Eigen::VectorXd y(s.t_fluid.size() * 2);
    y << s.t_fluid, s.t_filler;
    return y;
}

BedState unpack(const Eigen::VectorXd& y) {
    const auto n = y.size() / 2;
    return {y.head(n), y.tail(n)};
}

}  // namespace

BedState bed_rhs(const BedState& state, double inlet_temp, double mass_flow, const BedConfig& cfg) {
    require(state.t_fluid.size() == state.t_filler.size() && state.t_fluid.size() >= 2, ErrorKind::shape,
            "bed_rhs: fluid and filler fields must have equal length >= 2");
    Eigen::VectorXd dy;
    packed_rhs(pack(state), dy, inlet_temp, mass_flow, cfg);
    return unpack(dy);
}

double total_energy(const BedState& state, const BedConfig& cfg) {
    const double a = cfg.area() * cfg.dz();
    return a * (cfg.rho_f * cfg.cp_f * cfg.porosity * state.t_fluid.sum() +
                cfg.rho_r * cfg.cp_r * (1.0 - cfg.porosity) * state.t_filler.sum());
}

BedState step_bed(const BedState& state, double inlet_temp, double mass_flow, double dt, const BedConfig& cfg,
                  Dopri5& integrator, double t_start) {
    require(dt > 0.0, ErrorKind::parameter, "step_bed: dt must be > 0");
    Eigen::VectorXd y = pack(state);
    const OdeRhs f = [&](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        packed_rhs(x, dx, inlet_temp, mass_flow, cfg);
    };
    integrator.advance(f, t_start, t_start + dt, y);
    return unpack(y);
}

BedState step_bed(const BedState& state, double inlet_temp, double mass_flow, double dt, const BedConfig& cfg,
                  const OdeTolerance& tol) {
    Dopri5 integrator(tol);
    return step_bed(state, inlet_temp, mass_flow, dt, cfg, integrator);
}

double probe_temperature(const BedState& state, double height_fraction) {
    const double n = static_cast<double>(state.size());
    // Node i sits at fractional height 1 - (i + 0.5)/n.
    double pos = (1.0 - height_fraction) * n - 0.5;
    pos = std::clamp(pos, 0.0, n - 1.0);
    const auto i = static_cast<Eigen::Index>(std::floor(pos));
    if (i >= state.t_fluid.size() - 1) return state.t_fluid(state.t_fluid.size() - 1);
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * state.t_fluid(i) + w * state.t_fluid(i + 1);
}

}  // namespace thermotwin
