#pragma once

#include <Eigen/Dense>

#include "thermotwin/core/ode.hpp"
#include "thermotwin/core/types.hpp"

namespace thermotwin {

/// Packed-bed geometry and materials. Node 0 is the top of the bed; flow with
/// mass_flow > 0 runs top to bottom (charging), mass_flow < 0 bottom to top.
struct BedConfig {
    double radius = 1.0;         // m
    double height = 3.0;         // m
    std::size_t n_nodes = 40;
    double porosity = 0.4;
    double rho_f = 900.0;        // kg/m^3
    double cp_f = 2300.0;        // J/(kg K)
    double rho_r = 3900.0;
    double cp_r = 880.0;
    double r_fill = 0.0016;      // m
    double shape_factor = 3.0;
    double h_c = 40.0;           // W/(m^2 K)
    double k_loss = 0.0;         // W/(m K) per unit height
    double t_amb = 293.15;       // K
    bool wakao = false;          // h = h_c * (|m| / wakao_ref_flow)^0.6
    double wakao_ref_flow = 1.0; // kg/s

    double area() const;                 // pi R^2
    double dz() const { return height / static_cast<double>(n_nodes); }
    double surface_per_length() const;   // S_r
    double superficial_velocity(double mass_flow) const;
    double h_eff(double mass_flow) const;
    void validate() const;
};

struct BedState {
    Eigen::VectorXd t_fluid;
    Eigen::VectorXd t_filler;

    std::size_t size() const { return static_cast<std::size_t>(t_fluid.size()); }
    /// Finite and inside [t_amb - 5, 700] K.
    void validate(const BedConfig& cfg) const;
};

BedState uniform_bed(const BedConfig& cfg, double temp);

/// Hot-over-cold tanh thermocline. `front` and `width` are fractions of the
/// height measured from the bottom.
BedState thermocline_bed(const BedConfig& cfg, double t_hot, double t_cold, double front = 0.45, double width = 0.2);

/// Time derivative of both temperature fields (first-order upwind advection).
BedState bed_rhs(const BedState& state, double inlet_temp, double mass_flow, const BedConfig& cfg);

/// Fluid + filler thermal energy relative to 0 K, J.
double total_energy(const BedState& state, const BedConfig& cfg);

/// Advance by `dt` with inputs held constant.
BedState step_bed(const BedState& state, double inlet_temp, double mass_flow, double dt, const BedConfig& cfg,
                  Dopri5& integrator, double t_start = 0.0);
BedState step_bed(const BedState& state, double inlet_temp, double mass_flow, double dt, const BedConfig& cfg,
                  const OdeTolerance& tol = {});

/// Linear interpolation of the fluid field at a fractional height from the bottom.
double probe_temperature(const BedState& state, double height_fraction);

}  // namespace thermotwin
