#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace thermotwin {

/// Uniform time grid. Every trajectory in a dataset shares one grid.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t n_steps = 2;

    /// Grid with `n_steps` points covering [t0, t0 + span].
    static TimeGrid from_span(double t0, double span, std::size_t n_steps);
    /// 1050 steps over 5460 s.
    static TimeGrid desk_scale();
    /// 5251 points over 5460 s (dt = 1.04 s).
    static TimeGrid paper_scale();

    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double span() const { return dt * static_cast<double>(n_steps - 1); }
    double t_end() const { return time(n_steps - 1); }
    void validate() const;

    bool operator==(const TimeGrid&) const = default;
};

struct ControlVector {
    static constexpr std::size_t size = 4;

    double pv006 = 0.0;         // valve position, 1 = open to the GHX path
    double m_pump_out = 0.0;    // kg/s
    double t_pump_in = 300.0;   // K
    double t_heater_out = 300.0;  // K

    std::array<double, size> as_array() const { return {pv006, m_pump_out, t_pump_in, t_heater_out}; }
    void validate() const;

    bool operator==(const ControlVector&) const = default;
};

struct GhxState {
    static constexpr std::size_t size = 2;

    double m_ghx = 0.0;  // bypass mass flow, kg/s
    double q_ghx = 0.0;  // extracted heat rate, W

    bool operator==(const GhxState&) const = default;
};

struct TesState {
    static constexpr std::size_t size = 5;

    double m_tes_in = 0.0;
    double t_tes_out = 300.0;
    double t_top = 300.0;
    double t_mid = 300.0;
    double t_bot = 300.0;

    bool operator==(const TesState&) const = default;
};

enum class Provenance { simulated, pseudo_experimental };

std::string_view to_string(Provenance p) noexcept;
Provenance provenance_from_string(std::string_view s);

/// CSV column order after `t`.
enum class Channel {
    pv006,
    m_pump_out,
    t_pump_in,
    t_heater_out,
    m_ghx,
    q_ghx,
    m_tes_in,
    t_tes_out,
    t_top,
    t_mid,
    t_bot,
};

inline constexpr std::array<Channel, 11> all_channels = {
    Channel::pv006,    Channel::m_pump_out, Channel::t_pump_in, Channel::t_heater_out,
    Channel::m_ghx,    Channel::q_ghx,      Channel::m_tes_in,  Channel::t_tes_out,
    Channel::t_top,    Channel::t_mid,      Channel::t_bot,
};

std::string_view channel_name(Channel c) noexcept;

/// Which state vector a surrogate is built over.
enum class StateSet { ghx, tes };

std::size_t state_dim(StateSet s) noexcept;

struct Trajectory {
    TimeGrid grid;
    std::vector<ControlVector> controls;
    std::vector<GhxState> ghx;
    std::vector<TesState> tes;
    int id = 0;
    Provenance provenance = Provenance::simulated;

    std::size_t size() const { return grid.n_steps; }
    void validate() const;

    std::vector<double> channel(Channel c) const;
    void set_channel(Channel c, const std::vector<double>& values);

    /// n_steps x 4, columns in ControlVector order.
    Eigen::MatrixXd control_matrix() const;
    /// n_steps x 2 (GHX) or n_steps x 5 (TES).
    Eigen::MatrixXd state_matrix(StateSet s = StateSet::ghx) const;
};

struct Dataset {
    TimeGrid grid;
    std::vector<Trajectory> trajectories;

    void validate() const;
    std::size_t size() const { return trajectories.size(); }
    std::vector<int> ids() const;
    const Trajectory& by_id(int id) const;
    std::vector<const Trajectory*> select(const std::vector<int>& ids) const;
    std::vector<const Trajectory*> all() const;
};

constexpr double kelvin_from_celsius(double c) { return c + 273.15; }
constexpr double celsius_from_kelvin(double k) { return k - 273.15; }

}  // namespace thermotwin
