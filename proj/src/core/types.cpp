#include "thermotwin/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

TimeGrid TimeGrid::from_span(double t0, double span, std::size_t n_steps) {
    require(n_steps >= 2, ErrorKind::parameter, "time grid needs at least 2 points");
    require(std::isfinite(span) && span > 0.0, ErrorKind::parameter, "time grid span must be positive");
    TimeGrid g{t0, span / static_cast<double>(n_steps - 1), n_steps};
    g.validate();
    return g;
}

TimeGrid TimeGrid::desk_scale() { return from_span(0.0, 5460.0, 1050); }

TimeGrid TimeGrid::paper_scale() { return from_span(0.0, 5460.0, 5251); }

void TimeGrid::validate() const {
    require(std::isfinite(t0), ErrorKind::parameter, "time grid t0 must be finite");
    require(std::isfinite(dt) && dt > 0.0, ErrorKind::parameter, "time grid dt must be > 0");
    require(n_steps >= 2, ErrorKind::parameter, "time grid needs n_steps >= 2");
}

void ControlVector::validate() const {
    require(std::isfinite(pv006) && pv006 >= 0.0 && pv006 <= 1.0, ErrorKind::parameter,
            "pv006 must lie in [0, 1], got " + std::to_string(pv006));
    require(std::isfinite(m_pump_out) && m_pump_out >= 0.0, ErrorKind::parameter,
            "m_pump_out must be non-negative");
    require(std::isfinite(t_pump_in) && t_pump_in > 0.0, ErrorKind::parameter, "t_pump_in must be > 0 K");
    require(std::isfinite(t_heater_out) && t_heater_out > 0.0, ErrorKind::parameter,
            "t_heater_out must be > 0 K");
}

std::string_view to_string(Provenance p) noexcept {
    switch (p) {
        case Provenance::simulated: return "simulated";
        case Provenance::pseudo_experimental: return "pseudo_experimental";
    }
    return "simulated";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "simulated") return Provenance::simulated;
    if (s == "pseudo_experimental") return Provenance::pseudo_experimental;
    fail(ErrorKind::data, "unknown provenance tag '" + std::string(s) + "'");
}

std::string_view channel_name(Channel c) noexcept {
    switch (c) {
        case Channel::pv006: return "pv006";
        case Channel::m_pump_out: return "m_pump_out";
        case Channel::t_pump_in: return "t_pump_in";
        case Channel::t_heater_out: return "t_heater_out";
        case Channel::m_ghx: return "m_ghx";
        case Channel::q_ghx: return "q_ghx";
        case Channel::m_tes_in: return "m_tes_in";
        case Channel::t_tes_out: return "t_tes_out";
        case Channel::t_top: return "t_top";
        case Channel::t_mid: return "t_mid";
        case Channel::t_bot: return "t_bot";
    }
    return "";
}

std::size_t state_dim(StateSet s) noexcept { return s == StateSet::ghx ? GhxState::size : TesState::size; }

namespace {

template <class Traj>
auto& field(Traj& t, Channel c, std::size_t i) {
    switch (c) {
        case Channel::pv006: return t.controls[i].pv006;
        case Channel::m_pump_out: return t.controls[i].m_pump_out;
        case Channel::t_pump_in: return t.controls[i].t_pump_in;
        case Channel::t_heater_out: return t.controls[i].t_heater_out;
        case Channel::m_ghx: return t.ghx[i].m_ghx;
        case Channel::q_ghx: return t.ghx[i].q_ghx;
        case Channel::m_tes_in: return t.tes[i].m_tes_in;
        case Channel::t_tes_out: return t.tes[i].t_tes_out;
        case Channel::t_top: return t.tes[i].t_top;
        case Channel::t_mid: return t.tes[i].t_mid;
        case Channel::t_bot: return t.tes[i].t_bot;
    }
    return t.controls[i].pv006;
}

}  // namespace

void Trajectory::validate() const {
    grid.validate();
    const auto n = grid.n_steps;
    require(controls.size() == n && ghx.size() == n && tes.size() == n, ErrorKind::shape,
            "trajectory " + std::to_string(id) + ": channel lengths differ from grid.n_steps");
    for (std::size_t i = 0; i < n; ++i) {
        controls[i].validate();
        const bool finite = std::isfinite(ghx[i].m_ghx) && std::isfinite(ghx[i].q_ghx) &&
                            std::isfinite(tes[i].m_tes_in) && std::isfinite(tes[i].t_tes_out) &&
                            std::isfinite(tes[i].t_top) && std::isfinite(tes[i].t_mid) &&
                            std::isfinite(tes[i].t_bot);
        require(finite, ErrorKind::numeric,
                "trajectory " + std::to_string(id) + ": non-finite state at index " + std::to_string(i));
    }
}

std::vector<double> Trajectory::channel(Channel c) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = field(*this, c, i);
    return out;
}

void Trajectory::set_channel(Channel c, const std::vector<double>& values) {
    require(values.size() == size(), ErrorKind::shape, "set_channel: length mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) field(*this, c, i) = values[i];
}

Eigen::MatrixXd Trajectory::control_matrix() const {
    Eigen::MatrixXd u(static_cast<Eigen::Index>(size()), 4);
    for (std::size_t i = 0; i < size(); ++i) {
        const auto a = controls[i].as_array();
        for (Eigen::Index j = 0; j < 4; ++j) u(static_cast<Eigen::Index>(i), j) = a[static_cast<std::size_t>(j)];
    }
    return u;
}

Eigen::MatrixXd Trajectory::state_matrix(StateSet s) const {
    const auto n = static_cast<Eigen::Index>(size());
    if (s == StateSet::ghx) {
        Eigen::MatrixXd x(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, 0) = ghx[static_cast<std::size_t>(i)].m_ghx;
            x(i, 1) = ghx[static_cast<std::size_t>(i)].q_ghx;
        }
        return x;
    }
    Eigen::MatrixXd x(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s5 = tes[static_cast<std::size_t>(i)];
        x.row(i) << s5.m_tes_in, s5.t_tes_out, s5.t_top, s5.t_mid, s5.t_bot;
    }
    return x;
}

void Dataset::validate() const {
    require(!trajectories.empty(), ErrorKind::data, "dataset is empty");
    grid.validate();
    std::set<int> seen;
    for (const auto& t : trajectories) {
        require(t.grid == grid, ErrorKind::data,
                "trajectory " + std::to_string(t.id) + " does not share the dataset grid");
        require(seen.insert(t.id).second, ErrorKind::data, "duplicate trajectory id " + std::to_string(t.id));
        t.validate();
    }
}

std::vector<int> Dataset::ids() const {
    std::vector<int> out;
    out.reserve(trajectories.size());
    for (const auto& t : trajectories) out.push_back(t.id);
    return out;
}

const Trajectory& Dataset::by_id(int id) const {
    auto it = std::find_if(trajectories.begin(), trajectories.end(), [id](const Trajectory& t) { return t.id == id; });
    require(it != trajectories.end(), ErrorKind::data, "no trajectory with id " + std::to_string(id));
    return *it;
}

std::vector<const Trajectory*> Dataset::select(const std::vector<int>& ids) const {
    std::vector<const Trajectory*> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(&by_id(id));
    return out;
}

std::vector<const Trajectory*> Dataset::all() const {
    std::vector<const Trajectory*> out;
    out.reserve(trajectories.size());
    for (const auto& t : trajectories) out.push_back(&t);
    return out;
}

}  // namespace thermotwin
