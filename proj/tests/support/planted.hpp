#pragma once

// Planted linear systems for identification tests. Trajectories are produced
// by tightly-toleranced integration of dx/dt = A x + B u(t) + d with smooth
// sinusoidal controls, so finite differences are accurate.

#include <cmath>

#include "thermotwin/core/ode.hpp"
#include "thermotwin/core/rng.hpp"
#include "thermotwin/core/types.hpp"
#include "thermotwin/sindy/model.hpp"

namespace planted {

inline thermotwin::LinearModel ghx_system() {
    thermotwin::LinearModel m;
    m.A.resize(2, 2);
    m.A << -0.8, 0.15, 0.0, -0.5;
    m.B.resize(2, 4);
    m.B << 0.6, -0.3, 0.0, 0.2, 0.4, 0.0, 0.25, -0.1;
    m.d.resize(2);
    m.d << 0.3, -0.2;
    return m;
}


// Control channel k of trajectory `traj`.
inline double control(std::size_t traj, std::size_t k, double t) {
    const double f = 0.3 + 0.17 * static_cast<double>(k) + 0.11 * static_cast<double>(traj);
    const double ph = 0.7 * static_cast<double>(k) + 1.3 * static_cast<double>(traj);
    return 0.5 + 0.3 * std::sin(f * t + ph) + 0.15 * std::cos(0.5 * f * t + 2 * ph);
}

/// Returns states (n x n_x) and controls (n x n_u) on `grid`.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> simulate(const thermotwin::LinearModel& m, std::size_t traj,
                                                           const thermotwin::TimeGrid& grid,
                                                           const Eigen::VectorXd& x0) {
    using namespace thermotwin;
    const auto n = static_cast<Eigen::Index>(grid.n_steps);
    const auto nu = m.input_dim();
    Eigen::MatrixXd x(n, m.state_dim()), u(n, nu);
    const OdeRhs f = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        Eigen::VectorXd uu(nu);
        for (Eigen::Index k = 0; k < nu; ++k) uu(k) = control(traj, static_cast<std::size_t>(k), t);
        dy = m.A * y + m.B * uu + m.d;
    };
    Dopri5 ode({1e-13, 1e-13});
    Eigen::VectorXd y = x0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = grid.time(static_cast<std::size_t>(i));
        if (i > 0) ode.advance(f, grid.time(static_cast<std::size_t>(i - 1)), t, y);
        x.row(i) = y.transpose();
        for (Eigen::Index k = 0; k < nu; ++k) u(i, k) = control(traj, static_cast<std::size_t>(k), t);
    }
    return {x, u};
}

/// Wraps a planted GHX-dimension run as a Trajectory (controls kept inside
/// their physical validity ranges by the construction above).
inline thermotwin::Trajectory as_trajectory(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                                            const thermotwin::TimeGrid& grid, int id) {
    using namespace thermotwin;
    Trajectory t;
    t.grid = grid;
    t.id = id;
    const auto n = grid.n_steps;
    t.controls.resize(n);
    t.ghx.resize(n);
    t.tes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        t.controls[i] = {u(r, 0), u(r, 1), u(r, 2), u(r, 3)};
        t.ghx[i] = {x(r, 0), x(r, 1)};
    }
    return t;
}

}  // namespace planted
