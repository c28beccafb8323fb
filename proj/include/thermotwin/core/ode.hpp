#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace thermotwin {

/// dy/dt = f(t, y), written into `dydt`.
using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct OdeTolerance {
    double rtol = 1e-8;
    double atol = 1e-8;
    double h_min = 1e-12;     // relative to the interval length
    std::size_t max_steps = 1'000'000;
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

/// Adaptive Dormand-Prince 5(4) integrator with PI step-size control.
///
/// `advance` integrates from `t0` to `t1` in place. The last accepted step size
/// is remembered and reused as the initial guess on the next call, so marching
/// along an output grid costs about the same as one long integration.
class Dopri5 {
public:
    explicit Dopri5(OdeTolerance tol = {});

    /// Throws Error{integration} with the time reached on step-size underflow
    /// or when the step budget is exhausted.
    void advance(const OdeRhs& f, double t0, double t1, Eigen::VectorXd& y);

    const OdeStats& stats() const noexcept { return stats_; }
    void reset_step() noexcept { h_ = 0.0; }

private:
    double initial_step(const OdeRhs& f, double t0, const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double dir);

    OdeTolerance tol_;
    OdeStats stats_;
    double h_ = 0.0;
    double err_prev_ = 1e-4;
    Eigen::VectorXd k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_, err_;
};

}  // namespace thermotwin
