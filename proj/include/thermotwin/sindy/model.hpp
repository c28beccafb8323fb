#pragma once

#include <Eigen/Dense>

#include "thermotwin/core/types.hpp"

namespace thermotwin {

/// dx/dt = A x + B u + d.
struct LinearModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::VectorXd d;

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index input_dim() const { return B.cols(); }
    Eigen::Index coefficient_count() const { return state_dim() * (1 + state_dim() + input_dim()); }

    /// Per equation i: [d_i, A(i, :), B(i, :)], equations stacked.
    Eigen::VectorXd flatten() const;
    static LinearModel unflatten(const Eigen::VectorXd& a, Eigen::Index state_dim, Eigen::Index input_dim);
    /// Coefficient matrix in library order, (1 + n_x + n_u) x n_x.
    Eigen::MatrixXd xi() const;
    static LinearModel from_xi(const Eigen::MatrixXd& xi, Eigen::Index state_dim, Eigen::Index input_dim);

    void validate() const;
};

enum class RolloutMethod {
    exact_hold,   // matrix exponential of the augmented system per step
    adaptive,     // Dormand-Prince with the tolerances below
};

struct RolloutConfig {
    double rtol = 1e-12;
    double atol = 1e-12;
    double blowup = 1e9;
    RolloutMethod method = RolloutMethod::exact_hold;

    void validate() const;
};

/// Discrete propagator for one grid step under zero-order hold:
/// x_{k+1} = phi x_k + gamma (B u_k + d).
struct HoldPropagator {
    Eigen::MatrixXd phi;
    Eigen::MatrixXd gamma;
};

HoldPropagator hold_propagator(const Eigen::MatrixXd& A, double dt);

/// Rolls the model forward on `grid`; controls is n_steps x n_u with row k
/// held over [t_k, t_{k+1}). Returns n_steps x n_x with row 0 = x0.
/// Throws Error{divergence} with the failure time when |x| exceeds blowup.
Eigen::MatrixXd rollout(const LinearModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls,
                        const TimeGrid& grid, const RolloutConfig& rcfg = {});

}  // namespace thermotwin
