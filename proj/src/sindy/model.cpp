#include "thermotwin/sindy/model.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "thermotwin/core/errors.hpp"
#include "thermotwin/core/ode.hpp"

namespace thermotwin {

Eigen::VectorXd LinearModel::flatten() const {
    const Eigen::Index nx = state_dim(), nu = input_dim(), w = 1 + nx + nu;
    Eigen::VectorXd a(nx * w);
    for (Eigen::Index i = 0; i < nx; ++i) {
        a(i * w) = d(i);
        a.segment(i * w + 1, nx) = A.row(i).transpose();
        a.segment(i * w + 1 + nx, nu) = B.row(i).transpose();
    }
    return a;
}

LinearModel LinearModel::unflatten(const Eigen::VectorXd& a, Eigen::Index nx, Eigen::Index nu) {
    const Eigen::Index w = 1 + nx + nu;
    require(nx >= 1 && nu >= 0 && a.size() == nx * w, ErrorKind::shape,
            "unflatten: coefficient vector has " + std::to_string(a.size()) + " entries, expected " +
                std::to_string(nx * w));
    LinearModel m;
    m.A.resize(nx, nx);
    m.B.resize(nx, nu);
    m.d.resize(nx);
    for (Eigen::Index i = 0; i < nx; ++i) {
        m.d(i) = a(i * w);
        m.A.row(i) = a.segment(i * w + 1, nx).transpose();
        m.B.row(i) = a.segment(i * w + 1 + nx, nu).transpose();
    }
    return m;
}

Eigen::MatrixXd LinearModel::xi() const {
    const Eigen::Index nx = state_dim(), nu = input_dim();
    Eigen::MatrixXd x(1 + nx + nu, nx);
    x.row(0) = d.transpose();
    x.middleRows(1, nx) = A.transpose();
    x.bottomRows(nu) = B.transpose();
    return x;
}

LinearModel LinearModel::from_xi(const Eigen::MatrixXd& xi, Eigen::Index nx, Eigen::Index nu) {
    require(xi.rows() == 1 + nx + nu && xi.cols() == nx, ErrorKind::shape, "from_xi: wrong coefficient matrix shape");
    LinearModel m;
    m.d = xi.row(0).transpose();
    m.A = xi.middleRows(1, nx).transpose();
    m.B = xi.bottomRows(nu).transpose();
    return m;
}

void LinearModel::validate() const {
    require(A.rows() == A.cols() && B.rows() == A.rows() && d.size() == A.rows() && A.rows() >= 1, ErrorKind::shape,
            "linear model dimensions are inconsistent");
    require(A.allFinite() && B.allFinite() && d.allFinite(), ErrorKind::numeric, "linear model has non-finite entries");
}

void RolloutConfig::validate() const {
    require(rtol > 0.0 && rtol < 1.0 && atol > 0.0 && atol < 1.0, ErrorKind::parameter,
            "rollout tolerances must lie in (0, 1)");
    require(blowup > 0.0, ErrorKind::parameter, "rollout blow-up bound must be > 0");
}

HoldPropagator hold_propagator(const Eigen::MatrixXd& A, double dt) {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = A * dt;
    aug.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n) * dt;
    const Eigen::MatrixXd e = aug.exp();
    return {e.topLeftCorner(n, n), e.topRightCorner(n, n)};
}

namespace {

void check_state(const Eigen::VectorXd& x, double bound, double t) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > bound) {
        fail(ErrorKind::divergence, "rollout diverged at t=" + std::to_string(t), t);
    }
}

}  // namespace

Eigen::MatrixXd rollout(const LinearModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls,
                        const TimeGrid& grid, const RolloutConfig& rcfg) {
    model.validate();
    rcfg.validate();
    require(x0.size() == model.state_dim(), ErrorKind::shape, "rollout: x0 dimension differs from the model");
    require(controls.rows() == static_cast<Eigen::Index>(grid.n_steps) && controls.cols() == model.input_dim(),
            ErrorKind::shape, "rollout: controls must be n_steps x n_u");

    const auto n = static_cast<Eigen::Index>(grid.n_steps);
    Eigen::MatrixXd out(n, model.state_dim());
    Eigen::VectorXd x = x0;
    out.row(0) = x.transpose();
    // Forcing B u + d for every row at once.
    const Eigen::MatrixXd forcing = (controls * model.B.transpose()).rowwise() + model.d.transpose();

    if (rcfg.method == RolloutMethod::exact_hold) {
        const auto prop = hold_propagator(model.A, grid.dt);
        for (Eigen::Index k = 0; k + 1 < n; ++k) {
            x = prop.phi * x + prop.gamma * forcing.row(k).transpose();
            check_state(x, rcfg.blowup, grid.time(static_cast<std::size_t>(k + 1)));
            out.row(k + 1) = x.transpose();
        }
        return out;
    }

    Dopri5 ode({rcfg.rtol, rcfg.atol});
    Eigen::VectorXd f;
    const OdeRhs rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = model.A * y + f; };
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        f = forcing.row(k).transpose();
        const double t0 = grid.time(static_cast<std::size_t>(k));
        try {
            ode.advance(rhs, t0, t0 + grid.dt, x);
        } catch (const Error& e) {
            fail(ErrorKind::divergence, std::string("rollout: ") + e.what(), e.time().value_or(t0));
        }
        check_state(x, rcfg.blowup, grid.time(static_cast<std::size_t>(k + 1)));
        out.row(k + 1) = x.transpose();
    }
    return out;
}

}  // namespace thermotwin
