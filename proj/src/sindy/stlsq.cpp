#include "thermotwin/sindy/stlsq.hpp"

#include <cmath>
#include <string>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

void StlsqConfig::validate() const {
    require(std::isfinite(threshold) && threshold >= 0.0, ErrorKind::parameter, "stlsq threshold must be >= 0");
    require(std::isfinite(ridge) && ridge >= 0.0, ErrorKind::parameter, "stlsq ridge must be >= 0");
    require(max_iters >= 1, ErrorKind::parameter, "stlsq max_iters must be >= 1");
}

namespace {

// Ridge solve on the active columns through QR of [theta; sqrt(alpha) I].
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y, const std::vector<bool>& active,
                            double alpha, int equation) {
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < active.size(); ++j)
        if (active[j]) cols.push_back(static_cast<Eigen::Index>(j));
    const auto k = static_cast<Eigen::Index>(cols.size());
    const Eigen::Index n = theta.rows();
    const Eigen::Index extra = alpha > 0.0 ? k : 0;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + extra, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + extra);
    for (Eigen::Index j = 0; j < k; ++j) a.col(j).head(n) = theta.col(cols[static_cast<std::size_t>(j)]);
    b.head(n) = y;
    if (extra) a.bottomRows(k).diagonal().setConstant(std::sqrt(alpha));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < k) {
        fail(ErrorKind::singularity, "stlsq: rank-deficient library for state equation " + std::to_string(equation) +
                                         " (rank " + std::to_string(qr.rank()) + " of " + std::to_string(k) + ")");
    }
    const Eigen::VectorXd c_active = qr.solve(b);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(theta.cols());
    for (Eigen::Index j = 0; j < k; ++j) c(cols[static_cast<std::size_t>(j)]) = c_active(j);
    return c;
}

}  // namespace

StlsqResult stlsq_solve(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y, const StlsqConfig& cfg, int equation) {
    cfg.validate();
    require(theta.rows() == y.size(), ErrorKind::shape, "stlsq: library and target lengths differ");
    require(theta.rows() >= theta.cols(), ErrorKind::shape, "stlsq: fewer samples than library columns");
    require(theta.allFinite() && y.allFinite(), ErrorKind::numeric, "stlsq: non-finite library or target");

    const Eigen::Index p = theta.cols();
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
    Eigen::MatrixXd work = theta;
    if (cfg.normalize_columns) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const double rms = theta.col(j).norm() / std::sqrt(static_cast<double>(theta.rows()));
            if (rms > 0.0) scale(j) = rms;
        }
        work = theta * scale.cwiseInverse().asDiagonal();
    }

    StlsqResult res;
    std::vector<bool> active(static_cast<std::size_t>(p), true);
    Eigen::VectorXd c;
    for (int it = 0; it < cfg.max_iters; ++it) {
        res.support.push_back(active);
        res.iterations = it + 1;
        c = ridge_solve(work, y, active, cfg.ridge, equation);
        bool changed = false;
        std::size_t remaining = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            auto a = active[static_cast<std::size_t>(j)];
            if (a && std::abs(c(j)) < cfg.threshold) {
                a = false;
                c(j) = 0.0;
                changed = true;
            }
            remaining += a ? 1 : 0;
        }
        if (remaining == 0) {
            fail(ErrorKind::empty_model, "stlsq: every coefficient of state equation " + std::to_string(equation) +
                                             " fell below the threshold");
        }
        if (!changed) break;
        if (it + 1 == cfg.max_iters) {
            // Refit on the final support so returned coefficients are consistent.
            res.support.push_back(active);
            c = ridge_solve(work, y, active, cfg.ridge, equation);
        }
    }
    res.coef = c.cwiseQuotient(scale);
    return res;
}

LinearModel stlsq_fit(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& dxdt, const StlsqConfig& cfg,
                      Eigen::Index state_dim, Eigen::Index input_dim) {
    require(theta.cols() == 1 + state_dim + input_dim, ErrorKind::shape, "stlsq_fit: library width mismatch");
    require(dxdt.cols() == state_dim, ErrorKind::shape, "stlsq_fit: one target column per state required");
    Eigen::MatrixXd xi(theta.cols(), state_dim);
    for (Eigen::Index i = 0; i < state_dim; ++i) {
        xi.col(i) = stlsq_solve(theta, dxdt.col(i), cfg, static_cast<int>(i)).coef;
    }
    auto m = LinearModel::from_xi(xi, state_dim, input_dim);
    m.validate();
    return m;
}

}  // namespace thermotwin
