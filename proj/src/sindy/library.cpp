#include "thermotwin/sindy/library.hpp"

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

Eigen::MatrixXd build_library(const Eigen::MatrixXd& states, const Eigen::MatrixXd& controls) {
    require(states.rows() == controls.rows(), ErrorKind::shape, "build_library: states and controls differ in length");
    Eigen::MatrixXd theta(states.rows(), 1 + states.cols() + controls.cols());
    theta.col(0).setOnes();
    theta.middleCols(1, states.cols()) = states;
    theta.rightCols(controls.cols()) = controls;
    return theta;
}

std::vector<double> estimate_derivatives(std::span<const double> x, double dt) {
    require(x.size() >= 3, ErrorKind::shape, "estimate_derivatives: need at least 3 samples");
    require(dt > 0.0, ErrorKind::parameter, "estimate_derivatives: dt must be > 0");
    const std::size_t n = x.size();
    std::vector<double> d(n);
    const double h2 = 2.0 * dt;
    d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / h2;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i - 1]) / h2;
    d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / h2;
    return d;
}

Eigen::MatrixXd estimate_derivatives(const Eigen::MatrixXd& series, double dt) {
    Eigen::MatrixXd out(series.rows(), series.cols());
    for (Eigen::Index c = 0; c < series.cols(); ++c) {
        const Eigen::VectorXd col = series.col(c);
        const auto d = estimate_derivatives(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), dt);
        out.col(c) = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    }
    return out;
}

}  // namespace thermotwin
