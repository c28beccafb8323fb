#include "thermotwin/core/signal.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

namespace {

constexpr double snap_tol = 1e-9;

double interpolate_at(std::span<const double> v, const TimeGrid& source, double t) {
    const double pos = (t - source.t0) / source.dt;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < snap_tol) {
        return v[static_cast<std::size_t>(nearest)];
    }
    auto idx = static_cast<std::size_t>(std::floor(pos));
    if (idx + 1 >= v.size()) idx = v.size() - 2;
    const double frac = pos - static_cast<double>(idx);
    return v[idx] + frac * (v[idx + 1] - v[idx]);
}

void check_span(const TimeGrid& source, const TimeGrid& target) {
    source.validate();
    target.validate();
    const double tol = snap_tol * source.dt;
    if (target.t0 < source.t0 - tol || target.t_end() > source.t_end() + tol) {
        fail(ErrorKind::span_mismatch, "target grid [" + std::to_string(target.t0) + ", " +
                                           std::to_string(target.t_end()) + "] exceeds source span [" +
                                           std::to_string(source.t0) + ", " + std::to_string(source.t_end()) + "]");
    }
}

}  // namespace

std::vector<double> resample_series(std::span<const double> values, const TimeGrid& source, const TimeGrid& target) {
    require(values.size() == source.n_steps, ErrorKind::shape, "resample_series: length differs from source grid");
    check_span(source, target);
    std::vector<double> out(target.n_steps);
    for (std::size_t i = 0; i < target.n_steps; ++i) {
        // Clamp into the source span so endpoint round-off cannot step outside it.
        double t = target.time(i);
        t = std::min(std::max(t, source.t0), source.t_end());
        out[i] = interpolate_at(values, source, t);
    }
    return out;
}

Trajectory resample_trajectory(const Trajectory& traj, const TimeGrid& target) {
    traj.validate();
    check_span(traj.grid, target);
    Trajectory out;
    out.grid = target;
    out.id = traj.id;
    out.provenance = traj.provenance;
    out.controls.resize(target.n_steps);
    out.ghx.resize(target.n_steps);
    out.tes.resize(target.n_steps);
    for (Channel c : all_channels) {
        const auto src = traj.channel(c);
        out.set_channel(c, resample_series(src, traj.grid, target));
    }
    return out;
}

std::vector<double> savgol_filter(std::span<const double> series, std::size_t window, std::size_t poly_order) {
    if (window % 2 == 0 || window <= poly_order) {
        fail(ErrorKind::parameter, "savgol_filter: window must be odd and exceed poly_order (window=" +
                                       std::to_string(window) + ", order=" + std::to_string(poly_order) + ")");
    }
    require(series.size() >= window, ErrorKind::shape, "savgol_filter: series shorter than window");

    const auto w = static_cast<Eigen::Index>(window);
    const auto cols = static_cast<Eigen::Index>(poly_order + 1);
    const Eigen::Index half = w / 2;
    const double scale = half > 0 ? static_cast<double>(half) : 1.0;

    Eigen::MatrixXd vander(w, cols);
    for (Eigen::Index j = 0; j < w; ++j) {
        const double x = static_cast<double>(j - half) / scale;
        double p = 1.0;
        for (Eigen::Index k = 0; k < cols; ++k) {
            vander(j, k) = p;
            p *= x;
        }
    }
    // Hat matrix of the local fit: row i evaluates the fitted polynomial at window position i.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(vander);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(w, cols);
    const Eigen::MatrixXd hat = q * q.transpose();

    const auto n = static_cast<Eigen::Index>(series.size());
    Eigen::Map<const Eigen::VectorXd> s(series.data(), n);
    std::vector<double> out(series.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index start;
        Eigen::Index row;
        if (i < half) {
            start = 0;
            row = i;
        } else if (i >= n - half) {
            start = n - w;
            row = i - start;
        } else {
            start = i - half;
            row = half;
        }
        out[static_cast<std::size_t>(i)] = hat.row(row).dot(s.segment(start, w));
    }
    return out;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    require(pred.size() == truth.size() && !pred.empty(), ErrorKind::shape,
            "rmse: sequences must have equal non-zero length");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

}  // namespace thermotwin
