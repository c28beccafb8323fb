#include "thermotwin/core/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

namespace {

// Dormand-Prince coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double safety = 0.9;
constexpr double fac_min = 0.2;
constexpr double fac_max = 10.0;
constexpr double beta = 0.04;
constexpr double alpha = 0.2 - beta * 0.75;

}  // namespace

Dopri5::Dopri5(OdeTolerance tol) : tol_(tol) {
    require(tol_.rtol > 0.0 && tol_.atol > 0.0, ErrorKind::parameter, "ode tolerances must be positive");
}

double Dopri5::initial_step(const OdeRhs& f, double t0, const Eigen::VectorXd& y, const Eigen::VectorXd& f0,
                            double dir) {
    const Eigen::ArrayXd sc = tol_.atol + tol_.rtol * y.array().abs();
    const double d0 = std::sqrt((y.array() / sc).square().mean());
    const double d1 = std::sqrt((f0.array() / sc).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    ytmp_ = y + dir * h0 * f0;
    f(t0 + dir * h0, ytmp_, k2_);
    ++stats_.rhs_evals;
    const double d2 = std::sqrt(((k2_ - f0).array() / sc).square().mean()) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
    return std::min(100.0 * h0, h1);
}

void Dopri5::advance(const OdeRhs& f, double t0, double t1, Eigen::VectorXd& y) {
    if (t1 == t0) return;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const double h_floor = tol_.h_min * std::max(1.0, std::max(std::abs(t0), std::abs(t1)));
    const auto n = y.size();
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_, &err_}) v->resize(n);

    f(t0, y, k1_);
    ++stats_.rhs_evals;
    double h = h_ > 0.0 ? h_ : initial_step(f, t0, y, k1_, dir);
    double t = t0;
    std::size_t steps = 0;

    while (dir * (t1 - t) > 0.0) {
        if (++steps > tol_.max_steps) {
            fail(ErrorKind::integration, "step budget exhausted at t=" + std::to_string(t), t);
        }
        bool last = false;
        if (h >= std::abs(t1 - t)) {
            h = std::abs(t1 - t);
            last = true;
        }
        if (h < h_floor && !last) {
            fail(ErrorKind::integration, "step size underflow at t=" + std::to_string(t), t);
        }
        const double hs = dir * h;

        ytmp_ = y + hs * a21 * k1_;
        f(t + c2 * hs, ytmp_, k2_);
        ytmp_ = y + hs * (a31 * k1_ + a32 * k2_);
        f(t + c3 * hs, ytmp_, k3_);
        ytmp_ = y + hs * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        f(t + c4 * hs, ytmp_, k4_);
        ytmp_ = y + hs * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        f(t + c5 * hs, ytmp_, k5_);
        ytmp_ = y + hs * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        f(t + hs, ytmp_, k6_);
        ynew_ = y + hs * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        f(t + hs, ynew_, k7_);
        stats_.rhs_evals += 6;

        err_ = hs * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
        const Eigen::ArrayXd sc = tol_.atol + tol_.rtol * y.array().abs().max(ynew_.array().abs());
        double err = std::sqrt((err_.array() / sc).square().mean());
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
            const double e = std::max(err, 1e-10);
            double fac = safety * std::pow(e, -alpha) * std::pow(err_prev_, beta);
            fac = std::clamp(fac, fac_min, fac_max);
            err_prev_ = std::max(err, 1e-4);
            t = last ? t1 : t + hs;
            y.swap(ynew_);
            k1_.swap(k7_);  // first-same-as-last
            ++stats_.accepted;
            // Keep the unclipped step for the next call so a short final
            // segment does not shrink future steps.
            if (!last) h_ = h * fac;
            else h_ = std::max(h_, h);
            h *= fac;
        } else {
            const double fac = std::max(fac_min, safety * std::pow(err, -0.2));
            h *= fac;
            ++stats_.rejected;
        }
        if (h > span) h = span;
    }
}

}  // namespace thermotwin
