// AC1-AC5: identification, distance, calibration, gradient and physics checks
// against closed-form or independently computed oracles.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <spdlog/fmt/fmt.h>

#include "criteria.hpp"
#include "gradcheck.hpp"
#include "planted.hpp"
#include "thermotwin/mvg/mvg.hpp"
#include "thermotwin/nn/surrogate.hpp"
#include "thermotwin/sim/bed.hpp"
#include "thermotwin/sindy/fit.hpp"

using namespace thermotwin;

namespace acceptance {

namespace {

Eigen::MatrixXd normal_matrix(Eigen::Index r, Eigen::Index c, RngStream& s) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = s.normal();
    return m;
}

}  // namespace

Outcome ac1_planted_recovery() {
    const LinearModel truth = planted::ghx_system();
    const TimeGrid grid = TimeGrid::from_span(0.0, 20.0, 10001);
    std::vector<Trajectory> trajs;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto [x, u] = planted::simulate(truth, k, grid, Eigen::Vector2d(1.0 + 0.5 * k, -0.3 * k));
        trajs.push_back(planted::as_trajectory(x, u, grid, static_cast<int>(k)));
    }
    std::vector<const Trajectory*> ptrs;
    for (const auto& t : trajs) ptrs.push_back(&t);

    // lambda 1e-8, alpha 1e-6 on raw columns
    const LinearModel clean = fit_sindyc(ptrs, StlsqConfig::ghx_table1());
    const double err = (clean.flatten() - truth.flatten()).cwiseAbs().maxCoeff();

    std::vector<Trajectory> noisy = trajs;
    RngStream rng(2024, "ac1/noise");
    for (auto& t : noisy)
        for (auto& g : t.ghx) {
            g.m_ghx += 1e-6 * rng.normal();
            g.q_ghx += 1e-6 * rng.normal();
        }
    std::vector<const Trajectory*> nptrs;
    for (const auto& t : noisy) nptrs.push_back(&t);
    StlsqConfig sparse = StlsqConfig::ghx_table1();
    sparse.threshold = 1e-3;
    const Eigen::VectorXd a = fit_sindyc(nptrs, sparse).flatten();
    const Eigen::VectorXd t = truth.flatten();
    int wrong = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if ((t(i) == 0.0) != (a(i) == 0.0)) ++wrong;

    return {err < 1e-5 && wrong == 0,
            fmt::format("max coefficient error {:.2e} (< 1e-5), zero-pattern mismatches under noise {}", err, wrong)};
}

Outcome ac2_mahalanobis() {
    RngStream s(7, "ac2");
    const Eigen::Index p = 6;
    double id_err = 0.0, affine_err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd a = normal_matrix(p, 1, s), r = normal_matrix(p, 1, s);
        id_err = std::max(id_err, std::abs(mahalanobis(a, r, Eigen::MatrixXd::Identity(p, p)) - (a - r).norm()));

        const Eigen::MatrixXd l = normal_matrix(p, p, s);
        const Eigen::MatrixXd cov = l * l.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
        Eigen::MatrixXd m = normal_matrix(p, p, s);
        m.diagonal().array() += 3.0;  // keep it comfortably invertible
        const Eigen::VectorXd b = normal_matrix(p, 1, s);
        const double d0 = mahalanobis(a, r, cov);
        const double d1 = mahalanobis(m * a + b, m * r + b, m * cov * m.transpose());
        affine_err = std::max(affine_err, std::abs(d1 - d0) / d0);
    }
    // diag(4, 4) with a difference of (2, 6): sqrt(1 + 9)
    const double hand = mahalanobis(Eigen::Vector2d(3, 7), Eigen::Vector2d(1, 1), Eigen::Vector2d(4, 4).asDiagonal());
    const double hand_err = std::abs(hand - std::sqrt(10.0));
    return {id_err <= 1e-12 && affine_err <= 1e-10 && hand_err == 0.0,
            fmt::format("identity vs Euclidean {:.1e}, affine invariance {:.1e}, diagonal case |d - sqrt(10)| = {:.1e}",
                        id_err, affine_err, hand_err)};
}

Outcome ac3_mvg_calibration() {
    // dx/dt = a x + b u + d; coefficient order [d, a, b]
    const Eigen::Vector3d mu(0.5, -1.0, 0.8);
    Eigen::Matrix3d sigma;
    sigma << 0.010, 0.002, 0.000,
             0.002, 0.0025, -0.001,
             0.000, -0.001, 0.0064;
    const Eigen::Matrix3d root = sigma.llt().matrixL();
    const TimeGrid grid = TimeGrid::from_span(0.0, 5.0, 51);
    Eigen::MatrixXd u(51, 1);
    for (Eigen::Index k = 0; k < 51; ++k) u(k, 0) = std::sin(0.9 * grid.time(static_cast<std::size_t>(k)));
    const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);

    std::vector<double> per_seed;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RngStream truth(seed, "ac3/truth");
        const auto draw = [&] { return Eigen::Vector3d(mu + root * normal_matrix(3, 1, truth)); };
        Eigen::MatrixXd ens(400, 3);
        for (Eigen::Index i = 0; i < ens.rows(); ++i) ens.row(i) = draw().transpose();
        const MvgModel m = fit_mvg(ens, std::nullopt, 1, 1);
        RngStream band_stream(seed, "ac3/band");
        const PredictiveBand band = predictive_band(m, x0, u, grid, 5000, band_stream);

        double covered = 0.0;
        const int fresh = 200;
        for (int f = 0; f < fresh; ++f) {
            const LinearModel lm = LinearModel::unflatten(draw(), 1, 1);
            covered += coverage(band, rollout(lm, x0, u, grid))(0);
        }
        per_seed.push_back(covered / fresh);
    }
    const double med = quantile(per_seed, 0.5);
    const auto [lo, hi] = std::minmax_element(per_seed.begin(), per_seed.end());
    return {med >= 0.92 && med <= 0.98,
            fmt::format("median coverage {:.4f} over 20 seeds (range {:.4f}-{:.4f}), required [0.92, 0.98]", med, *lo,
                        *hi)};
}

Outcome ac4_gradients() {
    double worst_fnn = 0.0, worst_gru = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        RngStream s(seed, "ac4");
        FnnModel f = FnnModel::create({4, 7, 5, 2}, s);
        const Eigen::MatrixXd x = normal_matrix(4, 9, s), y = normal_matrix(2, 9, s);
        Eigen::VectorXd g;
        f.loss_and_grad(x, y, {}, &g);
        worst_fnn = std::max(worst_fnn, gradcheck::worst(gradcheck::compare(
                                            f.params(), [&] { return f.loss_and_grad(x, y, {}, nullptr); }, g)));

        for (bool relu : {true, false}) {
            GruModel r = GruModel::create(6, {5, 3}, 2, 7, s, relu);
            std::vector<Eigen::MatrixXd> seq;
            for (int t = 0; t < 7; ++t) seq.push_back(normal_matrix(6, 4, s));
            const Eigen::MatrixXd yr = normal_matrix(2, 4, s).cwiseAbs();
            Eigen::VectorXd gr;
            r.loss_and_grad(seq, yr, {}, &gr);
            worst_gru = std::max(worst_gru, gradcheck::worst(gradcheck::compare(
                                                r.params(), [&] { return r.loss_and_grad(seq, yr, {}, nullptr); }, gr)));
        }
    }
    return {worst_fnn < 1e-4 && worst_gru < 1e-4,
            fmt::format("max relative error FNN {:.2e}, GRU {:.2e} over all parameter blocks (< 1e-4)", worst_fnn,
                        worst_gru)};
}

Outcome ac5_simulator_physics() {
    std::ostringstream detail;
    bool ok = true;

    // (a) no flow, no wall loss: energy is conserved
    {
        BedConfig c;
        BedState s = thermocline_bed(c, 550.0, 430.0);
        s.t_filler.array() -= 5.0;
        const double e0 = total_energy(s, c);
        Dopri5 ode({1e-8, 1e-8});
        for (int k = 0; k < 1000; ++k) s = step_bed(s, 500.0, 0.0, 5.2, c, ode, 5.2 * k);
        const double drift = std::abs(total_energy(s, c) - e0) / e0;
        ok &= drift < 1e-8;
        detail << fmt::format("energy drift {:.1e} (< 1e-8)", drift);
    }
    // (b) constant inlet: the bed settles at the inlet temperature
    {
        BedConfig c;
        c.n_nodes = 20;
        double dev = 0.0;
        for (double m : {1.2, -1.2}) {
            BedState s = uniform_bed(c, 300.0);
            Dopri5 ode({1e-8, 1e-8});
            for (int k = 0; k < 400; ++k) s = step_bed(s, 373.0, m, 100.0, c, ode, 100.0 * k);
            dev = std::max({dev, (s.t_fluid.array() - 373.0).abs().maxCoeff(), (s.t_filler.array() - 373.0).abs().maxCoeff()});
        }
        ok &= dev < 0.01;
        detail << fmt::format(", equilibration error {:.1e} K (< 0.01)", dev);
    }
    // (c) two nodes, hand-derived upwind Schumann right-hand side
    {
        BedConfig c;
        c.radius = 0.7;
        c.height = 1.6;
        c.n_nodes = 2;
        c.porosity = 0.35;
        c.rho_f = 870.0;
        c.cp_f = 2100.0;
        c.rho_r = 3600.0;
        c.cp_r = 900.0;
        c.r_fill = 0.004;
        c.shape_factor = 3.0;
        c.h_c = 55.0;
        BedState s;
        s.t_fluid = Eigen::Vector2d(480.0, 455.0);
        s.t_filler = Eigen::Vector2d(470.0, 462.0);
        const double mflow = -0.9, t_in = 430.0;
        const double area = std::numbers::pi * 0.7 * 0.7;
        const double sr = 3.0 * area * (1.0 - 0.35) / 0.004;
        const double u = 0.9 / (870.0 * 0.35 * area);
        const double dz = 0.8;
        const double kf = 55.0 * sr / (870.0 * 2100.0 * 0.35 * area);
        const double kr = 55.0 * sr / (3600.0 * 900.0 * (1.0 - 0.35) * area);
        // upward flow: node 1 (bottom) sees the inlet, node 0 sees node 1
        const double f0 = -u * (480.0 - 455.0) / dz + kf * (470.0 - 480.0);
        const double f1 = -u * (455.0 - t_in) / dz + kf * (462.0 - 455.0);
        const double r0 = kr * (480.0 - 470.0);
        const double r1 = kr * (455.0 - 462.0);
        const BedState d = bed_rhs(s, t_in, mflow, c);
        const double err = std::max({std::abs(d.t_fluid(0) - f0), std::abs(d.t_fluid(1) - f1),
                                     std::abs(d.t_filler(0) - r0), std::abs(d.t_filler(1) - r1)});
        ok &= err <= 1e-12;
        detail << fmt::format(", two-node RHS error {:.1e} (<= 1e-12)", err);
    }
    // (d) a sharp front without exchange moves u t; coarse and fine grids agree
    {
        const double hot = 550.0, cold = 430.0, horizon = 600.0, mflow = -0.5;
        double cold_len[2] = {0, 0}, dz0 = 0.0, travel = 0.0;
        for (int r = 0; r < 2; ++r) {
            BedConfig c;
            c.h_c = 0.0;
            c.radius = 0.5;
            c.n_nodes = r == 0 ? 40 : 320;
            BedState s = thermocline_bed(c, hot, cold, 0.3, 0.005);
            const auto length = [&](const BedState& b) {
                return (hot * static_cast<double>(b.size()) - b.t_fluid.sum()) * c.dz() / (hot - cold);
            };
            const double l0 = length(s);
            Dopri5 ode({1e-8, 1e-8});
            for (int k = 0; k < 60; ++k) s = step_bed(s, cold, mflow, horizon / 60, c, ode, k * horizon / 60);
            cold_len[r] = length(s) - l0;
            if (r == 0) {
                dz0 = c.dz();
                travel = std::abs(c.superficial_velocity(mflow)) * horizon;
            }
        }
        const double e_exact = std::abs(cold_len[0] - travel), e_grid = std::abs(cold_len[0] - cold_len[1]);
        ok &= e_exact < dz0 && e_grid < dz0 && travel > 5 * dz0;
        detail << fmt::format(", front displacement off by {:.3f} m vs u t and {:.3f} m vs refined grid (node {:.3f} m)",
                              e_exact, e_grid, dz0);
    }
    return {ok, detail.str()};
}

}  // namespace acceptance
