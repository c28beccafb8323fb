#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "planted.hpp"
#include "thermotwin/core/errors.hpp"
#include "thermotwin/sim/simulator.hpp"
#include "thermotwin/sindy/fit.hpp"
#include "thermotwin/sindy/library.hpp"

using namespace thermotwin;

namespace {

Eigen::VectorXd ols_oracle(const Eigen::MatrixXd& theta, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd g = theta.transpose() * theta;
    return g.llt().solve(theta.transpose() * y);
}

}  // namespace

TEST_CASE("library rows") {
    Eigen::MatrixXd x(1, 2), u(1, 4);
    x << 2, 3;
    u << 1, 0, 0, 0;
    const auto th = build_library(x, u);
    REQUIRE(th.cols() == 7);
    CHECK(th.row(0) == (Eigen::RowVectorXd(7) << 1, 2, 3, 1, 0, 0, 0).finished());
    const auto z = build_library(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(3, 4));
    CHECK(z.col(0).isOnes());
    CHECK(z.rightCols(6).isZero());
    CHECK_THROWS_AS(build_library(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(2, 4)), Error);
}

TEST_CASE("finite difference derivatives") {
    std::vector<double> lin(20), quad(50), sine(1000);
    for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 2.0 * 0.37 * i + 1;
    for (double d : estimate_derivatives(lin, 0.37)) CHECK(d == doctest::Approx(2.0).epsilon(1e-12));
    for (std::size_t i = 0; i < quad.size(); ++i) quad[i] = std::pow(0.1 * i, 2);
    const auto dq = estimate_derivatives(quad, 0.1);
    for (std::size_t i = 0; i < quad.size(); ++i) CHECK(std::abs(dq[i] - 0.2 * i) < 1e-12);
    for (std::size_t i = 0; i < sine.size(); ++i) sine[i] = std::sin(0.01 * i);
    const auto ds = estimate_derivatives(sine, 0.01);
    double err = 0;
    for (std::size_t i = 0; i < sine.size(); ++i) err = std::max(err, std::abs(ds[i] - std::cos(0.01 * i)));
    CHECK(err < 1e-4);
    CHECK_THROWS_AS(estimate_derivatives(std::vector<double>{1, 2}, 0.1), Error);
}

TEST_CASE("stlsq reduces to OLS without threshold or ridge") {
    RngStream rng(4, "ols");
    Eigen::MatrixXd th(200, 5);
    Eigen::VectorXd y(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
        th(i, 0) = 1;
        for (Eigen::Index j = 1; j < 5; ++j) th(i, j) = rng.normal() * j;
        y(i) = rng.normal();
    }
    for (bool norm : {false, true}) {
        const auto r = stlsq_solve(th, y, {0.0, 0.0, 10, norm});
        const auto o = ols_oracle(th, y);
        CHECK((r.coef - o).cwiseAbs().maxCoeff() < 1e-10);
        const double res_r = (th * r.coef - y).norm(), res_o = (th * o - y).norm();
        CHECK(std::abs(res_r - res_o) / res_o < 1e-10);
    }
}

TEST_CASE("stlsq support shrinks monotonically and errors are typed") {
    RngStream rng(5, "mono");
    Eigen::MatrixXd th(300, 8);
    Eigen::VectorXd truth(8);
    truth << 0.5, 0.001, -2, 0.02, 0, 3, 0.004, -0.1;
    for (Eigen::Index i = 0; i < 300; ++i)
        for (Eigen::Index j = 0; j < 8; ++j) th(i, j) = rng.normal();
    Eigen::VectorXd y = th * truth;
    for (Eigen::Index i = 0; i < 300; ++i) y(i) += 0.01 * rng.normal();
    const auto r = stlsq_solve(th, y, {0.05, 0.0, 20, false});
    for (std::size_t k = 1; k < r.support.size(); ++k)
        for (std::size_t j = 0; j < 8; ++j) CHECK((!r.support[k][j] || r.support[k - 1][j]));
    CHECK(r.coef(1) == 0.0);
    CHECK(r.coef(4) == 0.0);
    CHECK(r.coef(2) != 0.0);

    try {
        stlsq_solve(th, y, {100.0, 0.0, 20, false}, 1);
        FAIL("expected empty model");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::empty_model);
    }
    Eigen::MatrixXd dup = th;
    dup.col(3) = dup.col(2);
    try {
        stlsq_solve(dup, y, {0.0, 0.0, 20, false}, 1);
        FAIL("expected singularity");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::singularity);
        CHECK(std::string(e.what()).find("equation 1") != std::string::npos);
    }
    CHECK_NOTHROW(stlsq_solve(dup, y, {0.0, 1e-3, 20, false}, 1));
}

TEST_CASE("planted system recovery") {
    const auto truth = planted::ghx_system();
    const auto grid = TimeGrid::from_span(0, 20, 10001);
    std::vector<Trajectory> trajs;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto [x, u] = planted::simulate(truth, k, grid, Eigen::Vector2d(1.0 + k, -0.5 * k));
        trajs.push_back(planted::as_trajectory(x, u, grid, static_cast<int>(k)));
    }
    const auto m = fit_sindyc({&trajs[0], &trajs[1], &trajs[2]}, {1e-6, 0.0, 20, false});
    CHECK((m.flatten() - truth.flatten()).cwiseAbs().maxCoeff() < 1e-6);

    // One trajectory alone, and four copies of it.
    const auto one = fit_sindyc({&trajs[0]}, {1e-6, 0.0, 20, false});
    CHECK((one.flatten() - truth.flatten()).cwiseAbs().maxCoeff() < 1e-6);
    const auto four = fit_sindyc({&trajs[0], &trajs[0], &trajs[0], &trajs[0]}, {0.0, 0.0, 20, false});
    const auto single = fit_sindyc({&trajs[0]}, {0.0, 0.0, 20, false});
    CHECK((four.flatten() - single.flatten()).cwiseAbs().maxCoeff() < 1e-10);

    // Sparsity under small noise.
    RngStream rng(8, "noise");
    std::vector<Trajectory> noisy = trajs;
    for (auto& t : noisy)
        for (auto& g : t.ghx) {
            g.m_ghx += 1e-9 * rng.normal();
            g.q_ghx += 1e-9 * rng.normal();
        }
    const auto s = fit_sindyc({&noisy[0], &noisy[1], &noisy[2]}, {1e-3, 0.0, 20, false});
    const auto a = s.flatten(), t = truth.flatten();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (t(i) == 0.0) CHECK(a(i) == 0.0);
        else CHECK(a(i) != 0.0);
    }
}

TEST_CASE("flatten layout and round trip") {
    const auto m = planted::ghx_system();
    const auto a = m.flatten();
    REQUIRE(a.size() == 14);
    CHECK(a(0) == m.d(0));
    CHECK(a(1) == m.A(0, 0));
    CHECK(a(3) == m.B(0, 0));
    CHECK(a(7) == m.d(1));
    CHECK(a(13) == m.B(1, 3));
    const auto b = LinearModel::unflatten(a, 2, 4);
    CHECK(b.A == m.A);
    CHECK(b.B == m.B);
    CHECK(b.d == m.d);
    CHECK(LinearModel::from_xi(m.xi(), 2, 4).flatten() == a);
    CHECK_THROWS_AS(LinearModel::unflatten(a.head(13), 2, 4), Error);
}

TEST_CASE("rollout analytic cases") {
    const auto grid = TimeGrid::from_span(0, 5, 51);
    LinearModel z{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(2)};
    const Eigen::Vector2d x0(1.5, -2);
    const auto rz = rollout(z, x0, Eigen::MatrixXd::Ones(51, 4), grid);
    for (Eigen::Index i = 0; i < 51; ++i) CHECK(rz.row(i) == x0.transpose());

    LinearModel e{Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Zero(1, 0), Eigen::VectorXd::Zero(1)};
    for (auto method : {RolloutMethod::exact_hold, RolloutMethod::adaptive}) {
        RolloutConfig rc;
        rc.method = method;
        const auto r = rollout(e, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(51, 0), grid, rc);
        for (Eigen::Index i = 0; i < 51; ++i) {
            const double ex = std::exp(-grid.time(static_cast<std::size_t>(i)));
            CHECK(std::abs(r(i, 0) - ex) <= 1e-12 * 10 + 1e-12 * ex);
        }
    }

    const auto m = planted::ghx_system();
    const Eigen::Vector4d u(0.3, 0.7, 0.5, 0.2);
    const Eigen::MatrixXd uu = u.transpose().replicate(2001, 1);
    const auto g2 = TimeGrid::from_span(0, 100, 2001);
    const Eigen::Vector2d fixed = -m.A.partialPivLu().solve(m.B * u + m.d);
    for (auto method : {RolloutMethod::exact_hold, RolloutMethod::adaptive}) {
        RolloutConfig rc;
        rc.method = method;
        const auto r = rollout(m, Eigen::Vector2d(3, -1), uu, g2, rc);
        CHECK((r.row(2000).transpose() - fixed).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("rollout superposition and divergence") {
    const auto m = planted::ghx_system();
    const auto grid = TimeGrid::from_span(0, 10, 201);
    Eigen::MatrixXd u(201, 4);
    for (Eigen::Index i = 0; i < 201; ++i)
        for (Eigen::Index k = 0; k < 4; ++k) u(i, k) = planted::control(1, k, grid.time(i));
    const Eigen::Vector2d p(1, 2), q(-3, 0.5);
    const double a = 0.3;
    for (auto method : {RolloutMethod::exact_hold, RolloutMethod::adaptive}) {
        RolloutConfig rc;
        rc.method = method;
        const auto rp = rollout(m, p, u, grid, rc), rq = rollout(m, q, u, grid, rc);
        const auto rm = rollout(m, a * p + (1 - a) * q, u, grid, rc);
        CHECK((rm - (a * rp + (1 - a) * rq)).cwiseAbs().maxCoeff() < 1e-8);
    }

    LinearModel b{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Zero(1, 0), Eigen::VectorXd::Zero(1)};
    RolloutConfig rc;
    rc.blowup = 1e6;
    try {
        rollout(b, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(201, 0), grid, rc);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::divergence);
        REQUIRE(e.time());
        CHECK(*e.time() == doctest::Approx(7.0).epsilon(0.01));
    }
}

TEST_CASE("fit on simulator trajectories gives a 14-coefficient GHX model") {
    GeneratorConfig cfg;
    const auto d = generate_dataset(4, 21, TimeGrid::desk_scale(), cfg);
    const auto m = fit_sindyc(d, StlsqConfig::ghx_table1());
    CHECK(m.flatten().size() == 14);
    CHECK(m.flatten().allFinite());
    const auto r = rollout_on(m, d.trajectories[0]);
    CHECK(r.allFinite());

    const auto path = std::filesystem::path(THERMOTWIN_TEST_TMP) / "sindyc.json";
    save_sindyc(path, {m, StlsqConfig::ghx_table1(), {}, d.ids()});
    const auto back = load_sindyc(path);
    CHECK(back.model.flatten() == m.flatten());
    CHECK(back.subset_ids == d.ids());
    CHECK(back.config.normalize_columns == false);
}
