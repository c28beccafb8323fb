#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

#include "gradcheck.hpp"
#include "thermotwin/core/errors.hpp"
#include "thermotwin/core/signal.hpp"
#include "thermotwin/nn/surrogate.hpp"
#include "thermotwin/sim/simulator.hpp"

using namespace thermotwin;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, RngStream& s) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = s.normal();
    return m;
}

double sig(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// Unrolled scalar recurrence for a GRU with ReLU head, one sample.
std::vector<double> gru_scalar(const GruModel& g, const std::vector<std::vector<double>>& seq) {
    std::vector<std::vector<double>> in = seq;
    for (std::size_t l = 0; l < g.widths().size(); ++l) {
        const auto H = static_cast<std::size_t>(g.widths()[l]);
        const auto P = [&](std::size_t w) { return g.params().mat(g.block(l, w)); };
        std::vector<double> h(H, 0.0);
        for (auto& x : in) {
            std::vector<double> z(H), r(H), c(H), nh(H);
            for (std::size_t i = 0; i < H; ++i) {
                double az = P(2)(i, 0), ar = P(5)(i, 0);
                for (std::size_t j = 0; j < x.size(); ++j) {
                    az += P(0)(i, j) * x[j];
                    ar += P(3)(i, j) * x[j];
                }
                for (std::size_t j = 0; j < H; ++j) {
                    az += P(1)(i, j) * h[j];
                    ar += P(4)(i, j) * h[j];
                }
                z[i] = sig(az);
                r[i] = sig(ar);
            }
            for (std::size_t i = 0; i < H; ++i) {
                double ac = P(8)(i, 0);
                for (std::size_t j = 0; j < x.size(); ++j) ac += P(6)(i, j) * x[j];
                for (std::size_t j = 0; j < H; ++j) ac += P(7)(i, j) * r[j] * h[j];
                c[i] = std::tanh(ac);
            }
            for (std::size_t i = 0; i < H; ++i) nh[i] = (1.0 - z[i]) * c[i] + z[i] * h[i];
            h = nh;
            x = h;
        }
    }
    const auto Wo = g.params().mat(g.head_weight());
    const auto bo = g.params().mat(g.head_bias());
    std::vector<double> y(static_cast<std::size_t>(g.output_dim()));
    for (std::size_t i = 0; i < y.size(); ++i) {
        double a = bo(static_cast<Eigen::Index>(i), 0);
        for (std::size_t j = 0; j < in.back().size(); ++j) a += Wo(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * in.back()[j];
        y[i] = g.output_relu() ? std::max(a, 0.0) : a;
    }
    return y;
}

std::vector<Eigen::MatrixXd> random_seq(std::size_t T, Eigen::Index d, Eigen::Index B, RngStream& s) {
    std::vector<Eigen::MatrixXd> seq;
    for (std::size_t t = 0; t < T; ++t) seq.push_back(random_matrix(d, B, s));
    return seq;
}

/// Controls drawn at random, GHX states a fixed quadratic of them.
Trajectory quadratic_trajectory(int id, RngStream& s, std::size_t n = 400) {
    Trajectory t;
    t.grid = TimeGrid::from_span(0.0, static_cast<double>(n - 1), n);
    t.id = id;
    t.tes.assign(n, TesState{});
    for (std::size_t k = 0; k < n; ++k) {
        ControlVector u{s.uniform(), 0.3 + 0.9 * s.uniform(), 400 + 40 * s.uniform(), 410 + 60 * s.uniform()};
        const double a = 2.0 * u.pv006 - 1.0, b = (u.m_pump_out - 0.75) / 0.45;
        t.controls.push_back(u);
        t.ghx.push_back({a * a + 0.5 * b, 1000.0 * (b * b - 0.3 * a * b)});
    }
    return t;
}

TrainConfig small_gru_cfg() {
    TrainConfig c = TrainConfig::gru_desk();
    c.widths = {8, 8};
    c.lookback = 6;
    c.epochs = 2;
    return c;
}

}  // namespace

TEST_CASE("feature scaler round trip and kinds") {
    RngStream s(3, "scaler");
    Eigen::MatrixXd x = random_matrix(200, 3, s);
    x.col(1) = x.col(1) * 1e3 + Eigen::VectorXd::Constant(200, 5e4);
    x.col(2).setConstant(7.0);
    const auto z = FeatureScaler::fit(x);
    const Eigen::MatrixXd xn = z.transform(x);
    CHECK(xn.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::sqrt(xn.col(0).squaredNorm() / 200.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z.scale(2) == 1.0);
    CHECK((z.inverse(xn) - x).cwiseAbs().maxCoeff() <= 1e-12 * x.cwiseAbs().maxCoeff());
    const auto m = FeatureScaler::fit(x, ScalerKind::min_shift);
    CHECK(m.transform(x).minCoeff() >= 0.0);
    CHECK((m.inverse(m.transform(x)) - x).cwiseAbs().maxCoeff() <= 1e-12 * x.cwiseAbs().maxCoeff());
}

TEST_CASE("fnn forward: zero network, hand oracle, rectifier") {
    FnnModel zero = FnnModel::zeros({4, 5, 5, 2});
    zero.out_scaler.offset = Eigen::Vector2d(0.4, 120.0);
    zero.out_scaler.scale = Eigen::Vector2d(2.0, 50.0);
    CHECK(zero.forward(Eigen::Vector4d(1, 2, 3, 4)) == Eigen::Vector2d(0.4, 120.0));

    // 2 -> 2 -> 2 -> 2 with hand values
    FnnModel f = FnnModel::zeros({2, 2, 2, 2});
    f.weight(0) << 1.0, 0.5, -2.0, 1.0;
    f.bias(0) << 0.1, -0.2;
    f.weight(1) << 1.0, 0.0, 0.3, 1.0;
    f.bias(1) << 0.0, 0.05;
    f.weight(2) << 2.0, -1.0, 0.5, 0.25;
    f.bias(2) << 0.01, -0.02;
    const double x0 = 0.7, x1 = -0.4;
    const double h0 = std::max(0.0, 1.0 * x0 + 0.5 * x1 + 0.1);
    const double h1 = std::max(0.0, -2.0 * x0 + 1.0 * x1 - 0.2);
    const double g0 = std::max(0.0, h0);
    const double g1 = std::max(0.0, 0.3 * h0 + h1 + 0.05);
    const Eigen::VectorXd y = f.forward(Eigen::Vector2d(x0, x1));
    CHECK(std::abs(y(0) - (2.0 * g0 - g1 + 0.01)) < 1e-12);
    CHECK(std::abs(y(1) - (0.5 * g0 + 0.25 * g1 - 0.02)) < 1e-12);

    // h1 is negative here, so its outgoing weights must not matter
    FnnModel probe = f;
    probe.weight(1)(0, 1) = 123.0;
    probe.weight(1)(1, 1) = -77.0;
    CHECK((probe.forward(Eigen::Vector2d(x0, x1)) - y).cwiseAbs().maxCoeff() == 0.0);
    // flipping the input sign makes it positive, and then it does
    CHECK((probe.forward(Eigen::Vector2d(-x0, -x1)) - f.forward(Eigen::Vector2d(-x0, -x1))).norm() > 1e-3);

    CHECK_THROWS_AS(f.forward(Eigen::Vector2d(NAN, 0.0)), Error);
}

TEST_CASE("gru forward: zero network, frozen state, scalar oracle, gate bounds") {
    GruModel zero = GruModel::zeros(6, {4, 4}, 2, 5, true);
    std::vector<Eigen::MatrixXd> seq(5, Eigen::MatrixXd::Zero(6, 1));
    CHECK(zero.forward_normalized(seq).isZero(0.0));

    // update gate pinned at 1: the hidden state stays at its zero start
    RngStream s(11, "gru");
    GruModel frozen = GruModel::create(3, {4}, 2, 5, s, true);
    frozen.params().mat(frozen.block(0, 2)).setConstant(800.0);
    frozen.params().mat(frozen.head_bias()) << 0.3, 0.7;
    for (int trial = 0; trial < 3; ++trial) {
        GruTrace tr;
        const Eigen::MatrixXd y = frozen.forward_normalized(random_seq(5, 3, 2, s), &tr);
        CHECK(tr.final_hidden[0].isZero(0.0));
        CHECK(y.col(0) == Eigen::Vector2d(0.3, 0.7));
    }

    GruModel g = GruModel::create(3, {4}, 2, 5, s, true);
    g.params().mat(g.head_bias()).array() += 1.0;  // keep the head active
    const auto seq3 = random_seq(5, 3, 3, s);
    const Eigen::MatrixXd y = g.forward_normalized(seq3);
    for (Eigen::Index b = 0; b < 3; ++b) {
        std::vector<std::vector<double>> one;
        for (const auto& x : seq3) one.emplace_back(x.col(b).data(), x.col(b).data() + 3);
        const auto ref = gru_scalar(g, one);
        CHECK(std::abs(y(0, b) - ref[0]) < 1e-10);
        CHECK(std::abs(y(1, b) - ref[1]) < 1e-10);
    }

    GruModel two = GruModel::create(6, {5, 4}, 2, 8, s, false);
    GruTrace tr;
    auto big = random_seq(8, 6, 16, s);
    for (auto& m : big) m *= 5.0;
    two.forward_normalized(big, &tr);
    for (const auto* gates : {&tr.z, &tr.r})
        for (const auto& layer : *gates)
            for (const auto& m : layer) CHECK((m.array() > 0.0 && m.array() < 1.0).all());

    Eigen::MatrixXd bad(7, 6);
    bad.setZero();
    CHECK_THROWS_AS(two.forward(bad), Error);
    try {
        two.forward(bad);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::shape);
    }
}

TEST_CASE("analytic gradients match central differences") {
    RngStream s(5, "gradcheck");
    FnnModel f = FnnModel::create({4, 6, 5, 2}, s);
    const Eigen::MatrixXd x = random_matrix(4, 7, s), y = random_matrix(2, 7, s);
    const Eigen::VectorXd w = (random_matrix(7, 1, s).array().abs() + 0.5).matrix();
    for (const Eigen::VectorXd& weights : {Eigen::VectorXd(), w}) {
        Eigen::VectorXd g;
        f.loss_and_grad(x, y, weights, &g);
        const auto errs = gradcheck::compare(f.params(), [&] { return f.loss_and_grad(x, y, weights, nullptr); }, g);
        for (const auto& e : errs) CHECK_MESSAGE(e.max_rel < 1e-4, e.name);
    }

    for (bool relu : {true, false}) {
        GruModel g = GruModel::create(6, {5, 4}, 2, 6, s, relu);
        const auto seq = random_seq(6, 6, 5, s);
        const Eigen::MatrixXd yg = random_matrix(2, 5, s).cwiseAbs();
        Eigen::VectorXd grad;
        g.loss_and_grad(seq, yg, {}, &grad);
        const auto errs =
            gradcheck::compare(g.params(), [&] { return g.loss_and_grad(seq, yg, {}, nullptr); }, grad);
        for (const auto& e : errs) CHECK_MESSAGE(e.max_rel < 1e-4, e.name);
        CHECK(grad.norm() > 0.0);
    }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    RngStream s(9, "lr0");
    FnnModel f = FnnModel::create({4, 8, 8, 2}, s);
    const Eigen::VectorXd before = f.params().values();
    Adam opt(f.params().size(), AdamConfig{0.0});
    const double loss = backward_and_step(f, random_matrix(4, 1, s), random_matrix(2, 1, s), {}, opt);
    CHECK(loss > 0.0);
    CHECK(f.params().values() == before);

    GruModel g = GruModel::create(6, {4, 4}, 2, 3, s);
    const Eigen::VectorXd gb = g.params().values();
    Adam gopt(g.params().size(), AdamConfig{0.0});
    backward_and_step(g, random_seq(3, 6, 1, s), random_matrix(2, 1, s).cwiseAbs(), {}, gopt);
    CHECK(g.params().values() == gb);
}

TEST_CASE("fnn training loss decreases on a quadratic target") {
    int decreasing = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RngStream data(seed, "quad");
        std::vector<Trajectory> ts;
        for (int i = 0; i < 5; ++i) ts.push_back(quadratic_trajectory(i, data));
        std::vector<const Trajectory*> ptr;
        for (const auto& t : ts) ptr.push_back(&t);
        TrainConfig cfg = TrainConfig::fnn_desk();
        cfg.epochs = 10;
        RngStream s(seed, "train");
        const auto m = train_surrogate(NetKind::fnn, ptr, cfg, s);
        REQUIRE(m.epoch_loss.size() == 10);
        bool ok = true;
        for (std::size_t e = 1; e < 10; ++e) ok = ok && m.epoch_loss[e] < m.epoch_loss[e - 1];
        decreasing += ok ? 1 : 0;
    }
    CHECK(decreasing >= 3);
}

TEST_CASE("constant trajectory is fitted") {
    Trajectory t;
    const std::size_t n = 1050;
    t.grid = TimeGrid::from_span(0.0, 5460.0, n);
    t.controls.assign(n, ControlVector{0.6, 0.8, 420.0, 450.0});
    t.ghx.assign(n, GhxState{0.32, 5400.0});
    t.tes.assign(n, TesState{});
    for (NetKind kind : {NetKind::fnn, NetKind::gru}) {
        TrainConfig cfg = kind == NetKind::fnn ? TrainConfig::fnn_desk() : small_gru_cfg();
        cfg.epochs = kind == NetKind::fnn ? 40 : 20;
        RngStream s(1, "const");
        const auto m = train_surrogate(kind, {&t}, cfg, s);
        const Eigen::MatrixXd p = predict_one_step(m, t.control_matrix(), t.state_matrix());
        const Eigen::MatrixXd e = p - t.state_matrix();
        CHECK_MESSAGE(e.squaredNorm() / static_cast<double>(e.size()) < 1e-6, to_string(kind));
    }
}

TEST_CASE("same seed gives identical weights and first-epoch loss") {
    RngStream data(2, "quad");
    std::vector<Trajectory> ts{quadratic_trajectory(0, data), quadratic_trajectory(1, data)};
    std::vector<const Trajectory*> ptr{&ts[0], &ts[1]};
    for (NetKind kind : {NetKind::fnn, NetKind::gru}) {
        TrainConfig cfg = kind == NetKind::fnn ? TrainConfig::fnn_desk() : small_gru_cfg();
        cfg.epochs = 1;
        RngStream a(77, "nn"), b(77, "nn"), c(78, "nn");
        const auto ia = init_surrogate(kind, cfg, a), ib = init_surrogate(kind, cfg, b);
        const auto ic = init_surrogate(kind, cfg, c);
        const auto pa = kind == NetKind::fnn ? ia.fnn.params().values() : ia.gru.params().values();
        const auto pb = kind == NetKind::fnn ? ib.fnn.params().values() : ib.gru.params().values();
        const auto pc = kind == NetKind::fnn ? ic.fnn.params().values() : ic.gru.params().values();
        CHECK(pa == pb);
        CHECK(pa != pc);
        RngStream ta(77, "nn"), tb(77, "nn");
        CHECK(train_surrogate(kind, ptr, cfg, ta).epoch_loss == train_surrogate(kind, ptr, cfg, tb).epoch_loss);
    }
}

TEST_CASE("short trajectories and missing warm starts are data errors") {
    RngStream data(4, "quad");
    Trajectory a = quadratic_trajectory(3, data, 5), b = quadratic_trajectory(8, data, 50);
    TrainConfig cfg = small_gru_cfg();
    cfg.lookback = 10;
    RngStream s(1, "x");
    try {
        train_surrogate(NetKind::gru, {&a, &b}, cfg, s);
        FAIL("expected data error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::data);
        CHECK(std::string(e.what()).find(": 3") != std::string::npos);
    }
    const auto m = train_surrogate(NetKind::gru, {&b}, cfg, s);
    try {
        predict_trajectory(m, b.control_matrix(), b.state_matrix().topRows(4));
        FAIL("expected data error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::data);
    }
}

TEST_CASE("prediction modes") {
    RngStream data(6, "quad");
    std::vector<Trajectory> ts{quadratic_trajectory(0, data, 120), quadratic_trajectory(1, data, 120)};
    std::vector<const Trajectory*> ptr{&ts[0], &ts[1]};
    RngStream s(3, "modes");
    TrainConfig fc = TrainConfig::fnn_desk();
    fc.epochs = 2;
    const auto fnn = train_surrogate(NetKind::fnn, ptr, fc, s);
    const Eigen::MatrixXd constant = Eigen::RowVector4d(0.4, 0.9, 420, 450).replicate(50, 1);
    const Eigen::MatrixXd pc = predict_trajectory(fnn, constant, Eigen::MatrixXd(0, 2));
    CHECK((pc.rowwise() - pc.row(0)).cwiseAbs().maxCoeff() == 0.0);

    const auto gru = train_surrogate(NetKind::gru, ptr, small_gru_cfg(), s);
    const Trajectory& t = ts[1];
    const Eigen::MatrixXd x = t.state_matrix(), u = t.control_matrix();
    const Eigen::MatrixXd tf = predict_one_step(gru, u, x);
    const Eigen::MatrixXd last = predict_trajectory(gru, u, x.topRows(x.rows() - 1));
    CHECK((last.row(x.rows() - 1) - tf.row(x.rows() - 1)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(last.topRows(x.rows() - 1) == x.topRows(x.rows() - 1));

    // batched rollout equals one-at-a-time
    const auto both = predict_trajectories(gru, {ts[0].control_matrix(), u},
                                           {ts[0].state_matrix().topRows(6), x.topRows(6)});
    CHECK((both[1] - predict_trajectory(gru, u, x.topRows(6))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("neural artifact round trip") {
    RngStream data(7, "quad");
    Trajectory t = quadratic_trajectory(0, data, 80);
    const std::filesystem::path dir = std::filesystem::path(THERMOTWIN_TEST_TMP) / "nn";
    std::filesystem::create_directories(dir);
    for (NetKind kind : {NetKind::fnn, NetKind::gru}) {
        TrainConfig cfg = kind == NetKind::fnn ? TrainConfig::fnn_desk() : small_gru_cfg();
        cfg.epochs = 1;
        cfg.seed = 99;
        RngStream s(99, "rt");
        const auto m = train_surrogate(kind, {&t}, cfg, s);
        const auto path = dir / (std::string(to_string(kind)) + ".json");
        save_neural(path, m);
        const auto back = load_neural(path);
        CHECK(back.kind == kind);
        CHECK(back.config.seed == 99);
        CHECK(back.train_ids == std::vector<int>{0});
        CHECK(predict_on(back, t) == predict_on(m, t));
    }
    CHECK_THROWS_AS(load_neural(dir / "missing.json"), Error);
}

TEST_CASE("gru free rollout stays within 3x of teacher-forced error") {
    GeneratorConfig gen;
    const TimeGrid grid = TimeGrid::desk_scale();
    const Dataset d = generate_dataset(13, 21, grid, gen);
    std::vector<const Trajectory*> train;
    for (std::size_t i = 0; i < 12; ++i) train.push_back(&d.trajectories[i]);
    TrainConfig cfg = TrainConfig::gru_desk();
    cfg.widths = {16, 16};
    cfg.lookback = 20;
    cfg.epochs = 6;
    cfg.window_stride = 3;
    RngStream s(21, "gru-roll");
    const auto m = train_surrogate(NetKind::gru, train, cfg, s);
    const Trajectory& held = d.trajectories[12];
    const Eigen::MatrixXd x = held.state_matrix();
    const Eigen::MatrixXd free = predict_on(m, held);
    const Eigen::MatrixXd tf = predict_one_step(m, held.control_matrix(), x);
    for (Eigen::Index c = 0; c < 2; ++c) {
        const auto col = [](const Eigen::MatrixXd& a, Eigen::Index j) {
            return std::vector<double>(a.col(j).data(), a.col(j).data() + a.rows());
        };
        const double r_free = rmse(col(free, c), col(x, c));
        const double r_tf = rmse(col(tf, c), col(x, c));
        MESSAGE("channel " << c << " free " << r_free << " teacher-forced " << r_tf);
        CHECK(r_free <= 3.0 * r_tf);
    }
}
