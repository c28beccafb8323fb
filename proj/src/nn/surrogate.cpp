#include "thermotwin/nn/surrogate.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "thermotwin/core/csv_io.hpp"
#include "thermotwin/core/errors.hpp"

namespace thermotwin {

using nlohmann::json;

namespace {

constexpr Eigen::Index kNx = GhxState::size;
constexpr Eigen::Index kNu = ControlVector::size;

/// Row k = [x(k-1), u(k)]; row 0 repeats x(0).
Eigen::MatrixXd gru_features(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u) {
    Eigen::MatrixXd f(u.rows(), kNx + kNu);
    for (Eigen::Index k = 0; k < u.rows(); ++k) {
        f.row(k).head(kNx) = x.row(k > 0 ? k - 1 : 0);
        f.row(k).tail(kNu) = u.row(k);
    }
    return f;
}

double sample_weight(const Trajectory& t, const TrainConfig& cfg) {
    return t.provenance == Provenance::pseudo_experimental ? cfg.exp_weight : 1.0;
}

void check_finite_loss(double loss, std::size_t epoch, std::size_t batch) {
    if (!std::isfinite(loss)) {
        fail(ErrorKind::divergence,
             "training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch));
    }
}

NeuralModel train_fnn(const std::vector<const Trajectory*>& train, const TrainConfig& cfg, RngStream& stream) {
    NeuralModel m = init_surrogate(NetKind::fnn, cfg, stream);
    const bool next = cfg.fnn_target == FnnTarget::next_step;
    Eigen::Index rows = 0;
    for (const auto* t : train) rows += static_cast<Eigen::Index>(t->size()) - (next ? 1 : 0);
    require(rows > 0, ErrorKind::data, "train_surrogate: no training pairs");
    Eigen::MatrixXd u(rows, kNu), x(rows, kNx);
    Eigen::VectorXd w(rows);
    Eigen::Index r = 0;
    for (const auto* t : train) {
        const Eigen::MatrixXd ut = t->control_matrix(), xt = t->state_matrix(StateSet::ghx);
        const Eigen::Index n = ut.rows() - (next ? 1 : 0);
        u.middleRows(r, n) = ut.topRows(n);
        x.middleRows(r, n) = xt.bottomRows(n);
        w.segment(r, n).setConstant(sample_weight(*t, cfg));
        r += n;
    }
    m.fnn.in_scaler = FeatureScaler::fit(u);
    m.fnn.out_scaler = FeatureScaler::fit(x);
    const Eigen::MatrixXd un = m.fnn.in_scaler.transform(u).transpose();
    const Eigen::MatrixXd xn = m.fnn.out_scaler.transform(x).transpose();
    const bool weighted = (w.array() != 1.0).any();

    Adam opt(m.fnn.params().size(), cfg.adam);
    RngStream shuffle = stream.substream("shuffle");
    const auto n = static_cast<std::size_t>(rows);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        const auto perm = shuffle.permutation(n);
        double total = 0.0;
        std::size_t b = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++b) {
            const std::size_t len = std::min(cfg.batch_size, n - start);
            Eigen::MatrixXd bx(kNu, static_cast<Eigen::Index>(len)), by(kNx, static_cast<Eigen::Index>(len));
            Eigen::VectorXd bw(weighted ? static_cast<Eigen::Index>(len) : 0);
            for (std::size_t i = 0; i < len; ++i) {
                const auto s = static_cast<Eigen::Index>(perm[start + i]);
                bx.col(static_cast<Eigen::Index>(i)) = un.col(s);
                by.col(static_cast<Eigen::Index>(i)) = xn.col(s);
                if (weighted) bw(static_cast<Eigen::Index>(i)) = w(s);
            }
            const double loss = backward_and_step(m.fnn, bx, by, bw, opt);
            check_finite_loss(loss, e, b);
            total += loss * static_cast<double>(len);
        }
        m.epoch_loss.push_back(total / static_cast<double>(n));
    }
    return m;
}

NeuralModel train_gru(const std::vector<const Trajectory*>& train, const TrainConfig& cfg, RngStream& stream) {
    const std::size_t T = cfg.lookback;
    std::string short_ids;
    for (const auto* t : train)
        if (t->size() <= T) short_ids += (short_ids.empty() ? "" : ",") + std::to_string(t->id);
    require(short_ids.empty(), ErrorKind::data,
            "train_surrogate: trajectories not longer than lookback " + std::to_string(T) + ": " + short_ids);

    NeuralModel m = init_surrogate(NetKind::gru, cfg, stream);
    std::vector<Eigen::MatrixXd> feats;
    std::vector<std::pair<std::size_t, Eigen::Index>> samples;  // (trajectory, target row)
    Eigen::Index feat_rows = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto* t = train[i];
        feats.push_back(gru_features(t->state_matrix(StateSet::ghx), t->control_matrix()));
        feat_rows += feats.back().rows() - 1;
        for (auto k = static_cast<Eigen::Index>(T); k < static_cast<Eigen::Index>(t->size());
             k += static_cast<Eigen::Index>(cfg.window_stride))
            samples.emplace_back(i, k);
    }
    Eigen::MatrixXd all_feats(feat_rows, kNx + kNu);
    Eigen::MatrixXd targets(static_cast<Eigen::Index>(samples.size()), kNx);
    Eigen::Index r = 0;
    for (const auto& f : feats) {
        all_feats.middleRows(r, f.rows() - 1) = f.bottomRows(f.rows() - 1);
        r += f.rows() - 1;
    }
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& [i, k] = samples[s];
        targets.row(static_cast<Eigen::Index>(s)) = train[i]->state_matrix(StateSet::ghx).row(k);
    }
    m.gru.in_scaler = FeatureScaler::fit(all_feats);
    m.gru.out_scaler = FeatureScaler::fit(targets, ScalerKind::min_shift);
    for (auto& f : feats) f = m.gru.in_scaler.transform(f);
    const Eigen::MatrixXd yn = m.gru.out_scaler.transform(targets).transpose();
    Eigen::VectorXd w(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t s = 0; s < samples.size(); ++s)
        w(static_cast<Eigen::Index>(s)) = sample_weight(*train[samples[s].first], cfg);
    const bool weighted = (w.array() != 1.0).any();

    Adam opt(m.gru.params().size(), cfg.adam);
    RngStream shuffle = stream.substream("shuffle");
    RngStream noise = stream.substream("noise");
    const std::size_t n = samples.size();
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        const auto perm = shuffle.permutation(n);
        double total = 0.0;
        std::size_t b = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++b) {
            const auto len = static_cast<Eigen::Index>(std::min(cfg.batch_size, n - start));
            std::vector<Eigen::MatrixXd> seq(T, Eigen::MatrixXd(kNx + kNu, len));
            Eigen::MatrixXd by(kNx, len);
            Eigen::VectorXd bw(weighted ? len : 0);
            for (Eigen::Index c = 0; c < len; ++c) {
                const std::size_t s = perm[start + static_cast<std::size_t>(c)];
                const auto& [i, k] = samples[s];
                const auto first = k - static_cast<Eigen::Index>(T) + 1;
                for (std::size_t j = 0; j < T; ++j) {
                    seq[j].col(c) = feats[i].row(first + static_cast<Eigen::Index>(j)).transpose();
                    if (cfg.state_noise > 0.0)
                        for (Eigen::Index q = 0; q < kNx; ++q) seq[j](q, c) += cfg.state_noise * noise.normal();
                }
                by.col(c) = yn.col(static_cast<Eigen::Index>(s));
                if (weighted) bw(c) = w(static_cast<Eigen::Index>(s));
            }
            const double loss = backward_and_step(m.gru, seq, by, bw, opt);
            check_finite_loss(loss, e, b);
            total += loss * static_cast<double>(len);
        }
        m.epoch_loss.push_back(total / static_cast<double>(n));
    }
    return m;
}

json scaler_json(const FeatureScaler& s) {
    return {{"kind", s.kind == ScalerKind::zscore ? "zscore" : "min_shift"},
            {"offset", std::vector<double>(s.offset.data(), s.offset.data() + s.offset.size())},
            {"scale", std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size())}};
}

FeatureScaler scaler_from_json(const json& j) {
    FeatureScaler s;
    s.kind = j.at("kind").get<std::string>() == "zscore" ? ScalerKind::zscore : ScalerKind::min_shift;
    const auto o = j.at("offset").get<std::vector<double>>();
    const auto c = j.at("scale").get<std::vector<double>>();
    require(o.size() == c.size(), ErrorKind::manifest, "scaler: offset/scale length mismatch");
    s.offset = Eigen::Map<const Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size()));
    s.scale = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    return s;
}

}  // namespace

std::string_view to_string(NetKind k) noexcept { return k == NetKind::fnn ? "fnn" : "gru"; }

NetKind net_kind_from_string(std::string_view s) {
    if (s == "fnn") return NetKind::fnn;
    if (s == "gru") return NetKind::gru;
    fail(ErrorKind::config, "unknown network kind '" + std::string(s) + "'");
}

TrainConfig TrainConfig::fnn_table1() { return TrainConfig{}; }

TrainConfig TrainConfig::gru_table1() {
    TrainConfig c;
    c.epochs = 20;
    c.batch_size = 64;
    c.state_noise = 0.3;
    return c;
}

TrainConfig TrainConfig::fnn_desk() {
    TrainConfig c = fnn_table1();
    c.widths = {32, 32};
    return c;
}

TrainConfig TrainConfig::gru_desk() {
    TrainConfig c = gru_table1();
    c.widths = {32, 32};
    c.lookback = 30;
    c.state_noise = 0.6;
    return c;
}

void TrainConfig::validate() const {
    require(adam.learning_rate > 0.0, ErrorKind::config, "TrainConfig: learning rate must be > 0");
    require(epochs >= 1, ErrorKind::config, "TrainConfig: epochs must be >= 1");
    require(batch_size >= 1, ErrorKind::config, "TrainConfig: batch size must be >= 1");
    require(!widths.empty(), ErrorKind::config, "TrainConfig: no hidden layers");
    for (auto w : widths) require(w > 0, ErrorKind::config, "TrainConfig: zero width");
    require(lookback >= 1, ErrorKind::config, "TrainConfig: lookback must be >= 1");
    require(window_stride >= 1, ErrorKind::config, "TrainConfig: window stride must be >= 1");
    require(state_noise >= 0.0, ErrorKind::config, "TrainConfig: negative state noise");
    require(exp_weight >= 0.0, ErrorKind::config, "TrainConfig: negative sample weight");
}

NeuralModel init_surrogate(NetKind kind, const TrainConfig& cfg, RngStream& stream) {
    cfg.validate();
    RngStream init = stream.substream("init");
    NeuralModel m;
    m.kind = kind;
    m.config = cfg;
    if (kind == NetKind::fnn) {
        std::vector<Eigen::Index> dims{kNu};
        dims.insert(dims.end(), cfg.widths.begin(), cfg.widths.end());
        dims.push_back(kNx);
        m.fnn = FnnModel::create(dims, init);
    } else {
        m.gru = GruModel::create(kNx + kNu, cfg.widths, kNx, cfg.lookback, init, true);
    }
    return m;
}

double backward_and_step(FnnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const Eigen::VectorXd& weights, Adam& opt) {
    Eigen::VectorXd g;
    const double loss = model.loss_and_grad(x, y, weights, &g);
    if (std::isfinite(loss)) opt.step(model.params().values(), g);
    return loss;
}

double backward_and_step(GruModel& model, const std::vector<Eigen::MatrixXd>& seq, const Eigen::MatrixXd& y,
                         const Eigen::VectorXd& weights, Adam& opt) {
    Eigen::VectorXd g;
    const double loss = model.loss_and_grad(seq, y, weights, &g);
    if (std::isfinite(loss)) opt.step(model.params().values(), g);
    return loss;
}

NeuralModel train_surrogate(NetKind kind, const std::vector<const Trajectory*>& train, const TrainConfig& cfg,
                            RngStream& stream) {
    require(!train.empty(), ErrorKind::data, "train_surrogate: empty training set");
    cfg.validate();
    NeuralModel m = kind == NetKind::fnn ? train_fnn(train, cfg, stream) : train_gru(train, cfg, stream);
    for (const auto* t : train) m.train_ids.push_back(t->id);
    return m;
}

NeuralModel train_surrogate(NetKind kind, const Dataset& train, const TrainConfig& cfg, RngStream& stream) {
    return train_surrogate(kind, train.all(), cfg, stream);
}

std::size_t warm_rows(const NeuralModel& model) {
    if (model.kind == NetKind::gru) return model.gru.lookback();
    return model.config.fnn_target == FnnTarget::next_step ? 1 : 0;
}

std::vector<Eigen::MatrixXd> predict_trajectories(const NeuralModel& model,
                                                  const std::vector<Eigen::MatrixXd>& controls,
                                                  const std::vector<Eigen::MatrixXd>& warm) {
    require(controls.size() == warm.size(), ErrorKind::shape, "predict: controls/warm count mismatch");
    const std::size_t need = warm_rows(model);
    std::vector<Eigen::MatrixXd> out;
    if (controls.empty()) return out;
    const Eigen::Index n = controls.front().rows();
    Eigen::Index m_warm = warm.front().rows();
    for (std::size_t i = 0; i < controls.size(); ++i) {
        require(controls[i].rows() == n && controls[i].cols() == kNu, ErrorKind::shape,
                "predict: control sequences must share length and have 4 columns");
        require(static_cast<std::size_t>(warm[i].rows()) >= need, ErrorKind::data,
                "predict: warm start needs " + std::to_string(need) + " rows, got " +
                    std::to_string(warm[i].rows()));
        require(warm[i].rows() == m_warm && (warm[i].rows() == 0 || warm[i].cols() == kNx), ErrorKind::shape,
                "predict: warm starts must share length and have 2 columns");
        require(controls[i].allFinite() && warm[i].allFinite(), ErrorKind::numeric, "predict: non-finite input");
    }
    m_warm = std::min(m_warm, n);

    if (model.kind == NetKind::fnn) {
        const bool next = model.config.fnn_target == FnnTarget::next_step;
        for (std::size_t i = 0; i < controls.size(); ++i) {
            Eigen::MatrixXd p(n, kNx);
            if (next) {
                if (n > 1) p.bottomRows(n - 1) = model.fnn.predict_rows(controls[i].topRows(n - 1));
            } else {
                p = model.fnn.predict_rows(controls[i]);
            }
            p.topRows(m_warm) = warm[i].topRows(m_warm);
            out.push_back(std::move(p));
        }
        return out;
    }

    const GruModel& g = model.gru;
    const auto T = static_cast<Eigen::Index>(g.lookback());
    const auto B = static_cast<Eigen::Index>(controls.size());
    std::vector<Eigen::MatrixXd> feats;  // normalised, rows filled as states become known
    for (std::size_t i = 0; i < controls.size(); ++i) {
        Eigen::MatrixXd p(n, kNx);
        p.topRows(m_warm) = warm[i].topRows(m_warm);
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, kNx + kNu);
        f.rightCols(kNu) = controls[i];
        for (Eigen::Index k = 1; k <= m_warm && k < n; ++k) f.block(k, 0, 1, kNx) = p.row(k - 1);
        f = g.in_scaler.transform(f);
        out.push_back(std::move(p));
        feats.push_back(std::move(f));
    }
    for (Eigen::Index t = m_warm; t < n; ++t) {
        std::vector<Eigen::MatrixXd> seq(static_cast<std::size_t>(T), Eigen::MatrixXd(kNx + kNu, B));
        for (Eigen::Index b = 0; b < B; ++b)
            for (Eigen::Index j = 0; j < T; ++j)
                seq[static_cast<std::size_t>(j)].col(b) = feats[static_cast<std::size_t>(b)].row(t - T + 1 + j).transpose();
        const Eigen::MatrixXd y = g.out_scaler.inverse(g.forward_normalized(seq).transpose());
        require(y.allFinite(), ErrorKind::divergence, "predict: non-finite GRU output");
        for (Eigen::Index b = 0; b < B; ++b) {
            auto& p = out[static_cast<std::size_t>(b)];
            p.row(t) = y.row(b);
            if (t + 1 < n) {
                Eigen::VectorXd row(kNx + kNu);
                row << y.row(b).transpose(), controls[static_cast<std::size_t>(b)].row(t + 1).transpose();
                feats[static_cast<std::size_t>(b)].row(t + 1) = g.in_scaler.transform_vec(row).transpose();
            }
        }
    }
    return out;
}

Eigen::MatrixXd predict_trajectory(const NeuralModel& model, const Eigen::MatrixXd& controls,
                                   const Eigen::MatrixXd& warm) {
    return predict_trajectories(model, {controls}, {warm}).front();
}

Eigen::MatrixXd predict_one_step(const NeuralModel& model, const Eigen::MatrixXd& controls,
                                 const Eigen::MatrixXd& states) {
    require(controls.rows() == states.rows(), ErrorKind::shape, "predict_one_step: length mismatch");
    const auto n = controls.rows();
    if (model.kind == NetKind::fnn) {
        return predict_trajectory(model, controls, states.topRows(static_cast<Eigen::Index>(warm_rows(model))));
    }
    const GruModel& g = model.gru;
    const auto T = static_cast<Eigen::Index>(g.lookback());
    Eigen::MatrixXd p = states;
    if (n <= T) return p;
    const Eigen::MatrixXd f = g.in_scaler.transform(gru_features(states, controls));
    const Eigen::Index B = n - T;
    std::vector<Eigen::MatrixXd> seq(static_cast<std::size_t>(T), Eigen::MatrixXd(kNx + kNu, B));
    for (Eigen::Index b = 0; b < B; ++b)
        for (Eigen::Index j = 0; j < T; ++j) seq[static_cast<std::size_t>(j)].col(b) = f.row(b + 1 + j).transpose();
    p.bottomRows(B) = g.out_scaler.inverse(g.forward_normalized(seq).transpose());
    return p;
}

Eigen::MatrixXd predict_on(const NeuralModel& model, const Trajectory& traj) {
    const Eigen::MatrixXd x = traj.state_matrix(StateSet::ghx);
    const auto w = std::min<Eigen::Index>(static_cast<Eigen::Index>(warm_rows(model)), x.rows());
    return predict_trajectory(model, traj.control_matrix(), x.topRows(w));
}

void save_neural(const std::filesystem::path& path, const NeuralModel& model) {
    const auto& c = model.config;
    json j;
    j["kind"] = std::string(to_string(model.kind));
    const ParameterSet& p = model.kind == NetKind::fnn ? model.fnn.params() : model.gru.params();
    if (model.kind == NetKind::fnn) {
        j["arch"] = {{"dims", model.fnn.dims()}, {"activation", "relu"}};
        j["in_scaler"] = scaler_json(model.fnn.in_scaler);
        j["out_scaler"] = scaler_json(model.fnn.out_scaler);
    } else {
        j["arch"] = {{"input_dim", model.gru.input_dim()},
                     {"widths", model.gru.widths()},
                     {"output_dim", model.gru.output_dim()},
                     {"lookback", model.gru.lookback()},
                     {"output_relu", model.gru.output_relu()}};
        j["in_scaler"] = scaler_json(model.gru.in_scaler);
        j["out_scaler"] = scaler_json(model.gru.out_scaler);
    }
    json blocks = json::array();
    for (const auto& b : p.blocks()) blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
    j["blocks"] = blocks;
    j["params"] = std::vector<double>(p.values().data(), p.values().data() + p.size());
    j["config"] = {{"learning_rate", c.adam.learning_rate},
                   {"beta1", c.adam.beta1},
                   {"beta2", c.adam.beta2},
                   {"eps", c.adam.eps},
                   {"epochs", c.epochs},
                   {"batch_size", c.batch_size},
                   {"widths", c.widths},
                   {"lookback", c.lookback},
                   {"window_stride", c.window_stride},
                   {"fnn_target", c.fnn_target == FnnTarget::same_step ? "same_step" : "next_step"},
                   {"state_noise", c.state_noise},
                   {"exp_weight", c.exp_weight},
                   {"seed", c.seed}};
    j["epoch_loss"] = model.epoch_loss;
    j["train_ids"] = model.train_ids;
    write_text_file(path, j.dump(1) + "\n");
}

NeuralModel load_neural(const std::filesystem::path& path) {
    try {
        const json j = json::parse(read_text_file(path));
        NeuralModel m;
        m.kind = net_kind_from_string(j.at("kind").get<std::string>());
        const auto& c = j.at("config");
        auto& cfg = m.config;
        cfg.adam = {c.at("learning_rate").get<double>(), c.at("beta1").get<double>(), c.at("beta2").get<double>(),
                    c.at("eps").get<double>()};
        cfg.epochs = c.at("epochs").get<std::size_t>();
        cfg.batch_size = c.at("batch_size").get<std::size_t>();
        cfg.widths = c.at("widths").get<std::vector<Eigen::Index>>();
        cfg.lookback = c.at("lookback").get<std::size_t>();
        cfg.window_stride = c.at("window_stride").get<std::size_t>();
        cfg.fnn_target = c.at("fnn_target").get<std::string>() == "next_step" ? FnnTarget::next_step
                                                                                : FnnTarget::same_step;
        cfg.state_noise = c.at("state_noise").get<double>();
        cfg.exp_weight = c.at("exp_weight").get<double>();
        cfg.seed = c.at("seed").get<std::uint64_t>();
        const auto& a = j.at("arch");
        ParameterSet* p = nullptr;
        if (m.kind == NetKind::fnn) {
            m.fnn = FnnModel::zeros(a.at("dims").get<std::vector<Eigen::Index>>());
            m.fnn.in_scaler = scaler_from_json(j.at("in_scaler"));
            m.fnn.out_scaler = scaler_from_json(j.at("out_scaler"));
            p = &m.fnn.params();
        } else {
            m.gru = GruModel::zeros(a.at("input_dim").get<Eigen::Index>(), a.at("widths").get<std::vector<Eigen::Index>>(),
                                    a.at("output_dim").get<Eigen::Index>(), a.at("lookback").get<std::size_t>(),
                                    a.at("output_relu").get<bool>());
            m.gru.in_scaler = scaler_from_json(j.at("in_scaler"));
            m.gru.out_scaler = scaler_from_json(j.at("out_scaler"));
            p = &m.gru.params();
        }
        const auto values = j.at("params").get<std::vector<double>>();
        require(static_cast<Eigen::Index>(values.size()) == p->size(), ErrorKind::manifest,
                "load_neural: parameter count does not match the architecture");
        p->values() = Eigen::Map<const Eigen::VectorXd>(values.data(), p->size());
        m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
        m.train_ids = j.at("train_ids").get<std::vector<int>>();
        if (m.kind == NetKind::fnn) m.fnn.validate(); else m.gru.validate();
        return m;
    } catch (const json::exception& e) {
        fail(ErrorKind::manifest, "load_neural: " + path.string() + ": " + e.what());
    }
}

}  // namespace thermotwin
