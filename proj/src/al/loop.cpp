#include "thermotwin/al/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "thermotwin/core/csv_io.hpp"
#include "thermotwin/core/errors.hpp"

namespace thermotwin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<const Trajectory*> pick(const std::vector<const Trajectory*>& all, const std::set<int>& ids) {
    std::vector<const Trajectory*> out;
    for (const auto* t : all)
        if (ids.count(t->id) != 0) out.push_back(t);
    return out;
}

std::unique_ptr<Surrogate> fit_trajectory_family(const AlConfig& cfg, const std::vector<const Trajectory*>& train,
                                                 RngStream& stream) {
    switch (cfg.family) {
        case Family::sindyc:
            return std::make_unique<LinearSurrogate>(fit_sindyc(train, cfg.stlsq, cfg.sindy), cfg.rollout);
        case Family::fnn:
            return std::make_unique<NeuralSurrogate>(train_surrogate(NetKind::fnn, train, cfg.train, stream));
        case Family::gru:
            return std::make_unique<NeuralSurrogate>(train_surrogate(NetKind::gru, train, cfg.train, stream));
        case Family::mvg:
            break;
    }
    fail(ErrorKind::config, "fit_trajectory_family: MvG is not a trajectory family");
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& v, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), v.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = v.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

struct Evaluation {
    ChannelRmse eval;
    ChannelRmse exp{kNaN, kNaN};
};

Evaluation evaluate(const Surrogate& s, const AlData& data) {
    Evaluation e;
    e.eval = evaluate_rmse(s, data.eval);
    if (data.experiment != nullptr) e.exp = evaluate_rmse(s, {data.experiment});
    return e;
}

}  // namespace

std::string_view to_string(Family f) noexcept {
    switch (f) {
        case Family::mvg: return "mvg";
        case Family::sindyc: return "sindyc";
        case Family::fnn: return "fnn";
        case Family::gru: return "gru";
    }
    return "?";
}

std::string_view to_string(StrategyKind s) noexcept {
    switch (s) {
        case StrategyKind::mahalanobis: return "mahalanobis";
        case StrategyKind::prediction_error: return "prediction_error";
        case StrategyKind::random: return "random";
    }
    return "?";
}

std::string_view to_string(AlTarget t) noexcept { return t == AlTarget::eval ? "eval" : "experiment"; }
std::string_view to_string(CovarianceSource c) noexcept { return c == CovarianceSource::pool ? "pool" : "selected"; }

Family family_from_string(std::string_view s) {
    for (Family f : {Family::mvg, Family::sindyc, Family::fnn, Family::gru})
        if (to_string(f) == s) return f;
    fail(ErrorKind::config, "unknown family '" + std::string(s) + "'");
}

StrategyKind strategy_from_string(std::string_view s) {
    for (StrategyKind k : {StrategyKind::mahalanobis, StrategyKind::prediction_error, StrategyKind::random})
        if (to_string(k) == s) return k;
    fail(ErrorKind::config, "unknown strategy '" + std::string(s) + "'");
}

AlTarget target_from_string(std::string_view s) {
    if (s == "eval") return AlTarget::eval;
    if (s == "experiment") return AlTarget::experiment;
    fail(ErrorKind::config, "unknown target '" + std::string(s) + "'");
}

CovarianceSource covariance_source_from_string(std::string_view s) {
    if (s == "pool") return CovarianceSource::pool;
    if (s == "selected") return CovarianceSource::selected;
    fail(ErrorKind::config, "unknown covariance source '" + std::string(s) + "'");
}

AlConfig AlConfig::defaults(Family f) {
    AlConfig c;
    c.family = f;
    if (f == Family::mvg) {
        c.strategy = StrategyKind::mahalanobis;
        c.init_size = 20;
        c.batch = 10;
    } else {
        c.strategy = StrategyKind::prediction_error;
        c.init_size = 4;
        c.batch = 5;
    }
    if (f == Family::gru) c.train = TrainConfig::gru_desk();
    return c;
}

void AlConfig::validate() const {
    require(init_size >= 1, ErrorKind::config, "AlConfig: init_size must be >= 1");
    require(family != Family::mvg || init_size >= 2, ErrorKind::config,
            "AlConfig: the MvG branch needs init_size >= 2 for a covariance");
    require(batch >= 1, ErrorKind::config, "AlConfig: batch must be >= 1");
    require(patience >= 1, ErrorKind::config, "AlConfig: patience must be >= 1");
    require(min_improvement >= 0.0, ErrorKind::config, "AlConfig: negative min_improvement");
    require(strategy != StrategyKind::mahalanobis || family == Family::mvg, ErrorKind::config,
            "AlConfig: the Mahalanobis strategy applies to the MvG branch only");
    train.validate();
}

double AlHistory::score(const AlRecord& r) const {
    if (target == AlTarget::eval) return r.rmse_m / scales(0) + r.rmse_q / scales(1);
    return r.rmse_exp_m / scales(0) + r.rmse_exp_q / scales(1);
}

std::optional<std::size_t> AlHistory::selected_to_reach(double threshold) const {
    for (const auto& r : records)
        if (score(r) <= threshold) return r.n_selected;
    return std::nullopt;
}

double AlHistory::total_wall() const {
    double s = 0.0;
    for (const auto& r : records) s += r.wall_s;
    return s;
}

AlHistory run_al_loop(const AlConfig& cfg, const AlData& data, const RngStream& root, std::string_view arm) {
    cfg.validate();
    require(!data.eval.empty(), ErrorKind::data, "run_al_loop: empty eval set");
    require(cfg.target == AlTarget::eval || data.experiment != nullptr, ErrorKind::config,
            "run_al_loop: experiment target without an experiment trajectory");
    for (const auto* e : data.eval)
        for (const auto* p : data.pool)
            require(e->id != p->id, ErrorKind::data,
                    "run_al_loop: eval trajectory " + std::to_string(e->id) + " is also in the pool");

    AlHistory h;
    h.family = cfg.family;
    h.strategy = cfg.strategy;
    h.target = cfg.target;
    h.scales = cfg.target == AlTarget::eval ? channel_scales(data.eval) : channel_scales({data.experiment});

    RngStream init = root.substream("init");
    RngStream arm_stream = root.substream(arm);
    RngStream query = arm_stream.substream("query");
    const bool mvg = cfg.family == Family::mvg;

    // candidate bookkeeping: ids are trajectory ids or ensemble rows
    std::vector<int> pool_ids;
    if (mvg) {
        require(data.ensemble != nullptr && data.ensemble->size() >= 2, ErrorKind::data,
                "run_al_loop: the MvG branch needs an ensemble of >= 2 models");
        require(cfg.strategy != StrategyKind::mahalanobis || data.reference.size() == data.ensemble->dim(),
                ErrorKind::data, "run_al_loop: reference vector missing or of the wrong length");
        for (Eigen::Index r = 0; r < data.ensemble->size(); ++r) pool_ids.push_back(static_cast<int>(r));
    } else {
        require(!data.pool.empty(), ErrorKind::data, "run_al_loop: empty pool");
        for (const auto* t : data.pool) pool_ids.push_back(t->id);
    }
    const std::size_t n_init = std::min(cfg.init_size, pool_ids.size());
    std::set<int> selected;
    for (auto i : init.sample_without_replacement(pool_ids.size(), n_init)) selected.insert(pool_ids[i]);
    std::vector<int> order(selected.begin(), selected.end());
    const auto remaining = [&] {
        std::vector<int> r;
        for (int id : pool_ids)
            if (selected.count(id) == 0) r.push_back(id);
        return r;
    };
    const auto rows = [](const std::set<int>& s) {
        return std::vector<std::size_t>(s.begin(), s.end());
    };

    // error ranking of fixed candidate models, computed once
    std::vector<double> model_scores;
    if (mvg && cfg.strategy == StrategyKind::prediction_error) {
        const auto targets = data.experiment != nullptr ? std::vector<const Trajectory*>{data.experiment} : data.eval;
        ErrorQueryOptions opt = cfg.error_query;
        if (!opt.scales) opt.scales = h.scales;
        for (Eigen::Index r = 0; r < data.ensemble->size(); ++r) {
            const LinearSurrogate s(LinearModel::unflatten(data.ensemble->vectors.row(r).transpose(),
                                                           data.ensemble->state_dim, data.ensemble->input_dim),
                                    cfg.rollout);
            const auto sc = error_scores(s, targets, opt);
            double tot = 0.0;
            for (double v : sc) tot += v;
            model_scores.push_back(tot);
        }
    }
    const Eigen::Vector2d pool_scales = mvg ? h.scales : channel_scales(data.pool);

    std::unique_ptr<Surrogate> model;
    const auto refit = [&](std::size_t round) {
        // shared across arms so both start from the same model and later
        // rounds differ only in the selected data
        RngStream train = root.substream("train").substream(std::to_string(round));
        if (mvg) {
            const MvgModel g = fit_mvg(rows_of(data.ensemble->vectors, rows(selected)), cfg.mvg_delta,
                                       data.ensemble->state_dim, data.ensemble->input_dim);
            model = std::make_unique<LinearSurrogate>(g.mean_model(), cfg.rollout);
        } else {
            model = fit_trajectory_family(cfg, pick(data.pool, selected), train);
        }
    };

    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    double cum = 0.0;
    for (std::size_t round = 0;; ++round) {
        const auto t0 = Clock::now();
        AlRecord rec;
        rec.round = round;
        if (round > 0) {
            const auto rem = remaining();
            if (rem.empty()) {
                h.stop_reason = "pool exhausted";
                break;
            }
            std::vector<int> add;
            if (cfg.strategy == StrategyKind::random) {
                add = query_random(rem, cfg.batch, query);
            } else if (mvg && cfg.strategy == StrategyKind::mahalanobis) {
                std::vector<std::size_t> pr(rem.begin(), rem.end());
                for (auto r : query_mahalanobis(data.ensemble->vectors, pr, rows(selected), data.reference, cfg.batch,
                                                cfg.covariance_source, cfg.mvg_delta, data.ensemble->state_dim,
                                                data.ensemble->input_dim))
                    add.push_back(static_cast<int>(r));
            } else if (mvg) {
                std::vector<int> r = rem;
                std::stable_sort(r.begin(), r.end(), [&](int a, int b) {
                    return model_scores[static_cast<std::size_t>(a)] < model_scores[static_cast<std::size_t>(b)];
                });
                r.resize(std::min(cfg.batch, r.size()));
                add = r;
            } else {
                std::set<int> rs(rem.begin(), rem.end());
                ErrorQueryOptions opt = cfg.error_query;
                if (!opt.scales) opt.scales = pool_scales;
                add = query_by_error(*model, pick(data.pool, rs), cfg.batch, opt);
            }
            for (int id : add) {
                require(selected.insert(id).second, ErrorKind::data, "run_al_loop: id selected twice");
                order.push_back(id);
            }
            rec.added = add;
        } else {
            rec.added = order;
        }
        try {
            refit(round);
        } catch (const Error& e) {
            if (!model) throw;
            spdlog::warn("{} {} round {}: refit failed ({}); keeping the previous model", to_string(cfg.family), arm,
                         round, e.what());
            rec.failed = true;
        }
        const Evaluation ev = evaluate(*model, data);
        rec.n_selected = selected.size();
        rec.rmse_m = ev.eval.m;
        rec.rmse_q = ev.eval.q;
        rec.rmse_exp_m = ev.exp.m;
        rec.rmse_exp_q = ev.exp.q;
        rec.wall_s = seconds_since(t0);
        cum += rec.wall_s;
        rec.cum_wall_s = cum;
        h.records.push_back(rec);

        const double sc = h.score(rec);
        if (sc < best * (1.0 - cfg.min_improvement)) {
            best = sc;
            stale = 0;
        } else if (round > 0) {
            ++stale;
        }
        if (round >= cfg.max_rounds) {
            h.stop_reason = "max rounds";
            break;
        }
        if (cfg.early_stop && stale >= cfg.patience) {
            h.stop_reason = "no improvement";
            break;
        }
    }
    h.selected = order;
    return h;
}

ArmPair run_pair(const AlConfig& cfg, const AlData& data, const RngStream& root) {
    AlConfig rnd = cfg;
    rnd.strategy = StrategyKind::random;
    return {run_al_loop(cfg, data, root, "al"), run_al_loop(rnd, data, root, "random")};
}

void write_history_csv(const std::filesystem::path& path, const AlHistory& h, bool include_wall) {
    std::ostringstream os;
    os << "round,n_selected,rmse_m,rmse_q,rmse_exp_m,rmse_exp_q";
    if (include_wall) os << ",wall_s,cum_wall_s";
    os << "\n";
    for (const auto& r : h.records) {
        os << r.round << ',' << r.n_selected << ',' << format_double(r.rmse_m) << ',' << format_double(r.rmse_q) << ','
           << format_double(r.rmse_exp_m) << ',' << format_double(r.rmse_exp_q);
        if (include_wall) os << ',' << format_double(r.wall_s) << ',' << format_double(r.cum_wall_s);
        os << "\n";
    }
    write_text_file(path, os.str());
}

std::vector<AlRecord> read_history_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::data, "history csv: empty file " + path.string());
    const bool wall = line == "round,n_selected,rmse_m,rmse_q,rmse_exp_m,rmse_exp_q,wall_s,cum_wall_s";
    require(wall || line == "round,n_selected,rmse_m,rmse_q,rmse_exp_m,rmse_exp_q", ErrorKind::data,
            "history csv: unexpected header in " + path.string());
    std::vector<AlRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        require(f.size() == (wall ? 8u : 6u), ErrorKind::data, "history csv: bad row in " + path.string());
        AlRecord r;
        try {
            r.round = std::stoul(f[0]);
            r.n_selected = std::stoul(f[1]);
            r.rmse_m = std::stod(f[2]);
            r.rmse_q = std::stod(f[3]);
            r.rmse_exp_m = std::stod(f[4]);
            r.rmse_exp_q = std::stod(f[5]);
            if (wall) {
                r.wall_s = std::stod(f[6]);
                r.cum_wall_s = std::stod(f[7]);
            }
        } catch (const std::exception&) {
            fail(ErrorKind::data, "history csv: unparsable row in " + path.string());
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace thermotwin
