#include "thermotwin/al/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "thermotwin/core/errors.hpp"
#include "thermotwin/mvg/mvg.hpp"

namespace thermotwin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Positions of the k best entries under `before`, a strict order.
template <class Less>
std::vector<std::size_t> top_k(std::size_t n, std::size_t k, Less before) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), before);
    idx.resize(std::min(k, n));
    return idx;
}

}  // namespace

std::vector<Eigen::MatrixXd> Surrogate::predict_many(const std::vector<const Trajectory*>& trajs) const {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(trajs.size());
    for (const auto* t : trajs) out.push_back(predict(*t));
    return out;
}

Eigen::MatrixXd LinearSurrogate::predict(const Trajectory& traj) const {
    return rollout_on(model_, traj, StateSet::ghx, rcfg_);
}

Eigen::MatrixXd NeuralSurrogate::predict(const Trajectory& traj) const { return predict_on(model_, traj); }

std::vector<Eigen::MatrixXd> NeuralSurrogate::predict_many(const std::vector<const Trajectory*>& trajs) const {
    std::vector<Eigen::MatrixXd> out(trajs.size());
    // group by length so each group is one batched rollout
    std::vector<std::size_t> order(trajs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return trajs[a]->size() < trajs[b]->size(); });
    const auto w = static_cast<Eigen::Index>(warm_rows(model_));
    for (std::size_t s = 0; s < order.size();) {
        std::size_t e = s;
        std::vector<Eigen::MatrixXd> u, warm;
        while (e < order.size() && trajs[order[e]]->size() == trajs[order[s]]->size()) {
            const Trajectory& t = *trajs[order[e]];
            u.push_back(t.control_matrix());
            warm.push_back(t.state_matrix(StateSet::ghx).topRows(std::min<Eigen::Index>(w, t.size())));
            ++e;
        }
        auto p = predict_trajectories(model_, u, warm);
        for (std::size_t i = s; i < e; ++i) out[order[i]] = std::move(p[i - s]);
        s = e;
    }
    return out;
}

std::vector<std::optional<Eigen::MatrixXd>> predict_guarded(const Surrogate& s,
                                                            const std::vector<const Trajectory*>& trajs) {
    std::vector<std::optional<Eigen::MatrixXd>> out(trajs.size());
    try {
        auto all = s.predict_many(trajs);
        for (std::size_t i = 0; i < trajs.size(); ++i)
            if (all[i].allFinite()) out[i] = std::move(all[i]);
    } catch (const Error&) {
        // fall back to one at a time to find the culprit
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            try {
                auto p = s.predict(*trajs[i]);
                if (p.allFinite()) out[i] = std::move(p);
            } catch (const Error& e) {
                spdlog::warn("prediction failed on trajectory {}: {}", trajs[i]->id, e.what());
            }
        }
        return out;
    }
    for (std::size_t i = 0; i < trajs.size(); ++i)
        if (!out[i]) spdlog::warn("non-finite prediction on trajectory {}", trajs[i]->id);
    return out;
}

ChannelRmse evaluate_rmse(const Surrogate& s, const std::vector<const Trajectory*>& trajs) {
    require(!trajs.empty(), ErrorKind::data, "evaluate_rmse: no trajectories");
    const auto preds = predict_guarded(s, trajs);
    Eigen::Array2d sq = Eigen::Array2d::Zero();
    double count = 0.0;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        if (!preds[i]) return {kInf, kInf};
        const Eigen::MatrixXd e = *preds[i] - trajs[i]->state_matrix(StateSet::ghx);
        sq += e.colwise().squaredNorm().transpose().array();
        count += static_cast<double>(e.rows());
    }
    const Eigen::Array2d r = (sq / count).sqrt();
    return {r(0), r(1)};
}

Eigen::Vector2d channel_scales(const std::vector<const Trajectory*>& trajs) {
    require(!trajs.empty(), ErrorKind::data, "channel_scales: no trajectories");
    Eigen::Index rows = 0;
    for (const auto* t : trajs) rows += static_cast<Eigen::Index>(t->size());
    Eigen::MatrixXd x(rows, 2);
    Eigen::Index r = 0;
    for (const auto* t : trajs) {
        x.middleRows(r, static_cast<Eigen::Index>(t->size())) = t->state_matrix(StateSet::ghx);
        r += static_cast<Eigen::Index>(t->size());
    }
    Eigen::Vector2d s;
    for (Eigen::Index c = 0; c < 2; ++c) {
        const double mean = x.col(c).mean();
        const double sd = std::sqrt((x.col(c).array() - mean).square().mean());
        s(c) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

std::vector<std::size_t> rank_by_mahalanobis(const Eigen::MatrixXd& vectors, const std::vector<std::size_t>& pool_rows,
                                             const Eigen::VectorXd& reference, const Eigen::MatrixXd& cov,
                                             std::size_t batch) {
    require(!pool_rows.empty(), ErrorKind::data, "query_mahalanobis: empty pool");
    require(batch >= 1, ErrorKind::parameter, "query_mahalanobis: batch must be >= 1");
    require(reference.size() == vectors.cols(), ErrorKind::shape, "query_mahalanobis: reference length mismatch");
    const MahalanobisMetric metric(cov);
    std::vector<double> d(pool_rows.size());
    for (std::size_t i = 0; i < pool_rows.size(); ++i) {
        require(pool_rows[i] < static_cast<std::size_t>(vectors.rows()), ErrorKind::shape,
                "query_mahalanobis: row out of range");
        d[i] = metric.distance(vectors.row(static_cast<Eigen::Index>(pool_rows[i])).transpose(), reference);
    }
    const auto pos = top_k(pool_rows.size(), batch, [&](std::size_t a, std::size_t b) {
        return d[a] < d[b] || (d[a] == d[b] && pool_rows[a] < pool_rows[b]);
    });
    std::vector<std::size_t> out;
    for (auto p : pos) out.push_back(pool_rows[p]);
    return out;
}

std::vector<std::size_t> query_mahalanobis(const Eigen::MatrixXd& vectors, const std::vector<std::size_t>& pool_rows,
                                           const std::vector<std::size_t>& selected_rows,
                                           const Eigen::VectorXd& reference, std::size_t batch,
                                           CovarianceSource source, std::optional<double> delta,
                                           Eigen::Index state_dim, Eigen::Index input_dim) {
    const auto& rows = source == CovarianceSource::pool ? pool_rows : selected_rows;
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), vectors.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        sub.row(static_cast<Eigen::Index>(i)) = vectors.row(static_cast<Eigen::Index>(rows[i]));
    const MvgModel g = fit_mvg(sub, delta, state_dim, input_dim);
    return rank_by_mahalanobis(vectors, pool_rows, reference, g.cov, batch);
}

std::vector<double> error_scores(const Surrogate& s, const std::vector<const Trajectory*>& pool,
                                 const ErrorQueryOptions& opt) {
    require(!pool.empty(), ErrorKind::data, "query_by_error: empty pool");
    require(opt.use_m || opt.use_q, ErrorKind::config, "query_by_error: no target channel");
    const Eigen::Vector2d scale = opt.scales ? *opt.scales : channel_scales(pool);
    const auto preds = predict_guarded(s, pool);
    std::vector<double> score(pool.size(), kInf);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!preds[i]) continue;
        const Eigen::MatrixXd e = *preds[i] - pool[i]->state_matrix(StateSet::ghx);
        const auto n = static_cast<double>(e.rows());
        double v = 0.0;
        if (opt.use_m) v += std::sqrt(e.col(0).squaredNorm() / n) / scale(0);
        if (opt.use_q) v += std::sqrt(e.col(1).squaredNorm() / n) / scale(1);
        score[i] = v;
    }
    return score;
}

std::vector<int> query_by_error(const Surrogate& s, const std::vector<const Trajectory*>& pool, std::size_t batch,
                                const ErrorQueryOptions& opt) {
    require(batch >= 1, ErrorKind::parameter, "query_by_error: batch must be >= 1");
    const auto score = error_scores(s, pool, opt);
    const auto pos = top_k(pool.size(), batch, [&](std::size_t a, std::size_t b) {
        return score[a] > score[b] || (score[a] == score[b] && pool[a]->id < pool[b]->id);
    });
    std::vector<int> ids;
    for (auto p : pos) ids.push_back(pool[p]->id);
    return ids;
}

std::vector<int> query_random(const std::vector<int>& pool, std::size_t batch, RngStream& stream) {
    require(batch >= 1, ErrorKind::parameter, "query_random: batch must be >= 1");
    const auto idx = stream.sample_without_replacement(pool.size(), std::min(batch, pool.size()));
    std::vector<int> ids;
    for (auto i : idx) ids.push_back(pool[i]);
    return ids;
}

}  // namespace thermotwin
