#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "thermotwin/core/rng.hpp"
#include "thermotwin/core/types.hpp"
#include "thermotwin/nn/surrogate.hpp"
#include "thermotwin/sindy/model.hpp"

namespace thermotwin {

/// Anything that predicts the GHX states (n x 2) of a trajectory from its
/// controls and, where needed, its first recorded states.
class Surrogate {
public:
    virtual ~Surrogate() = default;
    virtual Eigen::MatrixXd predict(const Trajectory& traj) const = 0;
    /// Default loops over predict(); failures propagate.
    virtual std::vector<Eigen::MatrixXd> predict_many(const std::vector<const Trajectory*>& trajs) const;
};

class LinearSurrogate final : public Surrogate {
public:
    explicit LinearSurrogate(LinearModel model, RolloutConfig rcfg = {}) : model_(std::move(model)), rcfg_(rcfg) {}
    Eigen::MatrixXd predict(const Trajectory& traj) const override;
    const LinearModel& model() const { return model_; }

private:
    LinearModel model_;
    RolloutConfig rcfg_;
};

class NeuralSurrogate final : public Surrogate {
public:
    explicit NeuralSurrogate(NeuralModel model) : model_(std::move(model)) {}
    Eigen::MatrixXd predict(const Trajectory& traj) const override;
    /// GRU rollouts of equal-length trajectories run as one batch.
    std::vector<Eigen::MatrixXd> predict_many(const std::vector<const Trajectory*>& trajs) const override;
    const NeuralModel& model() const { return model_; }

private:
    NeuralModel model_;
};

/// Per-trajectory predictions; a trajectory whose prediction throws or is
/// non-finite gets std::nullopt and a logged warning.
std::vector<std::optional<Eigen::MatrixXd>> predict_guarded(const Surrogate& s,
                                                            const std::vector<const Trajectory*>& trajs);

struct ChannelRmse {
    double m = 0.0;
    double q = 0.0;
};

/// RMSE pooled over every grid point of every trajectory, per GHX channel.
/// Any failed prediction makes both channels infinite.
ChannelRmse evaluate_rmse(const Surrogate& s, const std::vector<const Trajectory*>& trajs);

/// Std of each GHX channel over all points of `trajs` (1 for a constant channel).
Eigen::Vector2d channel_scales(const std::vector<const Trajectory*>& trajs);

enum class CovarianceSource { pool, selected };

/// `batch` rows of `pool_rows` with the smallest d_M(vectors.row(i), reference)
/// under `cov`, ties by ascending row.
std::vector<std::size_t> rank_by_mahalanobis(const Eigen::MatrixXd& vectors, const std::vector<std::size_t>& pool_rows,
                                             const Eigen::VectorXd& reference, const Eigen::MatrixXd& cov,
                                             std::size_t batch);

/// Covariance from the pool rows or the selected rows (fit_mvg with its
/// shrinkage), then rank_by_mahalanobis.
std::vector<std::size_t> query_mahalanobis(const Eigen::MatrixXd& vectors, const std::vector<std::size_t>& pool_rows,
                                           const std::vector<std::size_t>& selected_rows,
                                           const Eigen::VectorXd& reference, std::size_t batch,
                                           CovarianceSource source, std::optional<double> delta = std::nullopt,
                                           Eigen::Index state_dim = 2, Eigen::Index input_dim = 4);

struct ErrorQueryOptions {
    bool use_m = true;
    bool use_q = true;
    /// Per-channel normalisation; empty = channel_scales(pool).
    std::optional<Eigen::Vector2d> scales;
};

/// Score of each pool trajectory: sum over target channels of RMSE / scale.
/// Failed predictions score +inf.
std::vector<double> error_scores(const Surrogate& s, const std::vector<const Trajectory*>& pool,
                                 const ErrorQueryOptions& opt = {});

/// Ids of the `batch` pool trajectories with the largest error score, ties by
/// ascending id.
std::vector<int> query_by_error(const Surrogate& s, const std::vector<const Trajectory*>& pool, std::size_t batch,
                                const ErrorQueryOptions& opt = {});

/// `batch` distinct entries of `pool`, in draw order.
std::vector<int> query_random(const std::vector<int>& pool, std::size_t batch, RngStream& stream);

}  // namespace thermotwin
