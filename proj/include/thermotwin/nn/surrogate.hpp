#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "thermotwin/core/rng.hpp"
#include "thermotwin/core/types.hpp"
#include "thermotwin/nn/fnn.hpp"
#include "thermotwin/nn/gru.hpp"

namespace thermotwin {

enum class NetKind { fnn, gru };
std::string_view to_string(NetKind k) noexcept;
NetKind net_kind_from_string(std::string_view s);

/// What the FNN is asked to reproduce from u(t).
enum class FnnTarget { same_step, next_step };

struct TrainConfig {
    AdamConfig adam;
    std::size_t epochs = 40;
    std::size_t batch_size = 256;
    std::vector<Eigen::Index> widths{128, 128};
    std::size_t lookback = 120;  // GRU only
    /// Use every k-th GRU training window (1 = all of them).
    std::size_t window_stride = 1;
    FnnTarget fnn_target = FnnTarget::same_step;
    /// Std of Gaussian noise added to the past-state GRU features while
    /// training, in normalised units (0 = off).
    double state_noise = 0.0;
    /// Loss weight of pseudo-experimental samples relative to simulated ones.
    double exp_weight = 1.0;
    std::uint64_t seed = 0;

    static TrainConfig fnn_table1();
    static TrainConfig gru_table1();
    /// Widths 32, lookback 30.
    static TrainConfig fnn_desk();
    static TrainConfig gru_desk();
    void validate() const;
};

struct NeuralModel {
    NetKind kind = NetKind::fnn;
    FnnModel fnn;
    GruModel gru;
    TrainConfig config;
    std::vector<double> epoch_loss;
    std::vector<int> train_ids;
};

/// Builds a fresh network for `kind` from the init substream of `stream`.
NeuralModel init_surrogate(NetKind kind, const TrainConfig& cfg, RngStream& stream);

/// One Adam step on a batch; returns the loss before the step.
double backward_and_step(FnnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const Eigen::VectorXd& weights, Adam& opt);
double backward_and_step(GruModel& model, const std::vector<Eigen::MatrixXd>& seq, const Eigen::MatrixXd& y,
                         const Eigen::VectorXd& weights, Adam& opt);

/// FNN pairs u(t) -> x(t) (or x(t+1)); GRU windows of [x(k-1), u(k)] for
/// k = t-lookback+1..t -> x(t). Scalers come from the training pairs.
NeuralModel train_surrogate(NetKind kind, const std::vector<const Trajectory*>& train, const TrainConfig& cfg,
                            RngStream& stream);
NeuralModel train_surrogate(NetKind kind, const Dataset& train, const TrainConfig& cfg, RngStream& stream);

/// Free-running prediction of the GHX states. `warm` holds true states for
/// the first rows: at least `lookback` rows for the GRU, one row for the
/// next-step FNN, none for the same-step FNN. Warm rows are copied through.
Eigen::MatrixXd predict_trajectory(const NeuralModel& model, const Eigen::MatrixXd& controls,
                                   const Eigen::MatrixXd& warm);
/// Same, over several equal-length sequences at once.
std::vector<Eigen::MatrixXd> predict_trajectories(const NeuralModel& model,
                                                  const std::vector<Eigen::MatrixXd>& controls,
                                                  const std::vector<Eigen::MatrixXd>& warm);
/// Teacher-forced one-step predictions from the true `states`.
Eigen::MatrixXd predict_one_step(const NeuralModel& model, const Eigen::MatrixXd& controls,
                                 const Eigen::MatrixXd& states);
/// Warm rows needed by `model`.
std::size_t warm_rows(const NeuralModel& model);
/// predict_trajectory with the warm start taken from `traj` itself.
Eigen::MatrixXd predict_on(const NeuralModel& model, const Trajectory& traj);

void save_neural(const std::filesystem::path& path, const NeuralModel& model);
NeuralModel load_neural(const std::filesystem::path& path);

}  // namespace thermotwin
