#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermotwin/al/query.hpp"
#include "thermotwin/mvg/mvg.hpp"
#include "thermotwin/nn/surrogate.hpp"
#include "thermotwin/sindy/fit.hpp"

namespace thermotwin {

enum class Family { mvg, sindyc, fnn, gru };
enum class StrategyKind { mahalanobis, prediction_error, random };
/// Which RMSE drives early stopping and the round-count comparisons.
enum class AlTarget { eval, experiment };

std::string_view to_string(Family f) noexcept;
std::string_view to_string(StrategyKind s) noexcept;
std::string_view to_string(AlTarget t) noexcept;
std::string_view to_string(CovarianceSource c) noexcept;
Family family_from_string(std::string_view s);
StrategyKind strategy_from_string(std::string_view s);
AlTarget target_from_string(std::string_view s);
CovarianceSource covariance_source_from_string(std::string_view s);

struct AlConfig {
    Family family = Family::mvg;
    StrategyKind strategy = StrategyKind::mahalanobis;
    CovarianceSource covariance_source = CovarianceSource::pool;
    AlTarget target = AlTarget::eval;
    std::size_t init_size = 20;
    std::size_t batch = 10;
    std::size_t max_rounds = 10;
    bool early_stop = true;
    std::size_t patience = 5;
    double min_improvement = 0.01;  // relative
    ErrorQueryOptions error_query;
    StlsqConfig stlsq = StlsqConfig::ghx_table1();
    SindycOptions sindy;
    RolloutConfig rollout;
    std::optional<double> mvg_delta;
    TrainConfig train = TrainConfig::fnn_desk();

    /// Paper-inspired defaults per family: 20 models / 10 per round for MvG,
    /// 4 trajectories / 5 per round otherwise.
    static AlConfig defaults(Family f);
    void validate() const;
};

/// Inputs shared by both arms of a comparison. Trajectory branches draw from
/// `pool`; the MvG branch draws rows of `ensemble`.
struct AlData {
    std::vector<const Trajectory*> pool;
    std::vector<const Trajectory*> eval;
    const Trajectory* experiment = nullptr;
    const CoefficientEnsemble* ensemble = nullptr;
    Eigen::VectorXd reference;  // experiment-model coefficients for the MvG branch
};

struct AlRecord {
    std::size_t round = 0;
    std::size_t n_selected = 0;
    double rmse_m = 0.0;
    double rmse_q = 0.0;
    double rmse_exp_m = 0.0;  // NaN without an experiment trajectory
    double rmse_exp_q = 0.0;
    double wall_s = 0.0;
    double cum_wall_s = 0.0;
    bool failed = false;
    std::vector<int> added;  // trajectory ids or ensemble rows
};

struct AlHistory {
    Family family = Family::mvg;
    StrategyKind strategy = StrategyKind::random;
    AlTarget target = AlTarget::eval;
    Eigen::Vector2d scales = Eigen::Vector2d::Ones();  // target-set channel std
    std::vector<AlRecord> records;
    std::vector<int> selected;
    std::string stop_reason;

    /// RMSE_m / scale_m + RMSE_q / scale_q on the target set.
    double score(const AlRecord& r) const;
    double final_score() const { return score(records.back()); }
    /// Selected count of the first record whose score is <= `threshold`.
    std::optional<std::size_t> selected_to_reach(double threshold) const;
    double total_wall() const;
};

/// Round 0 fits the initial set; each later round queries a batch, refits and
/// evaluates. Stops after `max_rounds`, when the pool is exhausted, or when
/// the best score has not improved by more than `min_improvement` for
/// `patience` rounds. A failed refit keeps the previous model.
///
/// The initial set comes from root.substream("init") and is shared by every
/// arm; queries and training use root.substream(arm).
AlHistory run_al_loop(const AlConfig& cfg, const AlData& data, const RngStream& root, std::string_view arm);

struct ArmPair {
    AlHistory al;
    AlHistory random;
};

/// AL arm as configured plus a random arm with the same settings.
ArmPair run_pair(const AlConfig& cfg, const AlData& data, const RngStream& root);

/// `round,n_selected,rmse_m,rmse_q,rmse_exp_m,rmse_exp_q,wall_s,cum_wall_s`
void write_history_csv(const std::filesystem::path& path, const AlHistory& h, bool include_wall = true);
std::vector<AlRecord> read_history_csv(const std::filesystem::path& path);

}  // namespace thermotwin
