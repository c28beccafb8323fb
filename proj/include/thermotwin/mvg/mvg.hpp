#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermotwin/core/rng.hpp"
#include "thermotwin/core/types.hpp"
#include "thermotwin/sindy/fit.hpp"

namespace thermotwin {

struct FailedFit {
    std::vector<int> subset_ids;
    std::string reason;
};

/// One row per fitted model, in draw order.
struct CoefficientEnsemble {
    Eigen::MatrixXd vectors;                   // n_models x P
    std::vector<std::vector<int>> subset_ids;  // sorted ids per row
    std::vector<FailedFit> failures;
    Eigen::Index state_dim = 2;
    Eigen::Index input_dim = 4;

    Eigen::Index size() const { return vectors.rows(); }
    Eigen::Index dim() const { return vectors.cols(); }
    /// Rows at the given positions, in that order.
    CoefficientEnsemble subset(const std::vector<std::size_t>& rows) const;
    void validate() const;
};

/// Fits `n_models` SINDyC models on distinct random subsets of `pool`.
/// Failed fits are logged, recorded in `failures` and left out.
CoefficientEnsemble build_ensemble(const std::vector<const Trajectory*>& pool, std::size_t n_models,
                                   std::size_t subset_size, const StlsqConfig& cfg, RngStream& stream,
                                   const SindycOptions& opt = {});

struct MvgModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;       // includes the shrinkage diagonal
    Eigen::VectorXd shrinkage; // diagonal added to the sample covariance
    double delta = 0.0;        // scalar shrinkage when given explicitly, else the relative factor
    Eigen::Index state_dim = 2;
    Eigen::Index input_dim = 4;

    LinearModel mean_model() const { return LinearModel::unflatten(mean, state_dim, input_dim); }
    /// n x P draws from N(mean, cov).
    Eigen::MatrixXd sample(std::size_t n, RngStream& stream) const;
};

/// Default shrinkage diagonal: 1e-8 * S_ii per coefficient. Coefficients with
/// zero spread get 1e-8 * trace(S) / P instead, or 1e-12 when the trace is 0.
Eigen::VectorXd default_shrinkage(const Eigen::MatrixXd& sample_cov);

/// Row mean and unbiased covariance (symmetrised) plus a shrinkage diagonal:
/// delta * I when delta is given, default_shrinkage otherwise.
MvgModel fit_mvg(const CoefficientEnsemble& ensemble, std::optional<double> delta = std::nullopt);
MvgModel fit_mvg(const Eigen::MatrixXd& vectors, std::optional<double> delta = std::nullopt,
                 Eigen::Index state_dim = 2, Eigen::Index input_dim = 4);

/// Cholesky-factorised covariance for repeated distance queries.
class MahalanobisMetric {
public:
    explicit MahalanobisMetric(const Eigen::MatrixXd& cov);
    double distance(const Eigen::VectorXd& a, const Eigen::VectorXd& ref) const;

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

double mahalanobis(const Eigen::VectorXd& a, const Eigen::VectorXd& ref, const Eigen::MatrixXd& cov);

struct PredictiveBand {
    TimeGrid grid;
    Eigen::MatrixXd mean;   // n_steps x n_x
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
    std::size_t n_samples = 0;
    std::size_t n_diverged = 0;
};

/// Monte Carlo band: sample coefficient vectors, roll each out, and take the
/// pointwise mean and linearly interpolated 2.5% / 97.5% quantiles.
PredictiveBand predictive_band(const MvgModel& mvg, const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls,
                               const TimeGrid& grid, std::size_t n_samples, RngStream& stream,
                               const RolloutConfig& rcfg = {});

/// Fraction of grid points with lower <= reference <= upper, per channel.
Eigen::VectorXd coverage(const PredictiveBand& band, const Eigen::MatrixXd& reference);

/// Linearly interpolated quantile of unsorted values (q in [0, 1]).
double quantile(std::vector<double> values, double q);

/// `t, mean_m, lo_m, hi_m, mean_q, lo_q, hi_q` for GHX bands; other state
/// dimensions use numbered suffixes.
void write_band_csv(const std::filesystem::path& path, const PredictiveBand& band);

struct MvgArtifact {
    MvgModel model;
    CoefficientEnsemble ensemble;
    std::uint64_t seed = 0;
    StlsqConfig config;
};

void save_mvg(const std::filesystem::path& path, const MvgArtifact& art);
MvgArtifact load_mvg(const std::filesystem::path& path);

}  // namespace thermotwin
