#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermotwin/core/rng.hpp"

namespace thermotwin {

/// All trainable weights of a network packed in one vector, with named
/// matrix blocks viewed in place (column-major).
class ParameterSet {
public:
    struct Block {
        std::string name;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        Eigen::Index offset = 0;
    };

    /// Appends a block and returns its index.
    std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

    Eigen::Map<Eigen::MatrixXd> mat(std::size_t block);
    Eigen::Map<const Eigen::MatrixXd> mat(std::size_t block) const;
    /// Same block layout, in a gradient vector.
    Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& flat, std::size_t block) const;

    Eigen::VectorXd& values() { return values_; }
    const Eigen::VectorXd& values() const { return values_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    Eigen::Index size() const { return values_.size(); }
    bool all_finite() const { return values_.allFinite(); }

    /// U(-b, b) with b = 1/sqrt(fan_in) for the block (fan_in given per block).
    void init_uniform(std::size_t block, Eigen::Index fan_in, RngStream& stream);

private:
    std::vector<Block> blocks_;
    Eigen::VectorXd values_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(Eigen::Index n, AdamConfig cfg);
    void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);
    long steps() const { return t_; }

private:
    AdamConfig cfg_;
    Eigen::VectorXd m_, v_;
    long t_ = 0;
};

enum class ScalerKind { zscore, min_shift };

/// Per-feature affine normalisation, x_n = (x - offset) / scale. The offset is
/// the training mean (zscore) or minimum (min_shift, keeps targets >= 0); the
/// scale is the standard deviation, or 1 for constant features.
struct FeatureScaler {
    ScalerKind kind = ScalerKind::zscore;
    Eigen::VectorXd offset;
    Eigen::VectorXd scale;

    /// Rows are samples.
    static FeatureScaler fit(const Eigen::MatrixXd& samples, ScalerKind kind = ScalerKind::zscore);
    static FeatureScaler identity(Eigen::Index dim);
    Eigen::Index dim() const { return offset.size(); }
    Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const;
    Eigen::MatrixXd inverse(const Eigen::MatrixXd& rows) const;
    Eigen::VectorXd transform_vec(const Eigen::VectorXd& x) const;
    Eigen::VectorXd inverse_vec(const Eigen::VectorXd& x) const;
};

/// Weighted MSE of out x B predictions: sum_b w_b |e_b|^2 / (sum w * out).
/// Empty `weights` means all ones. Writes dLoss/dpred.
double weighted_mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& y, const Eigen::VectorXd& weights,
                    Eigen::MatrixXd& dpred);

}  // namespace thermotwin
