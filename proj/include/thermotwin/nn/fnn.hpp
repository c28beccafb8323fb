#pragma once

#include <vector>

#include <Eigen/Dense>

#include "thermotwin/nn/params.hpp"

namespace thermotwin {

/// Fully connected network with ReLU between hidden layers and a linear
/// output layer. Batches are passed as columns.
class FnnModel {
public:
    FnnModel() = default;
    /// `dims` = {in, hidden..., out}; weights U(+-1/sqrt(fan_in)), biases likewise.
    static FnnModel create(const std::vector<Eigen::Index>& dims, RngStream& stream);
    /// All parameters zero (useful for hand-built networks).
    static FnnModel zeros(const std::vector<Eigen::Index>& dims);

    const std::vector<Eigen::Index>& dims() const { return dims_; }
    Eigen::Index input_dim() const { return dims_.front(); }
    Eigen::Index output_dim() const { return dims_.back(); }
    std::size_t layer_count() const { return dims_.size() - 1; }

    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer) { return params_.mat(2 * layer); }
    Eigen::Map<Eigen::MatrixXd> bias(std::size_t layer) { return params_.mat(2 * layer + 1); }

    FeatureScaler in_scaler;
    FeatureScaler out_scaler;

    /// in x B normalised inputs -> out x B normalised outputs.
    Eigen::MatrixXd forward_normalized(const Eigen::MatrixXd& x) const;
    /// Raw input in, de-normalised output out.
    Eigen::VectorXd forward(const Eigen::VectorXd& raw) const;
    /// Rows are samples, raw units both ways.
    Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& raw_rows) const;

    /// Weighted MSE over normalised targets (out x B). `weights` may be empty
    /// (all ones). When `grad` is given it receives dLoss/dtheta.
    double loss_and_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& weights,
                         Eigen::VectorXd* grad) const;

    void validate() const;

private:
    std::vector<Eigen::Index> dims_;
    ParameterSet params_;
};

}  // namespace thermotwin
