#pragma once

#include <vector>

#include <Eigen/Dense>

#include "thermotwin/nn/params.hpp"

namespace thermotwin {

/// Gate values recorded by a forward pass, [layer][step], each width x B.
struct GruTrace {
    std::vector<std::vector<Eigen::MatrixXd>> z;
    std::vector<std::vector<Eigen::MatrixXd>> r;
    std::vector<Eigen::MatrixXd> final_hidden;  // per layer
};

/// Stacked GRU with a dense output head.
///
///   z = sig(Wz x + Uz h + bz),  r = sig(Wr x + Ur h + br)
///   c = tanh(Wc x + Uc (r * h) + bc),  h' = (1 - z) * c + z * h
///
/// Hidden states start at zero. The head maps the top layer's last hidden
/// state to the output, with an optional ReLU.
class GruModel {
public:
    GruModel() = default;
    static GruModel create(Eigen::Index input_dim, const std::vector<Eigen::Index>& widths, Eigen::Index output_dim,
                           std::size_t lookback, RngStream& stream, bool output_relu = true);
    static GruModel zeros(Eigen::Index input_dim, const std::vector<Eigen::Index>& widths, Eigen::Index output_dim,
                          std::size_t lookback, bool output_relu = true);

    Eigen::Index input_dim() const { return input_dim_; }
    Eigen::Index output_dim() const { return output_dim_; }
    const std::vector<Eigen::Index>& widths() const { return widths_; }
    std::size_t lookback() const { return lookback_; }
    bool output_relu() const { return output_relu_; }

    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    /// Gate blocks of a layer, in order Wz Uz bz Wr Ur br Wc Uc bc.
    std::size_t block(std::size_t layer, std::size_t which) const { return 9 * layer + which; }
    std::size_t head_weight() const { return 9 * widths_.size(); }
    std::size_t head_bias() const { return 9 * widths_.size() + 1; }

    FeatureScaler in_scaler;
    FeatureScaler out_scaler;

    /// `seq[t]` is input_dim x B (normalised); returns output_dim x B (normalised).
    /// The sequence length may differ from `lookback` here.
    Eigen::MatrixXd forward_normalized(const std::vector<Eigen::MatrixXd>& seq, GruTrace* trace = nullptr) const;
    /// `window` is lookback x input_dim in raw units.
    Eigen::VectorXd forward(const Eigen::MatrixXd& window) const;

    double loss_and_grad(const std::vector<Eigen::MatrixXd>& seq, const Eigen::MatrixXd& y,
                         const Eigen::VectorXd& weights, Eigen::VectorXd* grad) const;

    void validate() const;

private:
    Eigen::Index input_dim_ = 0;
    Eigen::Index output_dim_ = 0;
    std::vector<Eigen::Index> widths_;
    std::size_t lookback_ = 0;
    bool output_relu_ = true;
    ParameterSet params_;
};

}  // namespace thermotwin
