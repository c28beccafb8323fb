#include "thermotwin/nn/fnn.hpp"

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

namespace {

ParameterSet layout(const std::vector<Eigen::Index>& dims) {
    require(dims.size() >= 2, ErrorKind::shape, "FnnModel: need at least input and output dims");
    ParameterSet p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        p.add("W" + std::to_string(l), dims[l + 1], dims[l]);
        p.add("b" + std::to_string(l), dims[l + 1], 1);
    }
    return p;
}

}  // namespace

FnnModel FnnModel::zeros(const std::vector<Eigen::Index>& dims) {
    FnnModel m;
    m.dims_ = dims;
    m.params_ = layout(dims);
    m.in_scaler = FeatureScaler::identity(dims.front());
    m.out_scaler = FeatureScaler::identity(dims.back());
    return m;
}

FnnModel FnnModel::create(const std::vector<Eigen::Index>& dims, RngStream& stream) {
    FnnModel m = zeros(dims);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        m.params_.init_uniform(2 * l, dims[l], stream);
        m.params_.init_uniform(2 * l + 1, dims[l], stream);
    }
    return m;
}

Eigen::MatrixXd FnnModel::forward_normalized(const Eigen::MatrixXd& x) const {
    require(x.rows() == input_dim(), ErrorKind::shape, "FnnModel: input dimension mismatch");
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layer_count(); ++l) {
        Eigen::MatrixXd z = params_.mat(2 * l) * a;
        z.colwise() += Eigen::VectorXd(params_.mat(2 * l + 1));
        a = l + 1 < layer_count() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
}

Eigen::VectorXd FnnModel::forward(const Eigen::VectorXd& raw) const {
    require(raw.allFinite(), ErrorKind::numeric, "FnnModel: non-finite input");
    const Eigen::VectorXd y = forward_normalized(in_scaler.transform_vec(raw));
    return out_scaler.inverse_vec(y);
}

Eigen::MatrixXd FnnModel::predict_rows(const Eigen::MatrixXd& raw_rows) const {
    require(raw_rows.allFinite(), ErrorKind::numeric, "FnnModel: non-finite input");
    const Eigen::MatrixXd y = forward_normalized(in_scaler.transform(raw_rows).transpose());
    return out_scaler.inverse(y.transpose());
}

double FnnModel::loss_and_grad(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& weights,
                               Eigen::VectorXd* grad) const {
    require(x.rows() == input_dim() && x.cols() == y.cols() && x.cols() > 0, ErrorKind::shape,
            "FnnModel::loss_and_grad: batch shape mismatch");
    const std::size_t L = layer_count();
    std::vector<Eigen::MatrixXd> acts{x};
    std::vector<Eigen::MatrixXd> pre;
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z = params_.mat(2 * l) * acts.back();
        z.colwise() += Eigen::VectorXd(params_.mat(2 * l + 1));
        pre.push_back(z);
        acts.push_back(l + 1 < L ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
    }
    Eigen::MatrixXd delta;
    const double loss = weighted_mse(acts.back(), y, weights, delta);
    if (grad == nullptr) return loss;

    grad->setZero(params_.size());
    for (std::size_t l = L; l-- > 0;) {
        if (l + 1 < L) delta = delta.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
        params_.view(*grad, 2 * l) = delta * acts[l].transpose();
        params_.view(*grad, 2 * l + 1) = delta.rowwise().sum();
        if (l > 0) delta = params_.mat(2 * l).transpose() * delta;
    }
    return loss;
}

void FnnModel::validate() const {
    require(dims_.size() >= 2, ErrorKind::shape, "FnnModel: missing layers");
    for (std::size_t l = 0; l < layer_count(); ++l) {
        const auto& w = params_.blocks()[2 * l];
        require(w.rows == dims_[l + 1] && w.cols == dims_[l], ErrorKind::shape, "FnnModel: inconsistent dims");
    }
    require(params_.all_finite(), ErrorKind::numeric, "FnnModel: non-finite parameter");
    require(in_scaler.dim() == input_dim() && out_scaler.dim() == output_dim(), ErrorKind::shape,
            "FnnModel: scaler dims");
}

}  // namespace thermotwin
