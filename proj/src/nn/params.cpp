#include "thermotwin/nn/params.hpp"

#include <cmath>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

std::size_t ParameterSet::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    require(rows > 0 && cols > 0, ErrorKind::shape, "ParameterSet: empty block " + name);
    const Eigen::Index off = values_.size();
    blocks_.push_back({std::move(name), rows, cols, off});
    Eigen::VectorXd grown = Eigen::VectorXd::Zero(off + rows * cols);
    grown.head(off) = values_;
    values_ = std::move(grown);
    return blocks_.size() - 1;
}

Eigen::Map<Eigen::MatrixXd> ParameterSet::mat(std::size_t block) {
    const auto& b = blocks_.at(block);
    return {values_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Eigen::MatrixXd> ParameterSet::mat(std::size_t block) const {
    const auto& b = blocks_.at(block);
    return {values_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<Eigen::MatrixXd> ParameterSet::view(Eigen::VectorXd& flat, std::size_t block) const {
    const auto& b = blocks_.at(block);
    require(flat.size() == values_.size(), ErrorKind::shape, "ParameterSet::view: size mismatch");
    return {flat.data() + b.offset, b.rows, b.cols};
}

void ParameterSet::init_uniform(std::size_t block, Eigen::Index fan_in, RngStream& stream) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    auto m = mat(block);
    // column-major fill order is part of the determinism contract
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = bound * (2.0 * stream.uniform() - 1.0);
}

Adam::Adam(Eigen::Index n, AdamConfig cfg)
    : cfg_(cfg), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {
    require(cfg.learning_rate >= 0.0, ErrorKind::config, "Adam: negative learning rate");
}

void Adam::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    require(theta.size() == m_.size() && grad.size() == m_.size(), ErrorKind::shape, "Adam: size mismatch");
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    theta.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
}

FeatureScaler FeatureScaler::fit(const Eigen::MatrixXd& samples, ScalerKind kind) {
    require(samples.rows() > 0, ErrorKind::data, "FeatureScaler::fit: no samples");
    require(samples.allFinite(), ErrorKind::numeric, "FeatureScaler::fit: non-finite sample");
    FeatureScaler s;
    s.kind = kind;
    const Eigen::VectorXd mean = samples.colwise().mean().transpose();
    s.scale.resize(samples.cols());
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
        const double var = (samples.col(c).array() - mean(c)).square().mean();
        const double sd = std::sqrt(var);
        s.scale(c) = sd > 1e-12 * std::max(1.0, std::abs(mean(c))) ? sd : 1.0;
    }
    s.offset = kind == ScalerKind::zscore ? mean : Eigen::VectorXd(samples.colwise().minCoeff().transpose());
    return s;
}

FeatureScaler FeatureScaler::identity(Eigen::Index dim) {
    return {ScalerKind::zscore, Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Eigen::MatrixXd FeatureScaler::transform(const Eigen::MatrixXd& rows) const {
    require(rows.cols() == dim(), ErrorKind::shape, "FeatureScaler: feature count mismatch");
    return (rows.rowwise() - offset.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd FeatureScaler::inverse(const Eigen::MatrixXd& rows) const {
    require(rows.cols() == dim(), ErrorKind::shape, "FeatureScaler: feature count mismatch");
    Eigen::MatrixXd out = rows.array().rowwise() * scale.transpose().array();
    return out.rowwise() + offset.transpose();
}

Eigen::VectorXd FeatureScaler::transform_vec(const Eigen::VectorXd& x) const {
    return (x - offset).cwiseQuotient(scale);
}

Eigen::VectorXd FeatureScaler::inverse_vec(const Eigen::VectorXd& x) const {
    return x.cwiseProduct(scale) + offset;
}

double weighted_mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& y, const Eigen::VectorXd& w,
                    Eigen::MatrixXd& dpred) {
    require(pred.rows() == y.rows() && pred.cols() == y.cols(), ErrorKind::shape, "loss: target shape mismatch");
    require(w.size() == 0 || w.size() == y.cols(), ErrorKind::shape, "loss: weight count mismatch");
    const Eigen::MatrixXd e = pred - y;
    const double wsum = w.size() == 0 ? static_cast<double>(y.cols()) : w.sum();
    require(wsum > 0.0, ErrorKind::data, "loss: weights sum to zero");
    const double denom = wsum * static_cast<double>(y.rows());
    if (w.size() == 0) {
        dpred = 2.0 * e / denom;
        return e.squaredNorm() / denom;
    }
    dpred = 2.0 * (e.array().rowwise() * w.transpose().array()).matrix() / denom;
    return (e.colwise().squaredNorm().transpose().array() * w.array()).sum() / denom;
}

}  // namespace thermotwin
