#include "thermotwin/nn/gru.hpp"

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

namespace {

enum Gate : std::size_t { Wz, Uz, bz, Wr, Ur, br, Wc, Uc, bc };

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
    return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

struct StepCache {
    Eigen::MatrixXd x, h_prev, z, r, c;
};

}  // namespace

GruModel GruModel::zeros(Eigen::Index input_dim, const std::vector<Eigen::Index>& widths, Eigen::Index output_dim,
                         std::size_t lookback, bool output_relu) {
    require(input_dim > 0 && output_dim > 0 && !widths.empty(), ErrorKind::shape, "GruModel: bad dimensions");
    require(lookback >= 1, ErrorKind::parameter, "GruModel: lookback must be >= 1");
    GruModel m;
    m.input_dim_ = input_dim;
    m.output_dim_ = output_dim;
    m.widths_ = widths;
    m.lookback_ = lookback;
    m.output_relu_ = output_relu;
    Eigen::Index in = input_dim;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        const Eigen::Index h = widths[l];
        const auto tag = std::to_string(l);
        for (const char* g : {"z", "r", "c"}) {
            m.params_.add(std::string("W") + g + tag, h, in);
            m.params_.add(std::string("U") + g + tag, h, h);
            m.params_.add(std::string("b") + g + tag, h, 1);
        }
        in = h;
    }
    m.params_.add("Wo", output_dim, in);
    m.params_.add("bo", output_dim, 1);
    m.in_scaler = FeatureScaler::identity(input_dim);
    m.out_scaler = FeatureScaler::identity(output_dim);
    return m;
}

GruModel GruModel::create(Eigen::Index input_dim, const std::vector<Eigen::Index>& widths, Eigen::Index output_dim,
                          std::size_t lookback, RngStream& stream, bool output_relu) {
    GruModel m = zeros(input_dim, widths, output_dim, lookback, output_relu);
    for (std::size_t b = 0; b < m.params_.blocks().size(); ++b) {
        // fan-in is the width of the layer the block feeds
        m.params_.init_uniform(b, m.params_.blocks()[b].rows, stream);
    }
    if (output_relu) {
        // keep the head alive at the start: normalised targets are >= 0
        m.params_.mat(m.head_bias()).array() += 0.5;
    }
    return m;
}

Eigen::MatrixXd GruModel::forward_normalized(const std::vector<Eigen::MatrixXd>& seq, GruTrace* trace) const {
    require(!seq.empty(), ErrorKind::shape, "GruModel: empty sequence");
    const Eigen::Index B = seq.front().cols();
    if (trace != nullptr) {
        trace->z.assign(widths_.size(), {});
        trace->r.assign(widths_.size(), {});
        trace->final_hidden.clear();
    }
    std::vector<Eigen::MatrixXd> inputs = seq;
    for (const auto& x : inputs)
        require(x.rows() == input_dim_ && x.cols() == B, ErrorKind::shape, "GruModel: input shape mismatch");
    for (std::size_t l = 0; l < widths_.size(); ++l) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(widths_[l], B);
        const auto P = [&](std::size_t g) { return params_.mat(block(l, g)); };
        const Eigen::VectorXd vbz = P(bz), vbr = P(br), vbc = P(bc);
        for (auto& x : inputs) {
            Eigen::MatrixXd az = P(Wz) * x + P(Uz) * h;
            az.colwise() += vbz;
            Eigen::MatrixXd ar = P(Wr) * x + P(Ur) * h;
            ar.colwise() += vbr;
            const Eigen::MatrixXd z = sigmoid(az), r = sigmoid(ar);
            Eigen::MatrixXd ac = P(Wc) * x + P(Uc) * r.cwiseProduct(h);
            ac.colwise() += vbc;
            const Eigen::MatrixXd c = ac.array().tanh().matrix();
            h = (1.0 - z.array()) * c.array() + z.array() * h.array();
            if (trace != nullptr) {
                trace->z[l].push_back(z);
                trace->r[l].push_back(r);
            }
            x = h;  // becomes the next layer's input
        }
        if (trace != nullptr) trace->final_hidden.push_back(h);
    }
    Eigen::MatrixXd y = params_.mat(head_weight()) * inputs.back();
    y.colwise() += Eigen::VectorXd(params_.mat(head_bias()));
    return output_relu_ ? Eigen::MatrixXd(y.cwiseMax(0.0)) : y;
}

Eigen::VectorXd GruModel::forward(const Eigen::MatrixXd& window) const {
    require(static_cast<std::size_t>(window.rows()) == lookback_, ErrorKind::shape,
            "GruModel: window length " + std::to_string(window.rows()) + " != lookback " + std::to_string(lookback_));
    require(window.cols() == input_dim_, ErrorKind::shape, "GruModel: window feature count mismatch");
    require(window.allFinite(), ErrorKind::numeric, "GruModel: non-finite input");
    const Eigen::MatrixXd wn = in_scaler.transform(window);
    std::vector<Eigen::MatrixXd> seq;
    seq.reserve(lookback_);
    for (Eigen::Index t = 0; t < wn.rows(); ++t) seq.emplace_back(wn.row(t).transpose());
    return out_scaler.inverse_vec(forward_normalized(seq).col(0));
}

double GruModel::loss_and_grad(const std::vector<Eigen::MatrixXd>& seq, const Eigen::MatrixXd& y,
                               const Eigen::VectorXd& weights, Eigen::VectorXd* grad) const {
    require(!seq.empty(), ErrorKind::shape, "GruModel: empty sequence");
    const Eigen::Index B = seq.front().cols();
    require(y.rows() == output_dim_ && y.cols() == B && B > 0, ErrorKind::shape, "GruModel: target shape mismatch");
    const std::size_t T = seq.size();
    const std::size_t L = widths_.size();

    std::vector<std::vector<StepCache>> cache(L, std::vector<StepCache>(T));
    std::vector<Eigen::MatrixXd> inputs = seq;
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(widths_[l], B);
        const auto P = [&](std::size_t g) { return params_.mat(block(l, g)); };
        const Eigen::VectorXd vbz = P(bz), vbr = P(br), vbc = P(bc);
        for (std::size_t t = 0; t < T; ++t) {
            auto& s = cache[l][t];
            require(inputs[t].rows() == (l == 0 ? input_dim_ : widths_[l - 1]) && inputs[t].cols() == B,
                    ErrorKind::shape, "GruModel: input shape mismatch");
            s.x = inputs[t];
            s.h_prev = h;
            Eigen::MatrixXd az = P(Wz) * s.x + P(Uz) * h;
            az.colwise() += vbz;
            Eigen::MatrixXd ar = P(Wr) * s.x + P(Ur) * h;
            ar.colwise() += vbr;
            s.z = sigmoid(az);
            s.r = sigmoid(ar);
            Eigen::MatrixXd ac = P(Wc) * s.x + P(Uc) * s.r.cwiseProduct(h);
            ac.colwise() += vbc;
            s.c = ac.array().tanh().matrix();
            h = (1.0 - s.z.array()) * s.c.array() + s.z.array() * h.array();
            inputs[t] = h;
        }
    }
    const Eigen::MatrixXd& h_top = inputs.back();
    Eigen::MatrixXd pre = params_.mat(head_weight()) * h_top;
    pre.colwise() += Eigen::VectorXd(params_.mat(head_bias()));
    const Eigen::MatrixXd pred = output_relu_ ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
    Eigen::MatrixXd dpred;
    const double loss = weighted_mse(pred, y, weights, dpred);
    if (grad == nullptr) return loss;

    grad->setZero(params_.size());
    Eigen::MatrixXd dpre = output_relu_ ? Eigen::MatrixXd(dpred.cwiseProduct((pre.array() > 0.0).cast<double>().matrix()))
                                        : dpred;
    params_.view(*grad, head_weight()) = dpre * h_top.transpose();
    params_.view(*grad, head_bias()) = dpre.rowwise().sum();

    // dout[t]: gradient flowing into layer l's output h_t from above
    std::vector<Eigen::MatrixXd> dout(T, Eigen::MatrixXd::Zero(widths_.back(), B));
    dout[T - 1] = params_.mat(head_weight()).transpose() * dpre;
    for (std::size_t l = L; l-- > 0;) {
        const auto P = [&](std::size_t g) { return params_.mat(block(l, g)); };
        const auto G = [&](std::size_t g) { return params_.view(*grad, block(l, g)); };
        const Eigen::Index in_dim = l == 0 ? input_dim_ : widths_[l - 1];
        std::vector<Eigen::MatrixXd> din(T, Eigen::MatrixXd::Zero(in_dim, B));
        Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(widths_[l], B);
        for (std::size_t t = T; t-- > 0;) {
            const auto& s = cache[l][t];
            dh += dout[t];
            const Eigen::MatrixXd dz = dh.cwiseProduct(s.h_prev - s.c);
            const Eigen::MatrixXd dc = dh.cwiseProduct((1.0 - s.z.array()).matrix());
            const Eigen::MatrixXd dac = dc.cwiseProduct((1.0 - s.c.array().square()).matrix());
            const Eigen::MatrixXd rh = s.r.cwiseProduct(s.h_prev);
            G(Wc) += dac * s.x.transpose();
            G(Uc) += dac * rh.transpose();
            G(bc) += dac.rowwise().sum();
            const Eigen::MatrixXd drh = P(Uc).transpose() * dac;
            const Eigen::MatrixXd dar = drh.cwiseProduct(s.h_prev).cwiseProduct(
                (s.r.array() * (1.0 - s.r.array())).matrix());
            const Eigen::MatrixXd daz = dz.cwiseProduct((s.z.array() * (1.0 - s.z.array())).matrix());
            G(Wr) += dar * s.x.transpose();
            G(Ur) += dar * s.h_prev.transpose();
            G(br) += dar.rowwise().sum();
            G(Wz) += daz * s.x.transpose();
            G(Uz) += daz * s.h_prev.transpose();
            G(bz) += daz.rowwise().sum();
            din[t] = P(Wz).transpose() * daz + P(Wr).transpose() * dar + P(Wc).transpose() * dac;
            dh = drh.cwiseProduct(s.r) + dh.cwiseProduct(s.z) + P(Uz).transpose() * daz + P(Ur).transpose() * dar;
        }
        dout = std::move(din);
    }
    return loss;
}

void GruModel::validate() const {
    require(!widths_.empty() && lookback_ >= 1, ErrorKind::shape, "GruModel: not initialised");
    require(params_.all_finite(), ErrorKind::numeric, "GruModel: non-finite parameter");
    require(in_scaler.dim() == input_dim_ && out_scaler.dim() == output_dim_, ErrorKind::shape,
            "GruModel: scaler dims");
}

}  // namespace thermotwin
