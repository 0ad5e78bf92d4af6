#pragma once

#include "layercut/math.hpp"

namespace layercut {

/// Adam with beta = (0.9, 0.999), eps = 1e-8, zero weight decay.
class AdamState {
public:
    explicit AdamState(Eigen::Index n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps), m_(VecX::Zero(n)), v_(VecX::Zero(n)) {}

    void step(VecX& params, const VecX& grad, double lr) {
        require(params.size() == m_.size() && grad.size() == m_.size(), "AdamState: size mismatch");
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_.array().matrix() + (1.0 - beta2_) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        params.array() -=
            lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
    }

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    VecX m_, v_;
};

}  // namespace layercut
