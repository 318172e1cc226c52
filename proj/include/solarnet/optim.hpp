#pragma once

#include <cmath>
#include <vector>

#include "solarnet/nn.hpp"
#include "solarnet/schedule.hpp"
#include "solarnet/tensor.hpp"

namespace solarnet {

// Adaptive moments with decoupled weight decay. Operates on the parameter
// refs a model's visitor exposes; visiting order fixes the update order, so
// runs are bit-reproducible.
template <typename T>
class AdamW {
public:
    AdamW(std::vector<nn::ParamRef<T>> params, OptimizerConfig config)
        : params_(std::move(params)), config_(config) {
        config_.validate();
        for (const auto& p : params_) {
            m_.emplace_back(p.value->shape());
            v_.emplace_back(p.value->shape());
        }
    }

    void set_lr(double lr) { config_.lr = lr; }
    double lr() const { return config_.lr; }

    void zero_grad() {
        for (auto& p : params_)
            if (p.grad) p.grad->fill(T{});
    }

    void step() {
        ++t_;
        const T lr = static_cast<T>(config_.lr);
        const T b1 = static_cast<T>(config_.beta1);
        const T b2 = static_cast<T>(config_.beta2);
        const T eps = static_cast<T>(config_.eps);
        const T wd = static_cast<T>(config_.weight_decay);
        const T bc1 = T{1} - static_cast<T>(std::pow(config_.beta1, t_));
        const T bc2 = T{1} - static_cast<T>(std::pow(config_.beta2, t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = params_[i];
            if (!p.trainable || !p.grad) continue;
            Tensor<T>& w = *p.value;
            const Tensor<T>& g = *p.grad;
            Tensor<T>& m = m_[i];
            Tensor<T>& v = v_[i];
            for (std::size_t j = 0; j < w.size(); ++j) {
                m[j] = b1 * m[j] + (T{1} - b1) * g[j];
                v[j] = b2 * v[j] + (T{1} - b2) * g[j] * g[j];
                const T mhat = m[j] / bc1;
                const T vhat = v[j] / bc2;
                w[j] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * w[j]);
            }
        }
    }

private:
    std::vector<nn::ParamRef<T>> params_;
    OptimizerConfig config_;
    std::vector<Tensor<T>> m_, v_;
    long t_ = 0;
};

}  // namespace solarnet
