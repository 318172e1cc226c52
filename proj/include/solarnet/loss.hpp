#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "solarnet/tensor.hpp"

namespace solarnet {

enum class Reduction { mean, sum };

struct FocalLossSpec {
    double gamma = 2.0;
    double alpha = 1.0;
    Reduction reduction = Reduction::mean;

    void validate() const {
        if (gamma < 0) throw std::invalid_argument("focal loss: gamma must be >= 0");
        if (alpha <= 0) throw std::invalid_argument("focal loss: alpha must be > 0");
    }
};

namespace detail {

template <typename T>
void log_softmax_row(const T* z, int k, T* logp) {
    T m = z[0];
    for (int j = 1; j < k; ++j) m = std::max(m, z[j]);
    T acc{};
    for (int j = 0; j < k; ++j) acc += std::exp(z[j] - m);
    const T lse = m + std::log(acc);
    for (int j = 0; j < k; ++j) logp[j] = z[j] - lse;
}

inline void check_targets(const std::vector<int>& targets, int batch, int k) {
    if (static_cast<int>(targets.size()) != batch)
        throw std::invalid_argument("loss: targets length does not match batch size");
    if (batch < 1) throw std::invalid_argument("loss: batch must be >= 1");
    for (int t : targets)
        if (t < 0 || t >= k)
            throw std::out_of_range("loss: target class " + std::to_string(t) +
                                    " outside [0," + std::to_string(k) + ")");
}

}  // namespace detail

// Per-sample focal term: -alpha * (1 - p_t)^gamma * log(p_t), computed from
// log-softmax so confident predictions never round through raw probabilities.
// If `dlogits` is non-null it receives d(reduced loss)/d(logits).
template <typename T>
T focal_loss(const Tensor<T>& logits, const std::vector<int>& targets,
             const FocalLossSpec& spec, Tensor<T>* dlogits = nullptr) {
    spec.validate();
    if (logits.rank() != 2) throw std::invalid_argument("focal_loss: expected (batch,K) logits");
    const int n_b = logits.dim(0), k = logits.dim(1);
    detail::check_targets(targets, n_b, k);
    const T gamma = static_cast<T>(spec.gamma);
    const T alpha = static_cast<T>(spec.alpha);
    if (dlogits) *dlogits = Tensor<T>(logits.shape());
    std::vector<T> logp(static_cast<std::size_t>(k));
    T total{};
    for (int n = 0; n < n_b; ++n) {
        detail::log_softmax_row(&logits.at(n, 0), k, logp.data());
        const int t = targets[static_cast<std::size_t>(n)];
        const T lp = logp[static_cast<std::size_t>(t)];
        const T p = std::exp(lp);
        const T u = -std::expm1(lp);  // 1 - p_t without cancellation
        const T u_pow = (gamma == T{}) ? T{1} : std::pow(u, gamma);
        total += -alpha * u_pow * lp;
        if (dlogits) {
            // d/dz_j = alpha*(delta_tj - s_j)*(gamma*p*u^(gamma-1)*log p - u^gamma)
            T focus{};
            if (gamma > T{} && u > T{}) focus = gamma * p * std::pow(u, gamma - T{1}) * lp;
            const T wgt = focus - u_pow;
            for (int j = 0; j < k; ++j) {
                const T s = std::exp(logp[static_cast<std::size_t>(j)]);
                const T delta = (j == t) ? T{1} : T{0};
                dlogits->at(n, j) += alpha * (delta - s) * wgt;
            }
        }
    }
    if (spec.reduction == Reduction::mean) {
        total /= static_cast<T>(n_b);
        if (dlogits) *dlogits *= T{1} / static_cast<T>(n_b);
    }
    return total;
}

// Standard log-softmax negative log-likelihood, mean reduction. Implemented
// directly (not via the focal path) so the gamma=0 identity stays a genuine
// two-route check.
template <typename T>
T cross_entropy(const Tensor<T>& logits, const std::vector<int>& targets,
                Tensor<T>* dlogits = nullptr) {
    if (logits.rank() != 2) throw std::invalid_argument("cross_entropy: expected (batch,K) logits");
    const int n_b = logits.dim(0), k = logits.dim(1);
    detail::check_targets(targets, n_b, k);
    if (dlogits) *dlogits = Tensor<T>(logits.shape());
    std::vector<T> logp(static_cast<std::size_t>(k));
    T total{};
    const T inv_n = T{1} / static_cast<T>(n_b);
    for (int n = 0; n < n_b; ++n) {
        detail::log_softmax_row(&logits.at(n, 0), k, logp.data());
        const int t = targets[static_cast<std::size_t>(n)];
        total -= logp[static_cast<std::size_t>(t)];
        if (dlogits) {
            for (int j = 0; j < k; ++j) {
                const T s = std::exp(logp[static_cast<std::size_t>(j)]);
                dlogits->at(n, j) = (s - ((j == t) ? T{1} : T{0})) * inv_n;
            }
        }
    }
    return total * inv_n;
}

}  // namespace solarnet
