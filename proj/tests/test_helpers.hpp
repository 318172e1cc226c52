#pragma once

#include <cmath>
#include <functional>

#include "solarnet/rng.hpp"
#include "solarnet/tensor.hpp"

// Central-difference gradient of a scalar function of one tensor, compared
// against an analytic gradient. Returns the worst relative error over all
// entries, with a small absolute floor to keep near-zero entries meaningful.
template <typename T>
double max_relative_gradient_error(
    solarnet::Tensor<T>& x,
    const std::function<T()>& loss_fn,
    const solarnet::Tensor<T>& analytic,
    T step = static_cast<T>(1e-3)) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T saved = x[i];
        x[i] = saved + step;
        const T up = loss_fn();
        x[i] = saved - step;
        const T down = loss_fn();
        x[i] = saved;
        const double fd = static_cast<double>(up - down) / (2.0 * static_cast<double>(step));
        const double an = static_cast<double>(analytic[i]);
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    return worst;
}

template <typename T>
solarnet::Tensor<T> random_tensor(const std::vector<int>& shape, solarnet::Rng& rng,
                                  double lo = -1.0, double hi = 1.0) {
    solarnet::Tensor<T> t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
    return t;
}
