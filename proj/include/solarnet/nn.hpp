#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "solarnet/rng.hpp"
#include "solarnet/tensor.hpp"

namespace solarnet::nn {

enum class Mode { train, eval };

// Named view of one parameter tensor plus its gradient accumulator.
// `trainable` is false for batch-norm running statistics, which still
// serialize into checkpoints but are never touched by the optimizer.
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value;
    Tensor<T>* grad;
    bool trainable;
};

template <typename T>
using ParamVisitor = std::function<void(ParamRef<T>)>;

template <typename T>
inline void init_fan_in_uniform(Tensor<T>& w, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = static_cast<T>(rng.uniform(-bound, bound));
}

// 2-D convolution, zero padding, square kernel.
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad, Rng& rng)
        : in_ch_(in_ch), out_ch_(out_ch), ksize_(ksize), stride_(stride), pad_(pad),
          weight_({out_ch, in_ch, ksize, ksize}),
          bias_({out_ch}),
          dweight_({out_ch, in_ch, ksize, ksize}),
          dbias_({out_ch}) {
        init_fan_in_uniform(weight_, in_ch * ksize * ksize, rng);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        check_input(x);
        input_ = x;
        const int n_b = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int ho = out_dim(h), wo = out_dim(w);
        Tensor<T> y({n_b, out_ch_, ho, wo});
        for (int n = 0; n < n_b; ++n) {
            for (int co = 0; co < out_ch_; ++co) {
                T* yc = &y.at(n, co, 0, 0);
                const T b = bias_.at(co);
                for (int i = 0; i < ho * wo; ++i) yc[i] = b;
                for (int ci = 0; ci < in_ch_; ++ci) {
                    const T* xc = &input_.at(n, ci, 0, 0);
                    for (int kh = 0; kh < ksize_; ++kh) {
                        for (int kw = 0; kw < ksize_; ++kw) {
                            const T wv = weight_.at(co, ci, kh, kw);
                            accumulate_row(yc, xc, wv, h, w, ho, wo, kh, kw);
                        }
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const int n_b = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
        const int ho = dy.dim(2), wo = dy.dim(3);
        Tensor<T> dx(input_.shape());
        for (int n = 0; n < n_b; ++n) {
            for (int co = 0; co < out_ch_; ++co) {
                const T* dyc = &dy.at(n, co, 0, 0);
                T db{};
                for (int i = 0; i < ho * wo; ++i) db += dyc[i];
                dbias_.at(co) += db;
                for (int ci = 0; ci < in_ch_; ++ci) {
                    const T* xc = &input_.at(n, ci, 0, 0);
                    T* dxc = &dx.at(n, ci, 0, 0);
                    for (int kh = 0; kh < ksize_; ++kh) {
                        for (int kw = 0; kw < ksize_; ++kw) {
                            T dw{};
                            const T wv = weight_.at(co, ci, kh, kw);
                            for (int oh = 0; oh < ho; ++oh) {
                                const int ih = oh * stride_ - pad_ + kh;
                                if (ih < 0 || ih >= h) continue;
                                const T* dyrow = dyc + oh * wo;
                                const T* xrow = xc + ih * w;
                                T* dxrow = dxc + ih * w;
                                for (int ow = 0; ow < wo; ++ow) {
                                    const int iw = ow * stride_ - pad_ + kw;
                                    if (iw < 0 || iw >= w) continue;
                                    dw += dyrow[ow] * xrow[iw];
                                    dxrow[iw] += wv * dyrow[ow];
                                }
                            }
                            dweight_.at(co, ci, kh, kw) += dw;
                        }
                    }
                }
            }
        }
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn({prefix + ".weight", &weight_, &dweight_, true});
        fn({prefix + ".bias", &bias_, &dbias_, true});
    }

    int out_dim(int in) const { return (in + 2 * pad_ - ksize_) / stride_ + 1; }
    int out_channels() const { return out_ch_; }
    Tensor<T>& weight() { return weight_; }
    Tensor<T>& bias() { return bias_; }

private:
    void check_input(const Tensor<T>& x) const {
        if (x.rank() != 4 || x.dim(1) != in_ch_)
            throw std::invalid_argument("Conv2d: expected (N," + std::to_string(in_ch_) +
                                        ",H,W) input, got " + x.shape_str());
    }

    // y[oh, :] += wv * x[ih, shifted] for one (kh, kw) tap; stride-1 inner
    // loops stay contiguous so the compiler can vectorize them.
    void accumulate_row(T* yc, const T* xc, T wv, int h, int w, int ho, int wo,
                        int kh, int kw) const {
        for (int oh = 0; oh < ho; ++oh) {
            const int ih = oh * stride_ - pad_ + kh;
            if (ih < 0 || ih >= h) continue;
            T* yrow = yc + oh * wo;
            const T* xrow = xc + ih * w;
            if (stride_ == 1) {
                const int shift = kw - pad_;
                const int lo = std::max(0, -shift);
                const int hi = std::min(wo, w - shift);
                for (int ow = lo; ow < hi; ++ow) yrow[ow] += wv * xrow[ow + shift];
            } else {
                for (int ow = 0; ow < wo; ++ow) {
                    const int iw = ow * stride_ - pad_ + kw;
                    if (iw >= 0 && iw < w) yrow[ow] += wv * xrow[iw];
                }
            }
        }
    }

    int in_ch_ = 0, out_ch_ = 0, ksize_ = 0, stride_ = 1, pad_ = 0;
    Tensor<T> weight_, bias_, dweight_, dbias_;
    Tensor<T> input_;
};

template <typename T>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels, T eps = static_cast<T>(1e-5), T momentum = static_cast<T>(0.1))
        : ch_(channels), eps_(eps), momentum_(momentum),
          gamma_({channels}, T{1}), beta_({channels}),
          dgamma_({channels}), dbeta_({channels}),
          running_mean_({channels}), running_var_({channels}, T{1}),
          mean_({channels}), inv_std_({channels}) {}

    Tensor<T> forward(const Tensor<T>& x, Mode mode) {
        const int n_b = x.dim(0), h = x.dim(2), w = x.dim(3);
        const std::size_t m = static_cast<std::size_t>(n_b) * h * w;
        Tensor<T> y(x.shape());
        train_mode_ = mode == Mode::train;
        xhat_ = Tensor<T>(x.shape());
        if (mode == Mode::train) {
            for (int c = 0; c < ch_; ++c) {
                T mu{};
                for (int n = 0; n < n_b; ++n) {
                    const T* xc = &x.at(n, c, 0, 0);
                    for (int i = 0; i < h * w; ++i) mu += xc[i];
                }
                mu /= static_cast<T>(m);
                T var{};
                for (int n = 0; n < n_b; ++n) {
                    const T* xc = &x.at(n, c, 0, 0);
                    for (int i = 0; i < h * w; ++i) {
                        const T d = xc[i] - mu;
                        var += d * d;
                    }
                }
                var /= static_cast<T>(m);
                mean_.at(c) = mu;
                inv_std_.at(c) = T{1} / std::sqrt(var + eps_);
                const T unbiased = m > 1 ? var * static_cast<T>(m) / static_cast<T>(m - 1) : var;
                running_mean_.at(c) = (T{1} - momentum_) * running_mean_.at(c) + momentum_ * mu;
                running_var_.at(c) = (T{1} - momentum_) * running_var_.at(c) + momentum_ * unbiased;
                apply_channel(x, y, c, mu, inv_std_.at(c), &xhat_);
            }
        } else {
            for (int c = 0; c < ch_; ++c) {
                mean_.at(c) = running_mean_.at(c);
                inv_std_.at(c) = T{1} / std::sqrt(running_var_.at(c) + eps_);
                apply_channel(x, y, c, mean_.at(c), inv_std_.at(c), &xhat_);
            }
        }
        return y;
    }

    // Train mode differentiates through the batch statistics; eval mode is a
    // per-channel affine map with frozen running statistics.
    Tensor<T> backward(const Tensor<T>& dy) {
        const int n_b = dy.dim(0), h = dy.dim(2), w = dy.dim(3);
        const T m = static_cast<T>(static_cast<std::size_t>(n_b) * h * w);
        Tensor<T> dx(dy.shape());
        for (int c = 0; c < ch_; ++c) {
            T sum_dy{}, sum_dy_xhat{};
            for (int n = 0; n < n_b; ++n) {
                const T* dyc = &dy.at(n, c, 0, 0);
                const T* xh = &xhat_.at(n, c, 0, 0);
                for (int i = 0; i < h * w; ++i) {
                    sum_dy += dyc[i];
                    sum_dy_xhat += dyc[i] * xh[i];
                }
            }
            dgamma_.at(c) += sum_dy_xhat;
            dbeta_.at(c) += sum_dy;
            const T g = gamma_.at(c) * inv_std_.at(c);
            for (int n = 0; n < n_b; ++n) {
                const T* dyc = &dy.at(n, c, 0, 0);
                const T* xh = &xhat_.at(n, c, 0, 0);
                T* dxc = &dx.at(n, c, 0, 0);
                if (train_mode_) {
                    for (int i = 0; i < h * w; ++i)
                        dxc[i] = g * (dyc[i] - sum_dy / m - xh[i] * sum_dy_xhat / m);
                } else {
                    for (int i = 0; i < h * w; ++i) dxc[i] = g * dyc[i];
                }
            }
        }
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn({prefix + ".gamma", &gamma_, &dgamma_, true});
        fn({prefix + ".beta", &beta_, &dbeta_, true});
        fn({prefix + ".running_mean", &running_mean_, nullptr, false});
        fn({prefix + ".running_var", &running_var_, nullptr, false});
    }

private:
    void apply_channel(const Tensor<T>& x, Tensor<T>& y, int c, T mu, T inv,
                       Tensor<T>* xhat) const {
        const int n_b = x.dim(0), h = x.dim(2), w = x.dim(3);
        const T g = gamma_.at(c), b = beta_.at(c);
        for (int n = 0; n < n_b; ++n) {
            const T* xc = &x.at(n, c, 0, 0);
            T* yc = &y.at(n, c, 0, 0);
            T* xhc = xhat ? &xhat->at(n, c, 0, 0) : nullptr;
            for (int i = 0; i < h * w; ++i) {
                const T v = (xc[i] - mu) * inv;
                if (xhc) xhc[i] = v;
                yc[i] = g * v + b;
            }
        }
    }

    int ch_ = 0;
    T eps_{}, momentum_{};
    bool train_mode_ = true;
    Tensor<T> gamma_, beta_, dgamma_, dbeta_;
    Tensor<T> running_mean_, running_var_;
    Tensor<T> mean_, inv_std_, xhat_;
};

// Leaky rectifier; slope 0 gives plain ReLU.
template <typename T>
class LeakyReLU {
public:
    explicit LeakyReLU(T slope = T{}) : slope_(slope) {}

    Tensor<T> forward(const Tensor<T>& x) {
        input_ = x;
        Tensor<T> y(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = x[i] > T{} ? x[i] : slope_ * x[i];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.shape());
        for (std::size_t i = 0; i < dy.size(); ++i)
            dx[i] = input_[i] > T{} ? dy[i] : slope_ * dy[i];
        return dx;
    }

private:
    T slope_{};
    Tensor<T> input_;
};

template <typename T>
class MaxPool2d {
public:
    explicit MaxPool2d(int ksize = 2, int stride = 2) : ksize_(ksize), stride_(stride) {}

    Tensor<T> forward(const Tensor<T>& x) {
        const int n_b = x.dim(0), c_n = x.dim(1), h = x.dim(2), w = x.dim(3);
        const int ho = (h - ksize_) / stride_ + 1;
        const int wo = (w - ksize_) / stride_ + 1;
        in_shape_ = x.shape();
        Tensor<T> y({n_b, c_n, ho, wo});
        argmax_.assign(y.size(), 0);
        std::size_t o = 0;
        for (int n = 0; n < n_b; ++n) {
            for (int c = 0; c < c_n; ++c) {
                const T* xc = &x.at(n, c, 0, 0);
                for (int oh = 0; oh < ho; ++oh) {
                    for (int ow = 0; ow < wo; ++ow, ++o) {
                        const int ih0 = oh * stride_, iw0 = ow * stride_;
                        T best = xc[ih0 * w + iw0];
                        int best_idx = ih0 * w + iw0;
                        for (int kh = 0; kh < ksize_; ++kh) {
                            for (int kw = 0; kw < ksize_; ++kw) {
                                const int idx = (ih0 + kh) * w + (iw0 + kw);
                                if (xc[idx] > best) {
                                    best = xc[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        y[o] = best;
                        argmax_[o] = best_idx;
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(in_shape_);
        const int n_b = dy.dim(0), c_n = dy.dim(1), ho = dy.dim(2), wo = dy.dim(3);
        const int hw = in_shape_[2] * in_shape_[3];
        std::size_t o = 0;
        for (int n = 0; n < n_b; ++n) {
            for (int c = 0; c < c_n; ++c) {
                T* dxc = dx.data() + (static_cast<std::size_t>(n) * c_n + c) * hw;
                for (int i = 0; i < ho * wo; ++i, ++o) dxc[argmax_[o]] += dy[o];
            }
        }
        return dx;
    }

private:
    int ksize_ = 2, stride_ = 2;
    std::vector<int> in_shape_;
    std::vector<int> argmax_;
};

// Global average pooling: (N,C,H,W) -> (N,C).
template <typename T>
class GlobalAvgPool {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        in_shape_ = x.shape();
        const int n_b = x.dim(0), c_n = x.dim(1), hw = x.dim(2) * x.dim(3);
        Tensor<T> y({n_b, c_n});
        for (int n = 0; n < n_b; ++n) {
            for (int c = 0; c < c_n; ++c) {
                const T* xc = &x.at(n, c, 0, 0);
                T s{};
                for (int i = 0; i < hw; ++i) s += xc[i];
                y.at(n, c) = s / static_cast<T>(hw);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(in_shape_);
        const int n_b = in_shape_[0], c_n = in_shape_[1], hw = in_shape_[2] * in_shape_[3];
        const T inv = T{1} / static_cast<T>(hw);
        for (int n = 0; n < n_b; ++n) {
            for (int c = 0; c < c_n; ++c) {
                const T g = dy.at(n, c) * inv;
                T* dxc = &dx.at(n, c, 0, 0);
                for (int i = 0; i < hw; ++i) dxc[i] = g;
            }
        }
        return dx;
    }

private:
    std::vector<int> in_shape_;
};

template <typename T>
class Linear {
public:
    Linear() = default;
    Linear(int in_dim, int out_dim, Rng& rng)
        : in_(in_dim), out_(out_dim),
          weight_({out_dim, in_dim}), bias_({out_dim}),
          dweight_({out_dim, in_dim}), dbias_({out_dim}) {
        init_fan_in_uniform(weight_, in_dim, rng);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        input_ = x;
        const int n_b = x.dim(0);
        Tensor<T> y({n_b, out_});
        for (int n = 0; n < n_b; ++n) {
            const T* xr = &x.at(n, 0);
            for (int o = 0; o < out_; ++o) {
                const T* wr = &weight_.at(o, 0);
                T s = bias_.at(o);
                for (int i = 0; i < in_; ++i) s += wr[i] * xr[i];
                y.at(n, o) = s;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const int n_b = dy.dim(0);
        Tensor<T> dx({n_b, in_});
        for (int n = 0; n < n_b; ++n) {
            const T* xr = &input_.at(n, 0);
            T* dxr = &dx.at(n, 0);
            for (int o = 0; o < out_; ++o) {
                const T g = dy.at(n, o);
                dbias_.at(o) += g;
                T* dwr = &dweight_.at(o, 0);
                const T* wr = &weight_.at(o, 0);
                for (int i = 0; i < in_; ++i) {
                    dwr[i] += g * xr[i];
                    dxr[i] += g * wr[i];
                }
            }
        }
        return dx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn({prefix + ".weight", &weight_, &dweight_, true});
        fn({prefix + ".bias", &bias_, &dbias_, true});
    }

    int in_dim() const { return in_; }
    int out_dim() const { return out_; }

private:
    int in_ = 0, out_ = 0;
    Tensor<T> weight_, bias_, dweight_, dbias_;
    Tensor<T> input_;
};

// Inverted dropout. The mask comes from an explicitly keyed generator set
// before each training step, so fixed keys reproduce fixed masks.
template <typename T>
class Dropout {
public:
    explicit Dropout(T p = T{}) : p_(p) {
        if (p_ < T{} || p_ >= T{1}) throw std::invalid_argument("Dropout: p must be in [0,1)");
    }

    void set_step_key(std::uint64_t key) { step_key_ = key; }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) {
        if (mode == Mode::eval || p_ == T{}) {
            mask_.assign(0, T{});
            return x;
        }
        Rng rng(step_key_);
        const T keep = T{1} - p_;
        const T scale = T{1} / keep;
        mask_.assign(x.size(), T{});
        Tensor<T> y(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const bool kept = rng.uniform() >= static_cast<double>(p_);
            mask_[i] = kept ? scale : T{};
            y[i] = x[i] * mask_[i];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        if (mask_.empty()) return dy;
        Tensor<T> dx(dy.shape());
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
        return dx;
    }

private:
    T p_{};
    std::uint64_t step_key_ = 0;
    std::vector<T> mask_;
};

}  // namespace solarnet::nn
