#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "solarnet/nn.hpp"
#include "solarnet/rng.hpp"
#include "solarnet/tensor.hpp"

namespace solarnet {

template <typename T>
inline T sigmoid(T x) {
    return x >= T{} ? T{1} / (T{1} + std::exp(-x))
                    : std::exp(x) / (T{1} + std::exp(x));
}

// Shared two-layer perceptron of the channel branch: C -> hidden -> C with a
// rectifier between. Both pooled descriptors go through the same weights.
template <typename T>
struct ChannelAttentionParams {
    int reduction_ratio = 16;
    Tensor<T> w1, b1;  // (hidden, C), (hidden)
    Tensor<T> w2, b2;  // (C, hidden), (C)

    static ChannelAttentionParams init(int channels, int reduction, Rng& rng) {
        if (channels < 1) throw std::invalid_argument("channel attention: channels must be >= 1");
        if (reduction < 1) throw std::invalid_argument("channel attention: reduction_ratio must be >= 1");
        const int hidden = std::max(channels / reduction, 1);
        ChannelAttentionParams p;
        p.reduction_ratio = reduction;
        p.w1 = Tensor<T>({hidden, channels});
        p.b1 = Tensor<T>({hidden});
        p.w2 = Tensor<T>({channels, hidden});
        p.b2 = Tensor<T>({channels});
        nn::init_fan_in_uniform(p.w1, channels, rng);
        nn::init_fan_in_uniform(p.w2, hidden, rng);
        return p;
    }

    int channels() const { return w1.dim(1); }
    int hidden() const { return w1.dim(0); }

    void check_channels(int c) const {
        if (c != channels())
            throw std::invalid_argument("channel attention: feature map has " + std::to_string(c) +
                                        " channels but MLP expects " + std::to_string(channels()));
    }
};

// Wide convolution of the spatial branch: 2 stacked channel-pooled maps in,
// one gate logit map out, zero padding preserving spatial dims.
template <typename T>
struct SpatialAttentionParams {
    int kernel_size = 7;
    Tensor<T> conv_weight;  // (2, k, k)
    Tensor<T> conv_bias;    // (1)

    static SpatialAttentionParams init(int ksize, Rng& rng) {
        if (ksize < 1 || ksize % 2 == 0)
            throw std::invalid_argument("spatial attention: kernel_size must be odd, got " +
                                        std::to_string(ksize));
        SpatialAttentionParams p;
        p.kernel_size = ksize;
        p.conv_weight = Tensor<T>({2, ksize, ksize});
        p.conv_bias = Tensor<T>({1});
        nn::init_fan_in_uniform(p.conv_weight, 2 * ksize * ksize, rng);
        return p;
    }
};

// Hidden activation of the shared MLP. The pooled descriptors are
// non-negative (post-rectifier features), so a hard rectifier could leave a
// hidden unit dead for every input forever; the leaky slope keeps the whole
// attention subgraph trainable.
inline constexpr double kMlpLeakySlope = 0.01;

namespace detail {

template <typename T>
struct MlpCache {
    std::vector<T> hidden_pre;  // before rectifier
    std::vector<T> hidden;
};

template <typename T>
void mlp_apply(const ChannelAttentionParams<T>& p, const T* in, T* out, MlpCache<T>* cache) {
    const int c_n = p.channels(), h_n = p.hidden();
    const T slope = static_cast<T>(kMlpLeakySlope);
    std::vector<T> hpre(h_n), h(h_n);
    for (int j = 0; j < h_n; ++j) {
        T s = p.b1.at(j);
        const T* w1r = &p.w1.at(j, 0);
        for (int c = 0; c < c_n; ++c) s += w1r[c] * in[c];
        hpre[j] = s;
        h[j] = s > T{} ? s : slope * s;
    }
    for (int c = 0; c < c_n; ++c) {
        T s = p.b2.at(c);
        const T* w2r = &p.w2.at(c, 0);
        for (int j = 0; j < h_n; ++j) s += w2r[j] * h[j];
        out[c] = s;
    }
    if (cache) {
        cache->hidden_pre = std::move(hpre);
        cache->hidden = std::move(h);
    }
}

}  // namespace detail

// M_c = sigmoid(MLP(avgpool(F)) + MLP(maxpool(F))), pools over spatial dims.
// F is a single (C,H,W) map; returns a length-C gate vector in (0,1).
template <typename T>
Tensor<T> channel_attention(const Tensor<T>& f, const ChannelAttentionParams<T>& p) {
    if (f.rank() != 3) throw std::invalid_argument("channel_attention: expected (C,H,W) map");
    const int c_n = f.dim(0), hw = f.dim(1) * f.dim(2);
    if (hw < 1) throw std::invalid_argument("channel_attention: empty spatial dims");
    p.check_channels(c_n);
    std::vector<T> avg(c_n), mx(c_n);
    for (int c = 0; c < c_n; ++c) {
        const T* fc = &f.at(c, 0, 0);
        T s = fc[0], m = fc[0];
        for (int i = 1; i < hw; ++i) {
            s += fc[i];
            if (fc[i] > m) m = fc[i];
        }
        avg[c] = s / static_cast<T>(hw);
        mx[c] = m;
    }
    std::vector<T> out_avg(c_n), out_max(c_n);
    detail::mlp_apply<T>(p, avg.data(), out_avg.data(), nullptr);
    detail::mlp_apply<T>(p, mx.data(), out_max.data(), nullptr);
    Tensor<T> gate({c_n});
    for (int c = 0; c < c_n; ++c) gate.at(c) = sigmoid(out_avg[c] + out_max[c]);
    return gate;
}

// M_s = sigmoid(conv_k([avg over channels; max over channels])), same spatial
// dims as the input map.
template <typename T>
Tensor<T> spatial_attention(const Tensor<T>& f, const SpatialAttentionParams<T>& p) {
    if (f.rank() != 3) throw std::invalid_argument("spatial_attention: expected (C,H,W) map");
    const int c_n = f.dim(0), h = f.dim(1), w = f.dim(2);
    const int k = p.kernel_size, pad = k / 2;
    Tensor<T> avg({h, w}), mx({h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            T s = f.at(0, y, x), m = s;
            for (int c = 1; c < c_n; ++c) {
                const T v = f.at(c, y, x);
                s += v;
                if (v > m) m = v;
            }
            avg.at(y, x) = s / static_cast<T>(c_n);
            mx.at(y, x) = m;
        }
    }
    Tensor<T> gate({h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            T s = p.conv_bias.at(0);
            for (int kh = 0; kh < k; ++kh) {
                const int iy = y - pad + kh;
                if (iy < 0 || iy >= h) continue;
                for (int kw = 0; kw < k; ++kw) {
                    const int ix = x - pad + kw;
                    if (ix < 0 || ix >= w) continue;
                    s += p.conv_weight.at(0, kh, kw) * avg.at(iy, ix);
                    s += p.conv_weight.at(1, kh, kw) * mx.at(iy, ix);
                }
            }
            gate.at(y, x) = sigmoid(s);
        }
    }
    return gate;
}

// Sequential refinement: F' = M_c (.) F broadcast over (H,W), then
// F'' = M_s (.) F' broadcast over C. Channel strictly before spatial.
template <typename T>
Tensor<T> cbam_forward(const Tensor<T>& f, const ChannelAttentionParams<T>& cp,
                       const SpatialAttentionParams<T>& sp) {
    const Tensor<T> mc = channel_attention(f, cp);
    const int c_n = f.dim(0), h = f.dim(1), w = f.dim(2);
    Tensor<T> fprime(f.shape());
    for (int c = 0; c < c_n; ++c) {
        const T g = mc.at(c);
        const T* fc = &f.at(c, 0, 0);
        T* oc = &fprime.at(c, 0, 0);
        for (int i = 0; i < h * w; ++i) oc[i] = g * fc[i];
    }
    const Tensor<T> ms = spatial_attention(fprime, sp);
    Tensor<T> out(f.shape());
    for (int c = 0; c < c_n; ++c) {
        const T* fc = &fprime.at(c, 0, 0);
        const T* gs = ms.data();
        T* oc = &out.at(c, 0, 0);
        for (int i = 0; i < h * w; ++i) oc[i] = gs[i] * fc[i];
    }
    return out;
}

// Trainable CBAM block operating on (N,C,H,W) batches with full backprop
// through both attention branches.
template <typename T>
class CbamBlock {
public:
    CbamBlock() = default;
    CbamBlock(int channels, int reduction, int spatial_kernel, Rng& rng)
        : cp_(ChannelAttentionParams<T>::init(channels, reduction, rng)),
          sp_(SpatialAttentionParams<T>::init(spatial_kernel, rng)) {
        alloc_grads();
    }

    CbamBlock(ChannelAttentionParams<T> cp, SpatialAttentionParams<T> sp)
        : cp_(std::move(cp)), sp_(std::move(sp)) {
        alloc_grads();
    }

    const ChannelAttentionParams<T>& channel_params() const { return cp_; }
    const SpatialAttentionParams<T>& spatial_params() const { return sp_; }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.rank() != 4) throw std::invalid_argument("CbamBlock: expected (N,C,H,W)");
        cp_.check_channels(x.dim(1));
        input_ = x;
        const int n_b = x.dim(0);
        per_sample_.assign(static_cast<std::size_t>(n_b), SampleCache{});
        Tensor<T> out(x.shape());
        for (int n = 0; n < n_b; ++n) forward_one(n, out);
        return out;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(input_.shape());
        for (int n = 0; n < input_.dim(0); ++n) backward_one(n, dy, dx);
        return dx;
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
        fn({prefix + ".channel_mlp.w1", &cp_.w1, &dw1_, true});
        fn({prefix + ".channel_mlp.b1", &cp_.b1, &db1_, true});
        fn({prefix + ".channel_mlp.w2", &cp_.w2, &dw2_, true});
        fn({prefix + ".channel_mlp.b2", &cp_.b2, &db2_, true});
        fn({prefix + ".spatial_conv.weight", &sp_.conv_weight, &dsw_, true});
        fn({prefix + ".spatial_conv.bias", &sp_.conv_bias, &dsb_, true});
    }

private:
    struct SampleCache {
        std::vector<T> s_avg, s_max;          // pooled descriptors (C)
        std::vector<int> spatial_argmax;      // per channel, position of max (C)
        detail::MlpCache<T> mlp_avg, mlp_max;
        std::vector<T> gate_c;                // (C)
        Tensor<T> fprime;                     // (C,H,W)
        Tensor<T> avg_map, max_map;           // (H,W)
        std::vector<int> channel_argmax;      // per position, channel of max (H*W)
        Tensor<T> gate_s;                     // (H,W)
    };

    void alloc_grads() {
        dw1_ = Tensor<T>(cp_.w1.shape());
        db1_ = Tensor<T>(cp_.b1.shape());
        dw2_ = Tensor<T>(cp_.w2.shape());
        db2_ = Tensor<T>(cp_.b2.shape());
        dsw_ = Tensor<T>(sp_.conv_weight.shape());
        dsb_ = Tensor<T>(sp_.conv_bias.shape());
    }

    void forward_one(int n, Tensor<T>& out) {
        const int c_n = input_.dim(1), h = input_.dim(2), w = input_.dim(3);
        const int hw = h * w;
        SampleCache& sc = per_sample_[static_cast<std::size_t>(n)];
        sc.s_avg.resize(c_n);
        sc.s_max.resize(c_n);
        sc.spatial_argmax.resize(c_n);
        for (int c = 0; c < c_n; ++c) {
            const T* fc = &input_.at(n, c, 0, 0);
            T s = fc[0], m = fc[0];
            int am = 0;
            for (int i = 1; i < hw; ++i) {
                s += fc[i];
                if (fc[i] > m) {
                    m = fc[i];
                    am = i;
                }
            }
            sc.s_avg[c] = s / static_cast<T>(hw);
            sc.s_max[c] = m;
            sc.spatial_argmax[c] = am;
        }
        std::vector<T> out_avg(c_n), out_max(c_n);
        detail::mlp_apply<T>(cp_, sc.s_avg.data(), out_avg.data(), &sc.mlp_avg);
        detail::mlp_apply<T>(cp_, sc.s_max.data(), out_max.data(), &sc.mlp_max);
        sc.gate_c.resize(c_n);
        sc.fprime = Tensor<T>({c_n, h, w});
        for (int c = 0; c < c_n; ++c) {
            sc.gate_c[c] = sigmoid(out_avg[c] + out_max[c]);
            const T g = sc.gate_c[c];
            const T* fc = &input_.at(n, c, 0, 0);
            T* pc = &sc.fprime.at(c, 0, 0);
            for (int i = 0; i < hw; ++i) pc[i] = g * fc[i];
        }
        sc.avg_map = Tensor<T>({h, w});
        sc.max_map = Tensor<T>({h, w});
        sc.channel_argmax.resize(hw);
        for (int i = 0; i < hw; ++i) {
            T s = sc.fprime[static_cast<std::size_t>(i)];
            T m = s;
            int am = 0;
            for (int c = 1; c < c_n; ++c) {
                const T v = sc.fprime[static_cast<std::size_t>(c) * hw + i];
                s += v;
                if (v > m) {
                    m = v;
                    am = c;
                }
            }
            sc.avg_map[static_cast<std::size_t>(i)] = s / static_cast<T>(c_n);
            sc.max_map[static_cast<std::size_t>(i)] = m;
            sc.channel_argmax[i] = am;
        }
        sc.gate_s = Tensor<T>({h, w});
        const int k = sp_.kernel_size, pad = k / 2;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                T s = sp_.conv_bias.at(0);
                for (int kh = 0; kh < k; ++kh) {
                    const int iy = y - pad + kh;
                    if (iy < 0 || iy >= h) continue;
                    for (int kw = 0; kw < k; ++kw) {
                        const int ix = x - pad + kw;
                        if (ix < 0 || ix >= w) continue;
                        s += sp_.conv_weight.at(0, kh, kw) * sc.avg_map.at(iy, ix);
                        s += sp_.conv_weight.at(1, kh, kw) * sc.max_map.at(iy, ix);
                    }
                }
                sc.gate_s.at(y, x) = sigmoid(s);
            }
        }
        for (int c = 0; c < c_n; ++c) {
            const T* pc = &sc.fprime.at(c, 0, 0);
            const T* gs = sc.gate_s.data();
            T* oc = &out.at(n, c, 0, 0);
            for (int i = 0; i < hw; ++i) oc[i] = gs[i] * pc[i];
        }
    }

    void backward_one(int n, const Tensor<T>& dy, Tensor<T>& dx) {
        const int c_n = input_.dim(1), h = input_.dim(2), w = input_.dim(3);
        const int hw = h * w;
        const SampleCache& sc = per_sample_[static_cast<std::size_t>(n)];

        // spatial gate
        Tensor<T> dgate_s({h, w});
        Tensor<T> dfprime({c_n, h, w});
        for (int c = 0; c < c_n; ++c) {
            const T* dyc = &dy.at(n, c, 0, 0);
            const T* pc = &sc.fprime.at(c, 0, 0);
            const T* gs = sc.gate_s.data();
            T* dpc = &dfprime.at(c, 0, 0);
            for (int i = 0; i < hw; ++i) {
                dgate_s[static_cast<std::size_t>(i)] += dyc[i] * pc[i];
                dpc[i] = dyc[i] * gs[i];
            }
        }
        Tensor<T> dlogit_s({h, w});
        for (int i = 0; i < hw; ++i) {
            const T g = sc.gate_s[static_cast<std::size_t>(i)];
            dlogit_s[static_cast<std::size_t>(i)] =
                dgate_s[static_cast<std::size_t>(i)] * g * (T{1} - g);
        }

        // spatial conv backward to weights and to the two pooled maps
        const int k = sp_.kernel_size, pad = k / 2;
        Tensor<T> davg_map({h, w}), dmax_map({h, w});
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const T dl = dlogit_s.at(y, x);
                if (dl == T{}) continue;
                dsb_.at(0) += dl;
                for (int kh = 0; kh < k; ++kh) {
                    const int iy = y - pad + kh;
                    if (iy < 0 || iy >= h) continue;
                    for (int kw = 0; kw < k; ++kw) {
                        const int ix = x - pad + kw;
                        if (ix < 0 || ix >= w) continue;
                        dsw_.at(0, kh, kw) += dl * sc.avg_map.at(iy, ix);
                        dsw_.at(1, kh, kw) += dl * sc.max_map.at(iy, ix);
                        davg_map.at(iy, ix) += dl * sp_.conv_weight.at(0, kh, kw);
                        dmax_map.at(iy, ix) += dl * sp_.conv_weight.at(1, kh, kw);
                    }
                }
            }
        }
        const T inv_c = T{1} / static_cast<T>(c_n);
        for (int i = 0; i < hw; ++i) {
            const T da = davg_map[static_cast<std::size_t>(i)] * inv_c;
            for (int c = 0; c < c_n; ++c) dfprime[static_cast<std::size_t>(c) * hw + i] += da;
            dfprime[static_cast<std::size_t>(sc.channel_argmax[i]) * hw + i] +=
                dmax_map[static_cast<std::size_t>(i)];
        }

        // channel gate
        std::vector<T> dgate_c(c_n, T{});
        for (int c = 0; c < c_n; ++c) {
            const T* dpc = &dfprime.at(c, 0, 0);
            const T* fc = &input_.at(n, c, 0, 0);
            T* dxc = &dx.at(n, c, 0, 0);
            const T g = sc.gate_c[c];
            T acc{};
            for (int i = 0; i < hw; ++i) {
                acc += dpc[i] * fc[i];
                dxc[i] += dpc[i] * g;
            }
            dgate_c[c] = acc;
        }
        std::vector<T> dlogit_c(c_n);
        for (int c = 0; c < c_n; ++c) {
            const T g = sc.gate_c[c];
            dlogit_c[c] = dgate_c[c] * g * (T{1} - g);
        }

        // shared MLP backward over both descriptor branches
        std::vector<T> ds_avg(c_n, T{}), ds_max(c_n, T{});
        mlp_backward(sc.mlp_avg, sc.s_avg, dlogit_c, ds_avg);
        mlp_backward(sc.mlp_max, sc.s_max, dlogit_c, ds_max);

        const T inv_hw = T{1} / static_cast<T>(hw);
        for (int c = 0; c < c_n; ++c) {
            T* dxc = &dx.at(n, c, 0, 0);
            const T da = ds_avg[c] * inv_hw;
            for (int i = 0; i < hw; ++i) dxc[i] += da;
            dxc[sc.spatial_argmax[c]] += ds_max[c];
        }
    }

    void mlp_backward(const detail::MlpCache<T>& cache, const std::vector<T>& in,
                      const std::vector<T>& dout, std::vector<T>& din) {
        const int c_n = cp_.channels(), h_n = cp_.hidden();
        std::vector<T> dh(h_n, T{});
        for (int c = 0; c < c_n; ++c) {
            const T g = dout[static_cast<std::size_t>(c)];
            db2_.at(c) += g;
            T* dw2r = &dw2_.at(c, 0);
            const T* w2r = &cp_.w2.at(c, 0);
            for (int j = 0; j < h_n; ++j) {
                dw2r[j] += g * cache.hidden[static_cast<std::size_t>(j)];
                dh[static_cast<std::size_t>(j)] += g * w2r[j];
            }
        }
        const T slope = static_cast<T>(kMlpLeakySlope);
        for (int j = 0; j < h_n; ++j) {
            const T act = cache.hidden_pre[static_cast<std::size_t>(j)] > T{} ? T{1} : slope;
            const T g = dh[static_cast<std::size_t>(j)] * act;
            db1_.at(j) += g;
            T* dw1r = &dw1_.at(j, 0);
            const T* w1r = &cp_.w1.at(j, 0);
            for (int c = 0; c < c_n; ++c) {
                dw1r[c] += g * in[static_cast<std::size_t>(c)];
                din[static_cast<std::size_t>(c)] += g * w1r[c];
            }
        }
    }

    ChannelAttentionParams<T> cp_;
    SpatialAttentionParams<T> sp_;
    Tensor<T> dw1_, db1_, dw2_, db2_, dsw_, dsb_;
    Tensor<T> input_;
    std::vector<SampleCache> per_sample_;
};

}  // namespace solarnet
