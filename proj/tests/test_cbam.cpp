#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "solarnet/cbam.hpp"
#include "test_helpers.hpp"

using namespace solarnet;

namespace {

template <typename T>
ChannelAttentionParams<T> zero_channel_params(int channels, int reduction = 1) {
    Rng rng(0);
    auto p = ChannelAttentionParams<T>::init(channels, reduction, rng);
    p.w1.fill(T{});
    p.w2.fill(T{});
    return p;
}

template <typename T>
SpatialAttentionParams<T> zero_spatial_params(int ksize = 7) {
    Rng rng(0);
    auto p = SpatialAttentionParams<T>::init(ksize, rng);
    p.conv_weight.fill(T{});
    return p;
}

// MLP acting as the identity on signed inputs: hidden = [act(d); act(-d)]
// with the leaky rectifier, so act(d) - act(-d) = (1+slope)*d and scaling the
// output weights by 1/(1+slope) recovers d exactly.
template <typename T>
ChannelAttentionParams<T> identity_mlp(int channels) {
    ChannelAttentionParams<T> p;
    p.reduction_ratio = 1;
    p.w1 = Tensor<T>({2 * channels, channels});
    p.b1 = Tensor<T>({2 * channels});
    p.w2 = Tensor<T>({channels, 2 * channels});
    p.b2 = Tensor<T>({channels});
    const T scale = T{1} / (T{1} + static_cast<T>(kMlpLeakySlope));
    for (int c = 0; c < channels; ++c) {
        p.w1.at(c, c) = T{1};
        p.w1.at(channels + c, c) = T{-1};
        p.w2.at(c, c) = scale;
        p.w2.at(c, channels + c) = -scale;
    }
    return p;
}

}  // namespace

TEST_CASE("zero-initialized channel MLP gates everything at one half") {
    Rng rng(1);
    Tensor<double> f = random_tensor<double>({3, 4, 5}, rng);
    auto gate = channel_attention(f, zero_channel_params<double>(3));
    for (int c = 0; c < 3; ++c) REQUIRE(gate.at(c) == 0.5);
}

TEST_CASE("spatially constant map with identity MLP doubles the descriptor") {
    // avgpool == maxpool, so logits = 2*MLP(d); d = [1,-1]
    Tensor<double> f({2, 3, 3});
    for (int i = 0; i < 9; ++i) {
        f[static_cast<std::size_t>(i)] = 1.0;
        f[static_cast<std::size_t>(9 + i)] = -1.0;
    }
    auto gate = channel_attention(f, identity_mlp<double>(2));
    REQUIRE(gate.at(0) == Catch::Approx(sigmoid(2.0)).epsilon(1e-12));
    REQUIRE(gate.at(1) == Catch::Approx(sigmoid(-2.0)).epsilon(1e-12));
    REQUIRE(gate.at(0) == Catch::Approx(0.8808).margin(5e-5));
    REQUIRE(gate.at(1) == Catch::Approx(0.1192).margin(5e-5));
}

TEST_CASE("channel gates are strictly inside (0,1)") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor<double> f = random_tensor<double>({4, 3, 6}, rng, -5.0, 5.0);
        auto p = ChannelAttentionParams<double>::init(4, 2, rng);
        auto gate = channel_attention(f, p);
        for (int c = 0; c < 4; ++c) {
            REQUIRE(gate.at(c) > 0.0);
            REQUIRE(gate.at(c) < 1.0);
        }
    }
}

TEST_CASE("channel attention rejects mismatched channel counts") {
    Rng rng(3);
    auto p = ChannelAttentionParams<double>::init(4, 2, rng);
    Tensor<double> f({3, 2, 2});
    REQUIRE_THROWS_AS(channel_attention(f, p), std::invalid_argument);
}

TEST_CASE("zero spatial kernel gives a uniform 0.5 map of the input dims") {
    Rng rng(4);
    Tensor<double> f = random_tensor<double>({5, 7, 11}, rng);
    auto gate = spatial_attention(f, zero_spatial_params<double>());
    REQUIRE(gate.shape() == std::vector<int>{7, 11});
    for (std::size_t i = 0; i < gate.size(); ++i) REQUIRE(gate[i] == 0.5);
}

TEST_CASE("1x1 spatial kernel picking the channel-average map applies sigmoid(v)") {
    Rng rng(5);
    SpatialAttentionParams<double> p = SpatialAttentionParams<double>::init(1, rng);
    p.conv_weight.at(0, 0, 0) = 1.0;  // avg map
    p.conv_weight.at(1, 0, 0) = 0.0;  // max map
    p.conv_bias.at(0) = 0.0;
    const double v = -0.75;
    Tensor<double> f({3, 4, 4}, v);
    auto gate = spatial_attention(f, p);
    for (std::size_t i = 0; i < gate.size(); ++i)
        REQUIRE(gate[i] == Catch::Approx(sigmoid(v)).epsilon(1e-12));
}

TEST_CASE("even spatial kernels are rejected at construction") {
    Rng rng(6);
    REQUIRE_THROWS_AS(SpatialAttentionParams<double>::init(4, rng), std::invalid_argument);
}

TEST_CASE("zero-initialized cbam scales the input by exactly one quarter") {
    Rng rng(7);
    Tensor<double> f = random_tensor<double>({3, 4, 5}, rng, -2.0, 2.0);
    auto out = cbam_forward(f, zero_channel_params<double>(3), zero_spatial_params<double>());
    REQUIRE(out.shape() == f.shape());
    for (std::size_t i = 0; i < f.size(); ++i)
        REQUIRE(std::abs(out[i] - 0.25 * f[i]) <= 1e-12);
}

TEST_CASE("cbam is multiplicative: zero in, zero out; gates contract") {
    Rng rng(8);
    auto cp = ChannelAttentionParams<double>::init(4, 2, rng);
    auto sp = SpatialAttentionParams<double>::init(3, rng);
    Tensor<double> zero({4, 5, 5});
    auto out0 = cbam_forward(zero, cp, sp);
    for (std::size_t i = 0; i < out0.size(); ++i) REQUIRE(out0[i] == 0.0);

    Tensor<double> f = random_tensor<double>({4, 5, 5}, rng, -3.0, 3.0);
    auto out = cbam_forward(f, cp, sp);
    for (std::size_t i = 0; i < f.size(); ++i) REQUIRE(std::abs(out[i]) <= std::abs(f[i]));
}

TEST_CASE("channel-then-spatial order differs from spatial-then-channel") {
    Rng rng(9);
    auto cp = ChannelAttentionParams<double>::init(4, 2, rng);
    auto sp = SpatialAttentionParams<double>::init(3, rng);
    Tensor<double> f = random_tensor<double>({4, 6, 6}, rng, -2.0, 2.0);
    const auto sequential = cbam_forward(f, cp, sp);

    // hand-built reversed order using the functional pieces
    auto ms = spatial_attention(f, sp);
    Tensor<double> swapped(f.shape());
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 36; ++i)
            swapped[static_cast<std::size_t>(c) * 36 + i] =
                f[static_cast<std::size_t>(c) * 36 + i] * ms[static_cast<std::size_t>(i)];
    auto mc = channel_attention(swapped, cp);
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 36; ++i)
            swapped[static_cast<std::size_t>(c) * 36 + i] *= mc.at(c);

    bool differs = false;
    for (std::size_t i = 0; i < f.size(); ++i)
        differs |= std::abs(sequential[i] - swapped[i]) > 1e-12;
    REQUIRE(differs);
}

TEST_CASE("cbam block batch forward agrees with the per-map functional path") {
    Rng rng(10);
    CbamBlock<double> block(3, 2, 5, rng);
    Tensor<double> batch = random_tensor<double>({2, 3, 4, 6}, rng);
    auto out = block.forward(batch);
    for (int n = 0; n < 2; ++n) {
        Tensor<double> single({3, 4, 6});
        for (std::size_t i = 0; i < single.size(); ++i) single[i] = batch[n * single.size() + i];
        auto ref = cbam_forward(single, block.channel_params(), block.spatial_params());
        for (std::size_t i = 0; i < single.size(); ++i)
            REQUIRE(out[n * single.size() + i] == Catch::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("cbam block gradients match finite differences") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        CbamBlock<double> block(4, 2, 3, rng);
        Tensor<double> x = random_tensor<double>({1, 4, 5, 6}, rng);
        Tensor<double> probe = random_tensor<double>({1, 4, 5, 6}, rng);
        auto loss = [&] {
            auto y = block.forward(x);
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
            return s;
        };
        loss();
        Tensor<double> dx = block.backward(probe);
        REQUIRE(max_relative_gradient_error<double>(x, loss, dx) <= 1e-4);

        // parameter gradients for every tensor in the block
        std::vector<nn::ParamRef<double>> refs;
        block.visit("cbam", [&](nn::ParamRef<double> p) { refs.push_back(p); });
        REQUIRE(refs.size() == 6);
        for (auto& p : refs) {
            p.grad->fill(0.0);
            loss();
            block.backward(probe);
            Tensor<double> analytic = *p.grad;
            REQUIRE(max_relative_gradient_error<double>(*p.value, loss, analytic) <= 1e-4);
            p.grad->fill(0.0);
        }
    }
}
