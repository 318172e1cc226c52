#include <catch2/catch_amalgamated.hpp>

#include "solarnet/nn.hpp"
#include "test_helpers.hpp"

using namespace solarnet;

namespace {

// Scalar probe loss: fixed random weighting of the output tensor.
template <typename T>
T weighted_sum(const Tensor<T>& y, const Tensor<T>& w) {
    T s{};
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
    return s;
}

}  // namespace

TEST_CASE("conv2d forward matches a hand-computed 1x1 case") {
    Rng rng(0);
    nn::Conv2d<double> conv(1, 1, 1, 1, 0, rng);
    conv.weight().fill(2.0);
    conv.bias().fill(0.5);
    Tensor<double> x({1, 1, 2, 2});
    x.at(0, 0, 0, 0) = 1.0;
    x.at(0, 0, 0, 1) = -1.0;
    x.at(0, 0, 1, 0) = 3.0;
    x.at(0, 0, 1, 1) = 0.0;
    auto y = conv.forward(x);
    REQUIRE(y.at(0, 0, 0, 0) == Catch::Approx(2.5));
    REQUIRE(y.at(0, 0, 0, 1) == Catch::Approx(-1.5));
    REQUIRE(y.at(0, 0, 1, 0) == Catch::Approx(6.5));
    REQUIRE(y.at(0, 0, 1, 1) == Catch::Approx(0.5));
}

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(7);
    nn::Conv2d<double> conv(2, 3, 3, 1, 1, rng);
    Tensor<double> x = random_tensor<double>({2, 2, 5, 4}, rng);
    Tensor<double> probe = random_tensor<double>({2, 3, 5, 4}, rng);
    auto loss = [&] { return weighted_sum(conv.forward(x), probe); };
    loss();
    Tensor<double> dx = conv.backward(probe);
    REQUIRE(max_relative_gradient_error<double>(x, loss, dx) < 1e-6);

    Tensor<double>* w = nullptr;
    Tensor<double> dw;
    conv.visit("conv", [&](nn::ParamRef<double> p) {
        if (p.name == "conv.weight") {
            w = p.value;
            dw = *p.grad;
        }
    });
    REQUIRE(w != nullptr);
    REQUIRE(max_relative_gradient_error<double>(*w, loss, dw) < 1e-6);
}

TEST_CASE("strided conv2d gradient check") {
    Rng rng(17);
    nn::Conv2d<double> conv(1, 2, 3, 2, 1, rng);
    Tensor<double> x = random_tensor<double>({1, 1, 7, 7}, rng);
    auto y0 = conv.forward(x);
    Tensor<double> probe = random_tensor<double>(y0.shape(), rng);
    auto loss = [&] { return weighted_sum(conv.forward(x), probe); };
    Tensor<double> dx = conv.backward(probe);
    REQUIRE(max_relative_gradient_error<double>(x, loss, dx) < 1e-6);
}

TEST_CASE("batch norm normalizes in train mode and uses running stats in eval") {
    Rng rng(3);
    nn::BatchNorm2d<double> bn(2);
    Tensor<double> x = random_tensor<double>({4, 2, 3, 3}, rng, 2.0, 6.0);
    auto y = bn.forward(x, nn::Mode::train);
    for (int c = 0; c < 2; ++c) {
        double mean = 0.0, var = 0.0;
        for (int n = 0; n < 4; ++n)
            for (int i = 0; i < 9; ++i) mean += (&y.at(n, c, 0, 0))[i];
        mean /= 36.0;
        for (int n = 0; n < 4; ++n)
            for (int i = 0; i < 9; ++i) {
                const double d = (&y.at(n, c, 0, 0))[i] - mean;
                var += d * d;
            }
        var /= 36.0;
        REQUIRE(std::abs(mean) < 1e-10);
        REQUIRE(var == Catch::Approx(1.0).margin(1e-3));
    }
    // eval path should differ from train path on fresh data drawn elsewhere
    Tensor<double> x2 = random_tensor<double>({4, 2, 3, 3}, rng, -3.0, -1.0);
    auto y_eval = bn.forward(x2, nn::Mode::eval);
    auto y_train = bn.forward(x2, nn::Mode::train);
    bool same = true;
    for (std::size_t i = 0; i < y_eval.size(); ++i) same &= (y_eval[i] == y_train[i]);
    REQUIRE_FALSE(same);
}

TEST_CASE("batch norm gradient check") {
    Rng rng(11);
    nn::BatchNorm2d<double> bn(3);
    Tensor<double> x = random_tensor<double>({2, 3, 4, 3}, rng);
    Tensor<double> probe = random_tensor<double>({2, 3, 4, 3}, rng);
    auto loss = [&] { return weighted_sum(bn.forward(x, nn::Mode::train), probe); };
    loss();
    Tensor<double> dx = bn.backward(probe);
    REQUIRE(max_relative_gradient_error<double>(x, loss, dx) < 1e-4);
}

TEST_CASE("batch norm eval-mode gradient check (frozen running stats)") {
    Rng rng(12);
    nn::BatchNorm2d<double> bn(2);
    // populate running stats, then differentiate the eval path
    bn.forward(random_tensor<double>({4, 2, 3, 3}, rng, -2.0, 2.0), nn::Mode::train);
    Tensor<double> x = random_tensor<double>({2, 2, 3, 3}, rng);
    Tensor<double> probe = random_tensor<double>({2, 2, 3, 3}, rng);
    auto loss = [&] { return weighted_sum(bn.forward(x, nn::Mode::eval), probe); };
    loss();
    Tensor<double> dx = bn.backward(probe);
    REQUIRE(max_relative_gradient_error<double>(x, loss, dx) < 1e-6);
}

TEST_CASE("max pool routes gradients to the argmax") {
    nn::MaxPool2d<double> pool(2, 2);
    Tensor<double> x({1, 1, 2, 2});
    x.at(0, 0, 0, 0) = 1.0;
    x.at(0, 0, 0, 1) = 4.0;
    x.at(0, 0, 1, 0) = 2.0;
    x.at(0, 0, 1, 1) = 3.0;
    auto y = pool.forward(x);
    REQUIRE(y.size() == 1);
    REQUIRE(y[0] == 4.0);
    Tensor<double> dy({1, 1, 1, 1});
    dy[0] = 5.0;
    auto dx = pool.backward(dy);
    REQUIRE(dx.at(0, 0, 0, 1) == 5.0);
    REQUIRE(dx.at(0, 0, 0, 0) == 0.0);
}

TEST_CASE("global average pool and linear gradients") {
    Rng rng(23);
    nn::GlobalAvgPool<double> gap;
    nn::Linear<double> lin(3, 4, rng);
    Tensor<double> x = random_tensor<double>({2, 3, 4, 4}, rng);
    Tensor<double> probe = random_tensor<double>({2, 4}, rng);
    auto loss = [&] { return weighted_sum(lin.forward(gap.forward(x)), probe); };
    loss();
    Tensor<double> dx = gap.backward(lin.backward(probe));
    REQUIRE(max_relative_gradient_error<double>(x, loss, dx) < 1e-6);
}

TEST_CASE("dropout reproduces masks for a fixed key and is identity in eval") {
    nn::Dropout<float> drop(0.4f);
    Tensor<float> x({2, 8}, 1.f);
    drop.set_step_key(99);
    auto a = drop.forward(x, nn::Mode::train);
    drop.set_step_key(99);
    auto b = drop.forward(x, nn::Mode::train);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
    auto c = drop.forward(x, nn::Mode::eval);
    for (std::size_t i = 0; i < c.size(); ++i) REQUIRE(c[i] == 1.f);
    REQUIRE_THROWS_AS(nn::Dropout<float>(1.f), std::invalid_argument);
}
