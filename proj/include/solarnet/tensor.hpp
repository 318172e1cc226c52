#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace solarnet {

// Dense row-major numeric array. Rank up to 4 is what the toolkit uses:
// (C,H,W) feature maps and (N,C,H,W) batches.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape, T fill = T{}) : shape_(std::move(shape)) {
        std::size_t n = 1;
        for (int d : shape_) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        data_.assign(n, fill);
    }

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(int a) { return data_[idx(a)]; }
    T& at(int a, int b) { return data_[idx(a, b)]; }
    T& at(int a, int b, int c) { return data_[idx(a, b, c)]; }
    T& at(int a, int b, int c, int d) { return data_[idx(a, b, c, d)]; }
    const T& at(int a) const { return data_[idx(a)]; }
    const T& at(int a, int b) const { return data_[idx(a, b)]; }
    const T& at(int a, int b, int c) const { return data_[idx(a, b, c)]; }
    const T& at(int a, int b, int c, int d) const { return data_[idx(a, b, c, d)]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor& operator+=(const Tensor& o) {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Tensor& operator*=(T s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    T sum() const { return std::accumulate(data_.begin(), data_.end(), T{}); }

    T max_abs() const {
        T m{};
        for (T v : data_) m = std::max(m, v < T{} ? -v : v);
        return m;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + ")";
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    std::size_t idx(int a) const {
        assert(rank() == 1);
        return static_cast<std::size_t>(a);
    }
    std::size_t idx(int a, int b) const {
        assert(rank() == 2);
        return static_cast<std::size_t>(a) * shape_[1] + b;
    }
    std::size_t idx(int a, int b, int c) const {
        assert(rank() == 3);
        return (static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c;
    }
    std::size_t idx(int a, int b, int c, int d) const {
        assert(rank() == 4);
        return ((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
    }

    void require_same_shape(const Tensor& o, const char* op) const {
        if (!same_shape(o))
            throw std::invalid_argument(std::string("Tensor") + op + ": shape mismatch " +
                                        shape_str() + " vs " + o.shape_str());
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

}  // namespace solarnet
