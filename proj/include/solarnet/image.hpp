#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace solarnet {

// Decoded image: CHW float pixels in [0,1].
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int c, int h, int w, float fill = 0.f)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, fill) {}

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    bool empty() const { return data.empty(); }
};

namespace detail {

// Symmetric reflection with the edge pixel included: indices ...cba|abc...
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

inline float clamp01(float v) { return std::min(1.f, std::max(0.f, v)); }

}  // namespace detail

inline Image flip_horizontal(const Image& img) {
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

inline Image flip_vertical(const Image& img) {
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(c, y, x) = img.at(c, img.height - 1 - y, x);
    return out;
}

// Rotation about the image center, bilinear sampling, reflected borders.
inline Image rotate(const Image& img, double degrees) {
    const double rad = degrees * std::acos(-1.0) / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double cy = (img.height - 1) * 0.5, cx = (img.width - 1) * 0.5;
    Image out(img.channels, img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // inverse mapping: rotate the destination point back by -degrees
            const double dy = y - cy, dx = x - cx;
            const double sy = cy + (sn * dx + cs * dy);
            const double sx = cx + (cs * dx - sn * dy);
            const int y0 = static_cast<int>(std::floor(sy));
            const int x0 = static_cast<int>(std::floor(sx));
            const float fy = static_cast<float>(sy - y0);
            const float fx = static_cast<float>(sx - x0);
            const int ya = detail::reflect_index(y0, img.height);
            const int yb = detail::reflect_index(y0 + 1, img.height);
            const int xa = detail::reflect_index(x0, img.width);
            const int xb = detail::reflect_index(x0 + 1, img.width);
            for (int c = 0; c < img.channels; ++c) {
                const float top = img.at(c, ya, xa) * (1.f - fx) + img.at(c, ya, xb) * fx;
                const float bot = img.at(c, yb, xa) * (1.f - fx) + img.at(c, yb, xb) * fx;
                out.at(c, y, x) = top * (1.f - fy) + bot * fy;
            }
        }
    }
    return out;
}

// Bilinear resize, half-pixel-center convention, clamped sampling.
inline Image resize_bilinear(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_bilinear: empty target");
    if (img.height == out_h && img.width == out_w) return img;
    Image out(img.channels, out_h, out_w);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const float wy = static_cast<float>(fy - y0);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const float wx = static_cast<float>(fx - x0);
            for (int c = 0; c < img.channels; ++c) {
                const float top = img.at(c, y0, x0) * (1.f - wx) + img.at(c, y0, x1) * wx;
                const float bot = img.at(c, y1, x0) * (1.f - wx) + img.at(c, y1, x1) * wx;
                out.at(c, y, x) = top * (1.f - wy) + bot * wy;
            }
        }
    }
    return out;
}

inline Image adjust_brightness(const Image& img, float factor) {
    Image out = img;
    for (auto& v : out.data) v = detail::clamp01(v * factor);
    return out;
}

// Blend toward the per-image mean intensity; factor 1 is the identity.
inline Image adjust_contrast(const Image& img, float factor) {
    if (factor == 1.f) return img;
    double mean = 0.0;
    for (float v : img.data) mean += v;
    mean /= static_cast<double>(img.data.size());
    const float m = static_cast<float>(mean);
    Image out = img;
    for (auto& v : out.data) v = detail::clamp01(m + (v - m) * factor);
    return out;
}

}  // namespace solarnet
