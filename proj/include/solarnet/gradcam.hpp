#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "solarnet/augment.hpp"
#include "solarnet/image.hpp"
#include "solarnet/models.hpp"

namespace solarnet {

struct Heatmap {
    Tensor<float> values;  // (H_img, W_img), in [0,1]
    int target_class = 0;
    std::string layer_name;
    bool all_zero = false;  // nothing survived the rectifier
};

// Gradient-weighted class activation map over a named spatial layer:
// alpha_k = spatial mean of d(logit_target)/dA_k, L = relu(sum_k alpha_k A_k),
// upsampled bilinearly to the input image dims and max-normalized. Gradients
// are taken w.r.t. the pre-softmax logit.
inline Heatmap grad_cam(Model<float>& model, const Image& input, int target_class,
                        const std::string& layer, const PreprocessSpec& preprocess_spec) {
    if (target_class < 0 || target_class >= model.num_classes())
        throw std::out_of_range("grad_cam: target class outside the model head");
    Tensor<float> x = preprocess(input, preprocess_spec);
    Tensor<float> batch({1, 3, preprocess_spec.target_size, preprocess_spec.target_size});
    std::copy(x.data(), x.data() + x.size(), batch.data());
    model.forward(batch, nn::Mode::eval);

    Tensor<float> dlogits({1, model.num_classes()});
    dlogits.at(0, target_class) = 1.f;
    const Tensor<float> activations = model.feature_output(layer);
    const Tensor<float> grads = model.feature_gradient(layer, dlogits);

    const int c_n = activations.dim(1), h = activations.dim(2), w = activations.dim(3);
    Image coarse(1, h, w);
    for (int c = 0; c < c_n; ++c) {
        const float* gc = &grads.at(0, c, 0, 0);
        float alpha = 0.f;
        for (int i = 0; i < h * w; ++i) alpha += gc[i];
        alpha /= static_cast<float>(h * w);
        const float* ac = &activations.at(0, c, 0, 0);
        for (int i = 0; i < h * w; ++i) coarse.data[static_cast<std::size_t>(i)] += alpha * ac[i];
    }
    for (auto& v : coarse.data) v = std::max(v, 0.f);

    const Image upsampled = resize_bilinear(coarse, input.height, input.width);

    Heatmap hm;
    hm.target_class = target_class;
    hm.layer_name = layer;
    hm.values = Tensor<float>({input.height, input.width});
    float peak = 0.f;
    for (float v : upsampled.data) peak = std::max(peak, v);
    if (peak > 0.f) {
        for (std::size_t i = 0; i < upsampled.data.size(); ++i)
            hm.values[i] = upsampled.data[i] / peak;
    } else {
        hm.all_zero = true;
    }
    return hm;
}

// Blue-to-red colormap blended at fixed 0.5 opacity: heat color in RGB is
// (v, 0, 1-v). Fixed and documented so golden-image tests stay byte-stable.
inline Image overlay(const Heatmap& heatmap, const Image& image) {
    if (image.channels != 3 || image.height != heatmap.values.dim(0) ||
        image.width != heatmap.values.dim(1))
        throw std::invalid_argument("overlay: heatmap and image dims differ");
    Image out(3, image.height, image.width);
    const std::size_t hw = static_cast<std::size_t>(image.height) * image.width;
    for (std::size_t i = 0; i < hw; ++i) {
        const float v = heatmap.values[i];
        const float heat[3] = {v, 0.f, 1.f - v};
        for (int c = 0; c < 3; ++c)
            out.data[static_cast<std::size_t>(c) * hw + i] =
                0.5f * image.data[static_cast<std::size_t>(c) * hw + i] + 0.5f * heat[c];
    }
    return out;
}

inline void write_heatmap_csv(const std::filesystem::path& path, const Heatmap& hm) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write heatmap csv: " + path.string());
    const int h = hm.values.dim(0), w = hm.values.dim(1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (x) f << ",";
            f << hm.values.at(y, x);
        }
        f << "\n";
    }
}

}  // namespace solarnet
