#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>

#include "solarnet/data.hpp"
#include "solarnet/image.hpp"
#include "solarnet/image_io.hpp"
#include "solarnet/rng.hpp"
#include "solarnet/tensor.hpp"

namespace solarnet {

struct AugmentationPolicy {
    double hflip_prob = 0.5;
    double vflip_prob = 0.5;
    double rotation_limit_deg = 20.0;
    double brightness_jitter = 0.2;
    double contrast_jitter = 0.2;
    bool enabled = true;

    void validate() const {
        if (hflip_prob < 0 || hflip_prob > 1 || vflip_prob < 0 || vflip_prob > 1)
            throw std::invalid_argument("augmentation: flip probabilities must be in [0,1]");
        if (rotation_limit_deg < 0)
            throw std::invalid_argument("augmentation: rotation_limit_deg must be >= 0");
        if (brightness_jitter < 0 || contrast_jitter < 0)
            throw std::invalid_argument("augmentation: jitter fractions must be >= 0");
    }
};

struct PreprocessSpec {
    int target_size = 380;
    std::array<double, 3> channel_means = {0.485, 0.456, 0.406};
    std::array<double, 3> channel_stds = {0.229, 0.224, 0.225};

    void validate() const {
        if (target_size < 1) throw std::invalid_argument("preprocess: target_size must be > 0");
        for (double s : channel_stds)
            if (s <= 0) throw std::invalid_argument("preprocess: channel stds must be > 0");
    }
};

// Randomness key for one augmented sample. Keyed by (seed, epoch, index) --
// never by worker identity -- so the produced set is schedule-independent.
struct AugmentKey {
    std::uint64_t seed = 0;
    int epoch = 0;
    std::size_t index = 0;
};

struct AugmentParams {
    bool hflip = false;
    bool vflip = false;
    double rotation_deg = 0.0;
    double brightness_factor = 1.0;
    double contrast_factor = 1.0;
};

// All five draws happen in a fixed order regardless of policy values, so the
// stream layout never depends on configuration.
inline AugmentParams draw_augment_params(const AugmentationPolicy& policy, const AugmentKey& key) {
    policy.validate();
    Rng rng = rng_for(key.seed, stream_tag("augment"),
                      static_cast<std::uint64_t>(key.epoch), key.index);
    AugmentParams p;
    p.hflip = rng.uniform() < policy.hflip_prob;
    p.vflip = rng.uniform() < policy.vflip_prob;
    p.rotation_deg = rng.uniform(-policy.rotation_limit_deg, policy.rotation_limit_deg);
    p.brightness_factor = rng.uniform(1.0 - policy.brightness_jitter, 1.0 + policy.brightness_jitter);
    p.contrast_factor = rng.uniform(1.0 - policy.contrast_jitter, 1.0 + policy.contrast_jitter);
    return p;
}

inline Image apply_augment_params(const Image& img, const AugmentParams& p,
                                  const AugmentationPolicy& policy) {
    Image out = img;
    if (p.hflip) out = flip_horizontal(out);
    if (p.vflip) out = flip_vertical(out);
    if (policy.rotation_limit_deg > 0) out = rotate(out, p.rotation_deg);
    if (policy.brightness_jitter > 0) out = adjust_brightness(out, static_cast<float>(p.brightness_factor));
    if (policy.contrast_jitter > 0) out = adjust_contrast(out, static_cast<float>(p.contrast_factor));
    return out;
}

inline std::shared_ptr<const Image> record_pixels(const SampleRecord& record) {
    if (record.pixels) return record.pixels;
    return std::make_shared<const Image>(read_image(record.image_ref));
}

// Produces a training-only derivative: fresh provenance, inherited origin,
// class label unchanged. Applying this to val/test records is the protocol
// violation the leakage audit exists to catch, so it is refused outright.
inline SampleRecord augment(const SampleRecord& record, const AugmentationPolicy& policy,
                            const AugmentKey& key) {
    if (record.partition != Partition::train)
        throw std::runtime_error("augment called on '" + record.provenance_id + "' in partition '" +
                                 to_string(record.partition) +
                                 "': protocol violation, only train records may be augmented");
    auto src = record_pixels(record);
    SampleRecord out = record;
    out.provenance_id = record.provenance_id + "#aug-e" + std::to_string(key.epoch) + "-i" +
                        std::to_string(key.index);
    out.origin_id = record.origin_id;
    if (!policy.enabled) {
        out.pixels = src;
        return out;
    }
    const AugmentParams params = draw_augment_params(policy, key);
    out.pixels = std::make_shared<const Image>(apply_augment_params(*src, params, policy));
    return out;
}

// Resize to the square target then normalize per channel:
// out[c] = (resized[c] - mean[c]) / std[c].
template <typename T = float>
Tensor<T> preprocess(const Image& image, const PreprocessSpec& spec) {
    spec.validate();
    if (image.channels != 3)
        throw std::invalid_argument("preprocess: expected a 3-channel image, got " +
                                    std::to_string(image.channels));
    const Image resized = resize_bilinear(image, spec.target_size, spec.target_size);
    Tensor<T> out({3, spec.target_size, spec.target_size});
    const int hw = spec.target_size * spec.target_size;
    for (int c = 0; c < 3; ++c) {
        const T mean = static_cast<T>(spec.channel_means[static_cast<std::size_t>(c)]);
        const T inv_std = static_cast<T>(1.0 / spec.channel_stds[static_cast<std::size_t>(c)]);
        const float* src = resized.data.data() + static_cast<std::size_t>(c) * hw;
        T* dst = &out.at(c, 0, 0);
        for (int i = 0; i < hw; ++i) dst[i] = (static_cast<T>(src[i]) - mean) * inv_std;
    }
    return out;
}

}  // namespace solarnet
