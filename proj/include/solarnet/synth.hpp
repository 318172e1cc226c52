#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "solarnet/image.hpp"
#include "solarnet/image_io.hpp"
#include "solarnet/rng.hpp"

namespace solarnet {

// Desk-scale verification corpus: each class is a colored shape in a
// class-determined quadrant (quadrant = class index mod 4) over a noise
// background, with a ground-truth shape mask next to every image under
// <class>/masks/. Fixed seeds reproduce the corpus byte for byte.
struct SynthSpec {
    int num_classes = 6;
    int per_class = 50;
    int image_size = 64;
    std::uint64_t seed = 0;
    std::vector<std::string> class_names;  // defaults to class_0..class_{K-1}
    std::vector<int> per_class_counts;     // defaults to per_class everywhere

    void validate() const {
        if (num_classes < 2) throw std::invalid_argument("synth: need at least 2 classes");
        if (per_class < 1) throw std::invalid_argument("synth: per_class must be >= 1");
        if (image_size < 16) throw std::invalid_argument("synth: image_size must be >= 16");
        if (!class_names.empty() && static_cast<int>(class_names.size()) != num_classes)
            throw std::invalid_argument("synth: class_names length must match num_classes");
        if (!per_class_counts.empty() &&
            static_cast<int>(per_class_counts.size()) != num_classes)
            throw std::invalid_argument("synth: per_class_counts length must match num_classes");
    }
};

inline int synth_class_quadrant(int class_idx) { return class_idx % 4; }

namespace detail {

inline std::array<float, 3> synth_palette(int class_idx) {
    static constexpr std::array<std::array<float, 3>, 8> palette = {{
        {0.95f, 0.15f, 0.15f},  // red
        {0.15f, 0.90f, 0.20f},  // green
        {0.20f, 0.30f, 0.95f},  // blue
        {0.95f, 0.90f, 0.15f},  // yellow
        {0.90f, 0.20f, 0.90f},  // magenta
        {0.15f, 0.90f, 0.90f},  // cyan
        {0.95f, 0.55f, 0.10f},  // orange
        {0.60f, 0.25f, 0.90f},  // purple
    }};
    return palette[static_cast<std::size_t>(class_idx) % palette.size()];
}

}  // namespace detail

struct SynthSample {
    Image image;
    Image mask;  // 1 channel, shape pixels at 1
};

inline SynthSample make_synth_sample(const SynthSpec& spec, int class_idx, int sample_idx) {
    const int s = spec.image_size;
    Rng rng = rng_for(spec.seed, stream_tag("synth"), static_cast<std::uint64_t>(class_idx),
                      static_cast<std::uint64_t>(sample_idx));
    SynthSample out;
    out.image = Image(3, s, s);
    out.mask = Image(1, s, s);
    for (auto& v : out.image.data) v = static_cast<float>(rng.uniform(0.0, 0.35));

    const int quadrant = synth_class_quadrant(class_idx);
    const int half = s / 2;
    const int qy = (quadrant / 2) * half;  // 0,1 -> top; 2,3 -> bottom
    const int qx = (quadrant % 2) * half;
    const int side = half / 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(half / 4 + 1)));
    const int max_off_y = std::max(1, half - side);
    const int max_off_x = std::max(1, half - side);
    const int y0 = qy + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_off_y)));
    const int x0 = qx + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_off_x)));
    const auto color = detail::synth_palette(class_idx);
    const float shade = static_cast<float>(rng.uniform(0.85, 1.0));
    const bool circle = (class_idx / 4) % 2 == 1;
    const float r = side * 0.5f;
    const float cy = y0 + r, cx = x0 + r;
    for (int y = y0; y < std::min(s, y0 + side); ++y) {
        for (int x = x0; x < std::min(s, x0 + side); ++x) {
            if (circle) {
                const float dy = y + 0.5f - cy, dx = x + 0.5f - cx;
                if (dy * dy + dx * dx > r * r) continue;
            }
            for (int c = 0; c < 3; ++c)
                out.image.at(c, y, x) = color[static_cast<std::size_t>(c)] * shade;
            out.mask.at(0, y, x) = 1.f;
        }
    }
    return out;
}

inline std::vector<std::string> synth_class_names(const SynthSpec& spec) {
    if (!spec.class_names.empty()) return spec.class_names;
    std::vector<std::string> names;
    for (int k = 0; k < spec.num_classes; ++k) names.push_back("class_" + std::to_string(k));
    return names;
}

inline void generate_synthetic_corpus(const std::filesystem::path& dir, const SynthSpec& spec,
                                      bool force = false) {
    namespace fs = std::filesystem;
    spec.validate();
    if (fs::exists(dir) && !fs::is_empty(dir) && !force)
        throw std::runtime_error("target directory not empty: " + dir.string() +
                                 " (pass --force to overwrite)");
    const auto names = synth_class_names(spec);
    for (int k = 0; k < spec.num_classes; ++k) {
        const fs::path class_dir = dir / names[static_cast<std::size_t>(k)];
        fs::create_directories(class_dir / "masks");
        const int count = spec.per_class_counts.empty()
                              ? spec.per_class
                              : spec.per_class_counts[static_cast<std::size_t>(k)];
        for (int i = 0; i < count; ++i) {
            char stem[32];
            std::snprintf(stem, sizeof(stem), "img_%04d.png", i);
            const SynthSample sample = make_synth_sample(spec, k, i);
            write_image(class_dir / stem, sample.image);
            write_image(class_dir / "masks" / stem, sample.mask);
        }
    }
}

}  // namespace solarnet
