#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "solarnet/checkpoint.hpp"
#include "solarnet/rng.hpp"
#include "solarnet/train.hpp"

namespace solarnet {

struct BenchmarkResult {
    double fps = 0.0;
    int batch_size = 32;
    int warmup_iters = 10;
    int timed_iters = 50;
    double size_mb = 0.0;
    std::optional<double> train_time_s;
    std::string hardware_label = "unspecified-cpu";

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["fps"] = fps;
        j["batch_size"] = batch_size;
        j["warmup_iters"] = warmup_iters;
        j["timed_iters"] = timed_iters;
        j["size_mb"] = size_mb;
        if (train_time_s) j["train_time_s"] = *train_time_s;
        j["hardware_label"] = hardware_label;
        return j;
    }
};

using InferenceRunner = std::function<void(const Tensor<float>&)>;

// Pure-forward throughput on synthetic inputs at the preprocess dims: warmup
// first, then a monotonic-clock window around the timed iterations. Disk I/O
// and preprocessing are deliberately outside the measurement.
inline BenchmarkResult measure_fps(const InferenceRunner& runner, int input_size,
                                   int batch_size = 32, int warmup_iters = 10,
                                   int timed_iters = 50,
                                   const std::string& hardware_label = "unspecified-cpu") {
    if (timed_iters < 1) throw std::invalid_argument("benchmark: timed_iters must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("benchmark: batch_size must be >= 1");
    Rng rng = rng_for(0, stream_tag("bench_inputs"));
    Tensor<float> batch({batch_size, 3, input_size, input_size});
    for (std::size_t i = 0; i < batch.size(); ++i)
        batch[i] = static_cast<float>(rng.uniform(-2.0, 2.0));

    for (int i = 0; i < warmup_iters; ++i) runner(batch);
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < timed_iters; ++i) runner(batch);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    BenchmarkResult result;
    result.batch_size = batch_size;
    result.warmup_iters = warmup_iters;
    result.timed_iters = timed_iters;
    result.hardware_label = hardware_label;
    result.fps = static_cast<double>(timed_iters) * batch_size / seconds;
    return result;
}

inline double measure_size(const std::filesystem::path& checkpoint_path) {
    return static_cast<double>(std::filesystem::file_size(checkpoint_path)) / (1024.0 * 1024.0);
}

// Loads the checkpoint read-only and measures eval-mode forward throughput.
inline BenchmarkResult measure_fps_checkpoint(const std::filesystem::path& checkpoint_path,
                                              int input_size, int batch_size = 32,
                                              int warmup_iters = 10, int timed_iters = 50,
                                              const std::string& hardware_label = "unspecified-cpu") {
    Model<float> model = load_checkpoint(checkpoint_path);
    BenchmarkResult result = measure_fps(
        [&model](const Tensor<float>& batch) { model.forward(batch, nn::Mode::eval); },
        input_size, batch_size, warmup_iters, timed_iters, hardware_label);
    result.size_mb = measure_size(checkpoint_path);
    return result;
}

template <typename Fn>
double measure_wall_seconds(Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Wall clock around a full training run, monotonic clock.
inline std::pair<TrainResult, double> time_training(const TrainConfig& config,
                                                    const DatasetSplits& splits) {
    TrainResult result;
    const double seconds = measure_wall_seconds([&] { result = train(config, splits); });
    return {std::move(result), seconds};
}

}  // namespace solarnet
