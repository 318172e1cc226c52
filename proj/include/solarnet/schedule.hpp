#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace solarnet {

enum class ScheduleMode { cosine, fixed };

struct ScheduleSpec {
    double lr_max = 1e-4;
    double lr_min = 0.0;
    int horizon_T = 25;
    ScheduleMode mode = ScheduleMode::cosine;

    void validate() const {
        if (lr_min < 0) throw std::invalid_argument("schedule: lr_min must be >= 0");
        if (lr_min > lr_max) throw std::invalid_argument("schedule: lr_min must be <= lr_max");
        if (horizon_T < 1) throw std::invalid_argument("schedule: horizon_T must be >= 1");
    }
};

// Cosine mode: lr(t) = lr_min + (lr_max-lr_min)/2 * (1 + cos(pi*t/T)); fixed
// mode holds lr_max. t counts whole epochs in [0, T].
inline double lr_at(int epoch, const ScheduleSpec& spec) {
    spec.validate();
    if (epoch < 0 || epoch > spec.horizon_T)
        throw std::out_of_range("lr_at: epoch " + std::to_string(epoch) + " outside [0," +
                                std::to_string(spec.horizon_T) + "]");
    if (spec.mode == ScheduleMode::fixed) return spec.lr_max;
    const double phase = std::numbers::pi * static_cast<double>(epoch) /
                         static_cast<double>(spec.horizon_T);
    return spec.lr_min + 0.5 * (spec.lr_max - spec.lr_min) * (1.0 + std::cos(phase));
}

struct OptimizerConfig {
    double lr = 1e-4;  // driven by the schedule each epoch
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const {
        if (lr <= 0) throw std::invalid_argument("optimizer: lr must be > 0");
        if (weight_decay < 0) throw std::invalid_argument("optimizer: weight_decay must be >= 0");
    }
};

}  // namespace solarnet
