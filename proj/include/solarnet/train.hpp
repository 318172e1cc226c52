#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "solarnet/augment.hpp"
#include "solarnet/checkpoint.hpp"
#include "solarnet/data.hpp"
#include "solarnet/loss.hpp"
#include "solarnet/metrics.hpp"
#include "solarnet/models.hpp"
#include "solarnet/optim.hpp"
#include "solarnet/schedule.hpp"

namespace solarnet {

enum class LossKind { focal, cross_entropy };

struct TrainConfig {
    int epochs = 15;
    int batch_size_train = 16;
    int batch_size_eval = 32;
    OptimizerConfig optimizer;
    LossKind loss = LossKind::focal;
    FocalLossSpec focal;
    ScheduleSpec schedule;
    std::uint64_t seed = 0;
    ModelSpec model;
    AugmentationPolicy augmentation;
    PreprocessSpec preprocess;
    int oversample_target = 0;  // 0 disables balancing
    bool freeze_backbone = false;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
        if (batch_size_train < 1 || batch_size_eval < 1)
            throw std::invalid_argument("train: batch sizes must be >= 1");
        if (schedule.horizon_T < epochs - 1 && epochs > 1)
            throw std::invalid_argument("train: schedule horizon_T shorter than the epoch range");
        optimizer.validate();
        focal.validate();
        schedule.validate();
        model.validate();
        augmentation.validate();
        preprocess.validate();
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["epochs"] = epochs;
        j["batch_size_train"] = batch_size_train;
        j["batch_size_eval"] = batch_size_eval;
        j["optimizer"] = {{"lr", optimizer.lr},
                          {"weight_decay", optimizer.weight_decay},
                          {"beta1", optimizer.beta1},
                          {"beta2", optimizer.beta2},
                          {"eps", optimizer.eps}};
        j["loss"] = loss == LossKind::focal ? "focal" : "cross_entropy";
        j["focal"] = {{"gamma", focal.gamma},
                      {"alpha", focal.alpha},
                      {"reduction", focal.reduction == Reduction::mean ? "mean" : "sum"}};
        j["schedule"] = {{"mode", schedule.mode == ScheduleMode::cosine ? "cosine" : "fixed"},
                         {"lr_max", schedule.lr_max},
                         {"lr_min", schedule.lr_min},
                         {"horizon_T", schedule.horizon_T}};
        j["seed"] = seed;
        j["model"] = model.to_json();
        j["augmentation"] = {{"enabled", augmentation.enabled},
                             {"hflip_prob", augmentation.hflip_prob},
                             {"vflip_prob", augmentation.vflip_prob},
                             {"rotation_limit_deg", augmentation.rotation_limit_deg},
                             {"brightness_jitter", augmentation.brightness_jitter},
                             {"contrast_jitter", augmentation.contrast_jitter}};
        j["preprocess"] = {{"target_size", preprocess.target_size},
                           {"channel_means", preprocess.channel_means},
                           {"channel_stds", preprocess.channel_stds}};
        j["oversample_target"] = oversample_target;
        j["freeze_backbone"] = freeze_backbone;
        return j;
    }
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_macro_f1 = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_macro_f1 = -1.0;
    double train_seconds = 0.0;  // wall clock; kept in the isolated timing block

    // Everything outside "timing" is deterministic for a fixed config+seed.
    nlohmann::ordered_json to_json(const TrainConfig& config) const {
        nlohmann::ordered_json j;
        j["config"] = config.to_json();
        j["epochs"] = nlohmann::ordered_json::array();
        for (const auto& e : epochs) {
            j["epochs"].push_back({{"epoch", e.epoch},
                                   {"lr", e.lr},
                                   {"train_loss", e.train_loss},
                                   {"val_accuracy", e.val_accuracy},
                                   {"val_macro_f1", e.val_macro_f1}});
        }
        j["best"] = {{"epoch", best_epoch}, {"val_macro_f1", best_val_macro_f1}};
        j["timing"] = {{"train_seconds", train_seconds}};
        return j;
    }
};

struct TrainResult {
    std::string checkpoint_blob;  // best-validation-F1 checkpoint, serialized
    CheckpointMetadata checkpoint_meta;
    TrainHistory history;
};

// Decoded-image cache with a byte cap; oversized corpora simply bypass it.
class ImageCache {
public:
    explicit ImageCache(std::size_t max_bytes = std::size_t{512} << 20) : cap_(max_bytes) {}

    std::shared_ptr<const Image> get(const SampleRecord& record) {
        if (record.pixels) return record.pixels;
        auto it = cache_.find(record.image_ref);
        if (it != cache_.end()) return it->second;
        auto img = std::make_shared<const Image>(read_image(record.image_ref));
        const std::size_t bytes = img->data.size() * sizeof(float);
        if (bytes_ + bytes <= cap_) {
            cache_.emplace(record.image_ref, img);
            bytes_ += bytes;
        }
        return img;
    }

private:
    std::size_t cap_, bytes_ = 0;
    std::map<std::string, std::shared_ptr<const Image>> cache_;
};

struct EvalOutput {
    Metrics metrics;
    ConfusionMatrix matrix;
    std::vector<int> predictions;
    std::vector<int> labels;
    Tensor<double> scores;  // (n,K) softmax probabilities
};

// Held-out evaluation on raw records only; derivative (augmented or
// oversampled) records are refused -- evaluating on them is the leakage this
// toolkit exists to rule out.
inline EvalOutput evaluate(Model<float>& model, const std::vector<SampleRecord>& records,
                           const std::vector<std::string>& classes,
                           const PreprocessSpec& preprocess_spec, int batch_size,
                           ImageCache* cache = nullptr) {
    if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
    for (const auto& r : records)
        if (r.is_derivative())
            throw std::runtime_error("evaluate: record '" + r.provenance_id +
                                     "' is a derivative; evaluation sets must stay raw");
    const int k = model.num_classes();
    if (static_cast<int>(classes.size()) != k)
        throw std::invalid_argument("evaluate: class list does not match model head");

    DatasetManifest lookup;
    lookup.classes = classes;

    EvalOutput out;
    const int n = static_cast<int>(records.size());
    out.scores = Tensor<double>({n, k});
    out.predictions.resize(static_cast<std::size_t>(n));
    out.labels.resize(static_cast<std::size_t>(n));
    ImageCache local_cache(0);
    ImageCache& images = cache ? *cache : local_cache;

    const int s = preprocess_spec.target_size;
    for (int start = 0; start < n; start += batch_size) {
        const int b = std::min(batch_size, n - start);
        Tensor<float> batch({b, 3, s, s});
        for (int i = 0; i < b; ++i) {
            const auto& rec = records[static_cast<std::size_t>(start + i)];
            Tensor<float> x = preprocess(*images.get(rec), preprocess_spec);
            std::copy(x.data(), x.data() + x.size(), &batch.at(i, 0, 0, 0));
            out.labels[static_cast<std::size_t>(start + i)] = lookup.class_index(rec.class_label);
        }
        Tensor<float> logits = model.forward(batch, nn::Mode::eval);
        for (int i = 0; i < b; ++i) {
            // softmax row in double for downstream curve work
            double m = logits.at(i, 0);
            for (int c = 1; c < k; ++c) m = std::max(m, static_cast<double>(logits.at(i, c)));
            double z = 0.0;
            for (int c = 0; c < k; ++c) z += std::exp(static_cast<double>(logits.at(i, c)) - m);
            int argmax = 0;
            for (int c = 0; c < k; ++c) {
                const double p = std::exp(static_cast<double>(logits.at(i, c)) - m) / z;
                out.scores.at(start + i, c) = p;
                if (logits.at(i, c) > logits.at(i, argmax)) argmax = c;
            }
            out.predictions[static_cast<std::size_t>(start + i)] = argmax;
        }
    }
    out.matrix = confusion(out.predictions, out.labels, k);
    out.metrics = metrics_from_confusion(out.matrix);
    return out;
}

// Deterministic training loop: audits the split protocol, then per epoch sets
// the scheduled lr, shuffles seeded batches, applies fresh keyed augmentation,
// steps AdamW, and tracks the best validation macro-F1 checkpoint.
inline TrainResult train(const TrainConfig& config_in, const DatasetSplits& splits) {
    TrainConfig config = config_in;
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<SampleRecord> train_records =
        config.oversample_target > 0
            ? balance_by_oversampling(splits.train, config.oversample_target, config.seed)
            : splits.train;

    const LeakageReport audit = verify_no_leakage(splits, train_records);
    if (!audit.pass) {
        std::string msg = "train: leakage audit failed;";
        for (std::size_t i = 0; i < audit.violations.size(); ++i)
            msg += " [" + audit.violations[i] + ": " + audit.reasons[i] + "]";
        throw std::runtime_error(msg);
    }
    if (train_records.empty()) throw std::runtime_error("train: empty training partition");

    config.model.num_classes = static_cast<int>(splits.classes.size());
    Model<float> model(config.model, config.seed);

    std::vector<nn::ParamRef<float>> optim_params;
    model.visit_params([&](nn::ParamRef<float> p) {
        if (config.freeze_backbone && p.name.rfind("backbone.", 0) == 0) return;
        optim_params.push_back(p);
    });
    std::vector<nn::ParamRef<float>> all_params;
    model.visit_params([&](nn::ParamRef<float> p) { all_params.push_back(p); });
    AdamW<float> optimizer(optim_params, config.optimizer);

    DatasetManifest lookup;
    lookup.classes = splits.classes;
    ImageCache cache;

    TrainResult result;
    const int n = static_cast<int>(train_records.size());
    const int s = config.preprocess.target_size;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(epoch, config.schedule);
        optimizer.set_lr(lr);

        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        Rng shuffle_rng = rng_for(config.seed, stream_tag("batch_order"),
                                  static_cast<std::uint64_t>(epoch));
        deterministic_shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        int step = 0;
        for (int start = 0; start < n; start += config.batch_size_train, ++step) {
            const int b = std::min(config.batch_size_train, n - start);
            Tensor<float> batch({b, 3, s, s});
            std::vector<int> targets(static_cast<std::size_t>(b));
            for (int i = 0; i < b; ++i) {
                const int rec_idx = order[static_cast<std::size_t>(start + i)];
                const SampleRecord& src = train_records[static_cast<std::size_t>(rec_idx)];
                SampleRecord src_cached = src;
                src_cached.pixels = cache.get(src);
                const SampleRecord aug = augment(
                    src_cached, config.augmentation,
                    AugmentKey{config.seed, epoch, static_cast<std::size_t>(rec_idx)});
                Tensor<float> x = preprocess(*aug.pixels, config.preprocess);
                std::copy(x.data(), x.data() + x.size(), &batch.at(i, 0, 0, 0));
                targets[static_cast<std::size_t>(i)] = lookup.class_index(src.class_label);
            }

            model.set_dropout_key(rng_for(config.seed, stream_tag("dropout"),
                                          static_cast<std::uint64_t>(epoch),
                                          static_cast<std::uint64_t>(step))
                                      .next_u64());
            Tensor<float> logits = model.forward(batch, nn::Mode::train);
            Tensor<float> dlogits;
            float loss_value;
            if (config.loss == LossKind::focal)
                loss_value = focal_loss(logits, targets, config.focal, &dlogits);
            else
                loss_value = cross_entropy(logits, targets, &dlogits);
            if (!std::isfinite(loss_value))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " + std::to_string(step));
            loss_sum += static_cast<double>(loss_value) * b;

            optimizer.zero_grad();
            model.backward(dlogits);
            optimizer.step();
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.train_loss = loss_sum / n;
        if (!splits.val.empty()) {
            EvalOutput val = evaluate(model, splits.val, splits.classes, config.preprocess,
                                      config.batch_size_eval, &cache);
            stats.val_accuracy = val.metrics.accuracy;
            stats.val_macro_f1 = val.metrics.macro_f1;
        }
        result.history.epochs.push_back(stats);

        // Without a validation split there is no selection criterion; keep
        // the final weights instead of an arbitrary early epoch.
        if (stats.val_macro_f1 > result.history.best_val_macro_f1 || splits.val.empty()) {
            result.history.best_val_macro_f1 = stats.val_macro_f1;
            result.history.best_epoch = epoch;
            CheckpointMetadata meta;
            meta.seed = config.seed;
            meta.epoch = epoch;
            meta.metrics = {{"val_accuracy", stats.val_accuracy},
                            {"val_macro_f1", stats.val_macro_f1},
                            {"train_loss", stats.train_loss}};
            result.checkpoint_blob = serialize_checkpoint(model, meta);
            result.checkpoint_meta = meta;
        }
    }

    result.history.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace solarnet
