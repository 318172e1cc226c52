#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "solarnet/synth.hpp"
#include "solarnet/train.hpp"

namespace solarnet {

// One flat sectioned key-value file drives every command. Unknown keys are
// rejected (typo safety), and the resolved config serializes back losslessly
// so each run can archive it beside its outputs.
struct RunConfig {
    std::string data_root;
    std::string output_dir = "out";
    std::string manifest_dir;  // defaults to <output_dir>/manifests

    SplitSpec split;
    TrainConfig train;
    int cv_folds = 5;

    int bench_batch_size = 32;
    int bench_warmup_iters = 10;
    int bench_timed_iters = 50;
    std::string bench_hardware_label = "cpu";

    SynthSpec synth;

    std::string resolved_manifest_dir() const {
        return manifest_dir.empty() ? output_dir + "/manifests" : manifest_dir;
    }

    static RunConfig parse_string(const std::string& text);
    static RunConfig parse_file(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot read config: " + path.string());
        std::ostringstream ss;
        ss << f.rdbuf();
        try {
            return parse_string(ss.str());
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ": " + e.what());
        }
    }

    std::string serialize() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("bad number: " + v);
    return d;
}

inline int parse_int(const std::string& v) {
    std::size_t used = 0;
    const int i = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument("bad integer: " + v);
    return i;
}

inline std::uint64_t parse_u64(const std::string& v) {
    std::size_t used = 0;
    const unsigned long long u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("bad integer: " + v);
    return u;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("bad bool (use true/false): " + v);
}

inline std::array<double, 3> parse_triplet(const std::string& v) {
    std::array<double, 3> out{};
    std::istringstream ss(v);
    std::string tok;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, tok, ',')) throw std::invalid_argument("expected 3 values: " + v);
        out[static_cast<std::size_t>(i)] = parse_double(trim(tok));
    }
    if (std::getline(ss, tok, ',')) throw std::invalid_argument("expected 3 values: " + v);
    return out;
}

// shortest decimal that round-trips
inline std::string fmt(double v) { return nlohmann::json(v).dump(); }
inline std::string fmt(const std::array<double, 3>& v) {
    return fmt(v[0]) + "," + fmt(v[1]) + "," + fmt(v[2]);
}

}  // namespace detail

inline RunConfig RunConfig::parse_string(const std::string& text) {
    RunConfig cfg;
    bool horizon_given = false;

    using Setter = std::function<void(const std::string&)>;
    std::map<std::string, Setter> keys;
    auto set = [&](const char* key, Setter fn) { keys[key] = std::move(fn); };
    using namespace detail;

    set("paths.data_root", [&](const std::string& v) { cfg.data_root = v; });
    set("paths.output_dir", [&](const std::string& v) { cfg.output_dir = v; });
    set("paths.manifest_dir", [&](const std::string& v) { cfg.manifest_dir = v; });

    set("split.train", [&](const std::string& v) { cfg.split.train = parse_double(v); });
    set("split.val", [&](const std::string& v) { cfg.split.val = parse_double(v); });
    set("split.test", [&](const std::string& v) { cfg.split.test = parse_double(v); });
    set("split.seed", [&](const std::string& v) { cfg.split.seed = parse_u64(v); });

    set("balance.oversample_target",
        [&](const std::string& v) { cfg.train.oversample_target = parse_int(v); });

    set("augment.enabled", [&](const std::string& v) { cfg.train.augmentation.enabled = parse_bool(v); });
    set("augment.hflip_prob", [&](const std::string& v) { cfg.train.augmentation.hflip_prob = parse_double(v); });
    set("augment.vflip_prob", [&](const std::string& v) { cfg.train.augmentation.vflip_prob = parse_double(v); });
    set("augment.rotation_limit_deg",
        [&](const std::string& v) { cfg.train.augmentation.rotation_limit_deg = parse_double(v); });
    set("augment.brightness_jitter",
        [&](const std::string& v) { cfg.train.augmentation.brightness_jitter = parse_double(v); });
    set("augment.contrast_jitter",
        [&](const std::string& v) { cfg.train.augmentation.contrast_jitter = parse_double(v); });

    set("preprocess.target_size", [&](const std::string& v) { cfg.train.preprocess.target_size = parse_int(v); });
    set("preprocess.channel_means",
        [&](const std::string& v) { cfg.train.preprocess.channel_means = parse_triplet(v); });
    set("preprocess.channel_stds",
        [&](const std::string& v) { cfg.train.preprocess.channel_stds = parse_triplet(v); });

    set("model.backbone", [&](const std::string& v) { cfg.train.model.backbone.name = v; });
    set("model.pretrained", [&](const std::string& v) { cfg.train.model.backbone.pretrained = parse_bool(v); });
    set("model.use_cbam", [&](const std::string& v) { cfg.train.model.use_cbam = parse_bool(v); });
    set("model.dropout_p", [&](const std::string& v) { cfg.train.model.dropout_p = parse_double(v); });
    set("model.cbam_reduction", [&](const std::string& v) { cfg.train.model.cbam_reduction = parse_int(v); });
    set("model.cbam_spatial_kernel",
        [&](const std::string& v) { cfg.train.model.cbam_spatial_kernel = parse_int(v); });

    set("optimizer.lr", [&](const std::string& v) {
        cfg.train.optimizer.lr = parse_double(v);
        cfg.train.schedule.lr_max = cfg.train.optimizer.lr;
    });
    set("optimizer.weight_decay",
        [&](const std::string& v) { cfg.train.optimizer.weight_decay = parse_double(v); });

    set("loss.kind", [&](const std::string& v) {
        if (v == "focal") cfg.train.loss = LossKind::focal;
        else if (v == "cross_entropy") cfg.train.loss = LossKind::cross_entropy;
        else throw std::invalid_argument("loss.kind must be focal or cross_entropy");
    });
    set("loss.gamma", [&](const std::string& v) { cfg.train.focal.gamma = parse_double(v); });
    set("loss.alpha", [&](const std::string& v) { cfg.train.focal.alpha = parse_double(v); });

    set("schedule.mode", [&](const std::string& v) {
        if (v == "cosine") cfg.train.schedule.mode = ScheduleMode::cosine;
        else if (v == "fixed") cfg.train.schedule.mode = ScheduleMode::fixed;
        else throw std::invalid_argument("schedule.mode must be cosine or fixed");
    });
    set("schedule.lr_min", [&](const std::string& v) { cfg.train.schedule.lr_min = parse_double(v); });
    set("schedule.horizon_T", [&](const std::string& v) {
        cfg.train.schedule.horizon_T = parse_int(v);
        horizon_given = true;
    });

    set("train.epochs", [&](const std::string& v) { cfg.train.epochs = parse_int(v); });
    set("train.batch_size_train", [&](const std::string& v) { cfg.train.batch_size_train = parse_int(v); });
    set("train.batch_size_eval", [&](const std::string& v) { cfg.train.batch_size_eval = parse_int(v); });
    set("train.seed", [&](const std::string& v) { cfg.train.seed = parse_u64(v); });
    set("train.freeze_backbone", [&](const std::string& v) { cfg.train.freeze_backbone = parse_bool(v); });

    set("cv.folds", [&](const std::string& v) { cfg.cv_folds = parse_int(v); });

    set("bench.batch_size", [&](const std::string& v) { cfg.bench_batch_size = parse_int(v); });
    set("bench.warmup_iters", [&](const std::string& v) { cfg.bench_warmup_iters = parse_int(v); });
    set("bench.timed_iters", [&](const std::string& v) { cfg.bench_timed_iters = parse_int(v); });
    set("bench.hardware_label", [&](const std::string& v) { cfg.bench_hardware_label = v; });

    set("synth.classes", [&](const std::string& v) { cfg.synth.num_classes = parse_int(v); });
    set("synth.per_class", [&](const std::string& v) { cfg.synth.per_class = parse_int(v); });
    set("synth.image_size", [&](const std::string& v) { cfg.synth.image_size = parse_int(v); });
    set("synth.seed", [&](const std::string& v) { cfg.synth.seed = parse_u64(v); });

    std::istringstream stream(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("line " + std::to_string(line_no) + ": bad section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = section + "." + detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        auto it = keys.find(key);
        if (it == keys.end())
            throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown config key '" +
                                        key + "'");
        try {
            it->second(value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + " (" + key + "): " +
                                        e.what());
        }
    }

    if (!horizon_given) cfg.train.schedule.horizon_T = std::max(1, cfg.train.epochs);
    return cfg;
}

inline std::string RunConfig::serialize() const {
    using detail::fmt;
    std::ostringstream out;
    out << "[paths]\n";
    out << "data_root = " << data_root << "\n";
    out << "output_dir = " << output_dir << "\n";
    out << "manifest_dir = " << manifest_dir << "\n\n";
    out << "[split]\n";
    out << "train = " << fmt(split.train) << "\n";
    out << "val = " << fmt(split.val) << "\n";
    out << "test = " << fmt(split.test) << "\n";
    out << "seed = " << split.seed << "\n\n";
    out << "[balance]\n";
    out << "oversample_target = " << train.oversample_target << "\n\n";
    out << "[augment]\n";
    out << "enabled = " << (train.augmentation.enabled ? "true" : "false") << "\n";
    out << "hflip_prob = " << fmt(train.augmentation.hflip_prob) << "\n";
    out << "vflip_prob = " << fmt(train.augmentation.vflip_prob) << "\n";
    out << "rotation_limit_deg = " << fmt(train.augmentation.rotation_limit_deg) << "\n";
    out << "brightness_jitter = " << fmt(train.augmentation.brightness_jitter) << "\n";
    out << "contrast_jitter = " << fmt(train.augmentation.contrast_jitter) << "\n\n";
    out << "[preprocess]\n";
    out << "target_size = " << train.preprocess.target_size << "\n";
    out << "channel_means = " << fmt(train.preprocess.channel_means) << "\n";
    out << "channel_stds = " << fmt(train.preprocess.channel_stds) << "\n\n";
    out << "[model]\n";
    out << "backbone = " << train.model.backbone.name << "\n";
    out << "pretrained = " << (train.model.backbone.pretrained ? "true" : "false") << "\n";
    out << "use_cbam = " << (train.model.use_cbam ? "true" : "false") << "\n";
    out << "dropout_p = " << fmt(train.model.dropout_p) << "\n";
    out << "cbam_reduction = " << train.model.cbam_reduction << "\n";
    out << "cbam_spatial_kernel = " << train.model.cbam_spatial_kernel << "\n\n";
    out << "[optimizer]\n";
    out << "lr = " << fmt(train.optimizer.lr) << "\n";
    out << "weight_decay = " << fmt(train.optimizer.weight_decay) << "\n\n";
    out << "[loss]\n";
    out << "kind = " << (train.loss == LossKind::focal ? "focal" : "cross_entropy") << "\n";
    out << "gamma = " << fmt(train.focal.gamma) << "\n";
    out << "alpha = " << fmt(train.focal.alpha) << "\n\n";
    out << "[schedule]\n";
    out << "mode = " << (train.schedule.mode == ScheduleMode::cosine ? "cosine" : "fixed") << "\n";
    out << "lr_min = " << fmt(train.schedule.lr_min) << "\n";
    out << "horizon_T = " << train.schedule.horizon_T << "\n\n";
    out << "[train]\n";
    out << "epochs = " << train.epochs << "\n";
    out << "batch_size_train = " << train.batch_size_train << "\n";
    out << "batch_size_eval = " << train.batch_size_eval << "\n";
    out << "seed = " << train.seed << "\n";
    out << "freeze_backbone = " << (train.freeze_backbone ? "true" : "false") << "\n\n";
    out << "[cv]\n";
    out << "folds = " << cv_folds << "\n\n";
    out << "[bench]\n";
    out << "batch_size = " << bench_batch_size << "\n";
    out << "warmup_iters = " << bench_warmup_iters << "\n";
    out << "timed_iters = " << bench_timed_iters << "\n";
    out << "hardware_label = " << bench_hardware_label << "\n\n";
    out << "[synth]\n";
    out << "classes = " << synth.num_classes << "\n";
    out << "per_class = " << synth.per_class << "\n";
    out << "image_size = " << synth.image_size << "\n";
    out << "seed = " << synth.seed << "\n";
    return out.str();
}

}  // namespace solarnet
