#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "solarnet/train.hpp"

namespace solarnet {

struct CVResult {
    std::vector<Metrics> per_fold;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["folds"] = nlohmann::ordered_json::array();
        for (const auto& m : per_fold)
            j["folds"].push_back({{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}});
        j["mean_accuracy"] = mean_accuracy;
        j["std_accuracy"] = std_accuracy;
        j["mean_f1"] = mean_f1;
        j["std_f1"] = std_f1;
        return j;
    }
};

// Stratified fold assignment: within each class, a seeded shuffle dealt
// round-robin, so per-class fold sizes differ by at most one. The starting
// fold rotates between classes, which spreads the per-class remainders and
// keeps total fold sizes within one of each other as well.
inline std::vector<std::vector<std::size_t>> make_stratified_folds(const DatasetManifest& manifest,
                                                                   int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("cv: k must be >= 2");
    const auto counts = manifest.counts();
    for (const auto& [cls, count] : counts)
        if (count < k)
            throw std::runtime_error("cv: class '" + cls + "' has " + std::to_string(count) +
                                     " samples, fewer than k=" + std::to_string(k));
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::size_t offset = 0;
    for (std::size_t ci = 0; ci < manifest.classes.size(); ++ci) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < manifest.records.size(); ++i)
            if (manifest.records[i].class_label == manifest.classes[ci]) members.push_back(i);
        Rng rng = rng_for(seed, stream_tag("cv_folds"), ci);
        deterministic_shuffle(members, rng);
        for (std::size_t j = 0; j < members.size(); ++j)
            folds[(offset + j) % static_cast<std::size_t>(k)].push_back(members[j]);
        offset = (offset + members.size()) % static_cast<std::size_t>(k);
    }
    return folds;
}

// k-fold stratified cross-validation: each fold serves once as the held-out
// evaluation set; an internal stratified validation slice is carved from the
// training remainder for checkpoint selection. Mean/std are population
// statistics over folds.
inline CVResult kfold_cv(const DatasetManifest& manifest, int k, const TrainConfig& config,
                         double val_fraction = 0.15) {
    const auto folds = make_stratified_folds(manifest, k, config.seed);
    CVResult result;
    for (int f = 0; f < k; ++f) {
        std::vector<char> in_eval(manifest.records.size(), 0);
        for (std::size_t idx : folds[static_cast<std::size_t>(f)]) in_eval[idx] = 1;

        DatasetSplits splits;
        splits.classes = manifest.classes;
        for (std::size_t idx : folds[static_cast<std::size_t>(f)]) {
            SampleRecord rec = manifest.records[idx];
            rec.partition = Partition::test;
            splits.test.push_back(std::move(rec));
        }
        // stratified validation slice of the training remainder
        for (std::size_t ci = 0; ci < manifest.classes.size(); ++ci) {
            std::vector<std::size_t> pool;
            for (std::size_t i = 0; i < manifest.records.size(); ++i)
                if (!in_eval[i] && manifest.records[i].class_label == manifest.classes[ci])
                    pool.push_back(i);
            Rng rng = rng_for(config.seed, stream_tag("cv_val"),
                              static_cast<std::uint64_t>(f), ci);
            deterministic_shuffle(pool, rng);
            const std::size_t n_val =
                static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(pool.size())));
            for (std::size_t j = 0; j < pool.size(); ++j) {
                SampleRecord rec = manifest.records[pool[j]];
                rec.partition = j < n_val ? Partition::val : Partition::train;
                (j < n_val ? splits.val : splits.train).push_back(std::move(rec));
            }
        }

        TrainResult run = train(config, splits);
        Model<float> best = deserialize_checkpoint(run.checkpoint_blob);
        ImageCache cache;
        EvalOutput eval = evaluate(best, splits.test, splits.classes, config.preprocess,
                                   config.batch_size_eval, &cache);
        result.per_fold.push_back(eval.metrics);
    }

    auto mean_std = [&](auto getter) {
        double mean = 0.0;
        for (const auto& m : result.per_fold) mean += getter(m);
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (const auto& m : result.per_fold) {
            const double d = getter(m) - mean;
            var += d * d;
        }
        return std::pair<double, double>{mean, std::sqrt(var / static_cast<double>(k))};
    };
    std::tie(result.mean_accuracy, result.std_accuracy) =
        mean_std([](const Metrics& m) { return m.accuracy; });
    std::tie(result.mean_f1, result.std_f1) =
        mean_std([](const Metrics& m) { return m.macro_f1; });
    return result;
}

}  // namespace solarnet
