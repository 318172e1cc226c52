#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace solarnet {

// Rows are true classes, columns predicted; class order follows the manifest.
struct ConfusionMatrix {
    int k = 0;
    std::vector<long long> counts;  // k*k row-major

    explicit ConfusionMatrix(int classes = 0)
        : k(classes), counts(static_cast<std::size_t>(classes) * classes, 0) {}

    long long& at(int truth, int pred) { return counts[static_cast<std::size_t>(truth) * k + pred]; }
    long long at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth) * k + pred]; }

    long long row_sum(int truth) const {
        long long s = 0;
        for (int j = 0; j < k; ++j) s += at(truth, j);
        return s;
    }
    long long col_sum(int pred) const {
        long long s = 0;
        for (int i = 0; i < k; ++i) s += at(i, pred);
        return s;
    }
    long long trace() const {
        long long s = 0;
        for (int i = 0; i < k; ++i) s += at(i, i);
        return s;
    }
    long long total() const {
        long long s = 0;
        for (long long v : counts) s += v;
        return s;
    }
};

inline ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                                 int k) {
    if (preds.size() != labels.size())
        throw std::invalid_argument("confusion: preds and labels differ in length");
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k || preds[i] < 0 || preds[i] >= k)
            throw std::out_of_range("confusion: class index outside [0," + std::to_string(k) + ")");
        ++cm.at(labels[i], preds[i]);
    }
    return cm;
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;
};

struct Metrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<ClassMetrics> per_class;

    nlohmann::ordered_json to_json(const std::vector<std::string>& class_names = {}) const {
        nlohmann::ordered_json j;
        j["accuracy"] = accuracy;
        j["macro_f1"] = macro_f1;
        j["per_class"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < per_class.size(); ++i) {
            nlohmann::ordered_json c;
            if (i < class_names.size()) c["class"] = class_names[i];
            c["precision"] = per_class[i].precision;
            c["recall"] = per_class[i].recall;
            c["f1"] = per_class[i].f1;
            c["support"] = per_class[i].support;
            j["per_class"].push_back(std::move(c));
        }
        return j;
    }
};

// Accuracy is trace/total; macro-F1 the unweighted mean of per-class F1,
// where a class with no predictions and no support scores 0.
inline Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
    Metrics m;
    m.per_class.resize(static_cast<std::size_t>(cm.k));
    const long long total = cm.total();
    m.accuracy = total > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(total) : 0.0;
    double f1_sum = 0.0;
    for (int c = 0; c < cm.k; ++c) {
        ClassMetrics& cls = m.per_class[static_cast<std::size_t>(c)];
        const long long tp = cm.at(c, c);
        const long long fp = cm.col_sum(c) - tp;
        const long long fn = cm.row_sum(c) - tp;
        cls.support = cm.row_sum(c);
        cls.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        cls.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        cls.f1 = (cls.precision + cls.recall) > 0
                     ? 2.0 * cls.precision * cls.recall / (cls.precision + cls.recall)
                     : 0.0;
        f1_sum += cls.f1;
    }
    m.macro_f1 = cm.k > 0 ? f1_sum / cm.k : 0.0;
    return m;
}

}  // namespace solarnet
