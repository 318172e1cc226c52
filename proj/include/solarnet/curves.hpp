#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "solarnet/tensor.hpp"

namespace solarnet {

struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0;  // ROC: FPR, PR: recall
    double y = 0.0;  // ROC: TPR, PR: precision
};

struct BinaryCurves {
    std::vector<CurvePoint> roc;
    std::vector<CurvePoint> pr;
    std::optional<double> roc_auc;  // undefined without both positives and negatives
    long long positives = 0;
    long long negatives = 0;
};

// Threshold sweep over unique scores, descending; samples scoring >= the
// threshold are predicted positive. Ties advance as one step, which makes the
// trapezoidal ROC area equal the tie-aware Mann-Whitney pair statistic.
inline BinaryCurves binary_curves(const std::vector<double>& scores,
                                  const std::vector<bool>& positive) {
    if (scores.size() != positive.size())
        throw std::invalid_argument("binary_curves: scores and labels differ in length");
    for (double s : scores)
        if (!std::isfinite(s)) throw std::invalid_argument("binary_curves: non-finite score");

    BinaryCurves out;
    for (bool p : positive) (p ? out.positives : out.negatives)++;
    const long long pos = out.positives, neg = out.negatives;

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    out.roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    long long tp = 0, fp = 0;
    double auc_pairs = 0.0;  // unnormalized trapezoid over (FP,TP) counts
    std::size_t i = 0;
    while (i < order.size()) {
        const double thr = scores[order[i]];
        const long long prev_tp = tp, prev_fp = fp;
        while (i < order.size() && scores[order[i]] == thr) {
            if (positive[order[i]]) ++tp; else ++fp;
            ++i;
        }
        auc_pairs += static_cast<double>(fp - prev_fp) * static_cast<double>(tp + prev_tp) / 2.0;
        if (pos > 0 && neg > 0)
            out.roc.push_back({thr, static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
        if (pos > 0 && tp + fp > 0)
            out.pr.push_back({thr, static_cast<double>(tp) / pos,
                              static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    if (pos > 0 && neg > 0) {
        out.roc_auc = auc_pairs / (static_cast<double>(pos) * static_cast<double>(neg));
    } else {
        out.roc.clear();  // curve undefined without both label kinds
    }
    return out;
}

struct CurveSet {
    std::vector<BinaryCurves> per_class;       // one-vs-rest per class
    BinaryCurves micro;                        // pooled binarized (sample,class) pairs
    std::optional<double> micro_auc;
};

// One-vs-rest multi-class curves. scores is (n,K) class probabilities (any
// finite per-class score works; only the ordering matters for ROC).
inline CurveSet roc_pr_auc(const Tensor<double>& scores, const std::vector<int>& labels) {
    if (scores.rank() != 2) throw std::invalid_argument("roc_pr_auc: expected (n,K) scores");
    const int n = scores.dim(0), k = scores.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("roc_pr_auc: labels length does not match scores");
    for (int l : labels)
        if (l < 0 || l >= k) throw std::out_of_range("roc_pr_auc: label outside [0,K)");

    CurveSet out;
    std::vector<double> pooled_scores;
    std::vector<bool> pooled_pos;
    pooled_scores.reserve(static_cast<std::size_t>(n) * k);
    pooled_pos.reserve(static_cast<std::size_t>(n) * k);
    for (int c = 0; c < k; ++c) {
        std::vector<double> s(static_cast<std::size_t>(n));
        std::vector<bool> p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            s[static_cast<std::size_t>(i)] = scores.at(i, c);
            p[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] == c;
            pooled_scores.push_back(scores.at(i, c));
            pooled_pos.push_back(labels[static_cast<std::size_t>(i)] == c);
        }
        out.per_class.push_back(binary_curves(s, p));
    }
    out.micro = binary_curves(pooled_scores, pooled_pos);
    out.micro_auc = out.micro.roc_auc;
    return out;
}

inline void write_curve_csv(const std::filesystem::path& path,
                            const std::vector<CurvePoint>& points) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write curve csv: " + path.string());
    f << "threshold,x,y\n";
    for (const auto& p : points) f << p.threshold << "," << p.x << "," << p.y << "\n";
}

}  // namespace solarnet
