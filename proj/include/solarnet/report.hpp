#pragma once

#include <algorithm>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace solarnet {

struct ReportRow {
    std::string model;
    std::optional<double> accuracy;  // fraction in [0,1]
    std::optional<double> f1;
    std::optional<double> fps;
    std::optional<double> size_mb;
    bool skipped = false;  // unavailable baseline
    std::string note;
};

struct ComparisonReport {
    std::vector<ReportRow> rows;

    // Measured rows sorted by accuracy descending; skipped baselines sink to
    // the bottom in insertion order.
    std::vector<ReportRow> sorted_rows() const {
        std::vector<ReportRow> out = rows;
        std::stable_sort(out.begin(), out.end(), [](const ReportRow& a, const ReportRow& b) {
            if (a.skipped != b.skipped) return !a.skipped;
            if (a.skipped) return false;
            return a.accuracy.value_or(0.0) > b.accuracy.value_or(0.0);
        });
        return out;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["rows"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json rj;
            rj["model"] = r.model;
            if (r.accuracy) rj["accuracy"] = *r.accuracy;
            if (r.f1) rj["f1"] = *r.f1;
            if (r.fps) rj["fps"] = *r.fps;
            if (r.size_mb) rj["size_mb"] = *r.size_mb;
            rj["skipped"] = r.skipped;
            rj["note"] = r.note;
            j["rows"].push_back(std::move(rj));
        }
        return j;
    }

    static ComparisonReport from_json(const nlohmann::json& j) {
        ComparisonReport rep;
        for (const auto& rj : j.at("rows")) {
            ReportRow r;
            r.model = rj.at("model").get<std::string>();
            if (rj.contains("accuracy")) r.accuracy = rj.at("accuracy").get<double>();
            if (rj.contains("f1")) r.f1 = rj.at("f1").get<double>();
            if (rj.contains("fps")) r.fps = rj.at("fps").get<double>();
            if (rj.contains("size_mb")) r.size_mb = rj.at("size_mb").get<double>();
            r.skipped = rj.at("skipped").get<bool>();
            r.note = rj.at("note").get<std::string>();
            rep.rows.push_back(std::move(r));
        }
        return rep;
    }
};

// Markdown table: Model / Acc. / F1-Score / FPS / Size (MB), plus an accuracy
// delta column against the top row whenever two or more measured rows exist.
inline std::string comparison_report_markdown(const ComparisonReport& report) {
    const auto rows = report.sorted_rows();
    int measured = 0;
    for (const auto& r : rows)
        if (!r.skipped) ++measured;
    const bool with_delta = measured >= 2;
    std::optional<double> best_acc;
    for (const auto& r : rows)
        if (!r.skipped && r.accuracy) {
            best_acc = *r.accuracy;
            break;
        }

    std::ostringstream out;
    out << "| Model | Acc. | F1-Score | FPS | Size (MB) |";
    if (with_delta) out << " Acc. delta |";
    out << "\n|---|---|---|---|---|";
    if (with_delta) out << "---|";
    out << "\n";
    for (const auto& r : rows) {
        out << "| " << r.model << " | ";
        if (r.skipped) {
            out << "skipped | skipped | skipped | skipped |";
            if (with_delta) out << " - |";
            if (!r.note.empty()) out << " <!-- " << r.note << " -->";
            out << "\n";
            continue;
        }
        out << std::fixed << std::setprecision(2);
        if (r.accuracy) out << *r.accuracy * 100.0 << "%";
        out << " | " << std::setprecision(4);
        if (r.f1) out << *r.f1;
        out << " | " << std::setprecision(1);
        if (r.fps) out << *r.fps;
        out << " | ";
        if (r.size_mb) out << *r.size_mb;
        out << " |";
        if (with_delta) {
            out << " " << std::showpos << std::setprecision(2);
            if (r.accuracy && best_acc) out << (*r.accuracy - *best_acc) * 100.0 << " pp";
            out << std::noshowpos << " |";
        }
        out.unsetf(std::ios::fixed);
        if (!r.note.empty()) out << " <!-- " << r.note << " -->";
        out << "\n";
    }
    return out.str();
}

// Published comparison-table values, archived as documented reference rows;
// they depend on the original dataset, pretrained backbone, and GPU, and are
// not desk-scale claims.
inline std::vector<ReportRow> reference_rows() {
    auto row = [](const char* name, double acc, double f1, double fps, double mb) {
        ReportRow r;
        r.model = name;
        r.accuracy = acc;
        r.f1 = f1;
        r.fps = fps;
        r.size_mb = mb;
        r.note = "published reference";
        return r;
    };
    return {row("Hybrid (Ours)", 0.9237, 0.9226, 54.9, 16.3),
            row("EfficientNet-B0", 0.9084, 0.9072, 57.8, 15.5),
            row("VGG19", 0.8779, 0.8780, 39.9, 532.6),
            row("MobileNetV3", 0.8626, 0.8593, 59.0, 16.2),
            row("ResNet50", 0.8397, 0.8391, 43.6, 89.9),
            row("Custom CNN", 0.7863, 0.7853, 56.5, 5.0)};
}

}  // namespace solarnet
