#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "solarnet/cv.hpp"
#include "solarnet/train.hpp"

namespace solarnet {

struct AblationCell {
    std::string row_label;
    Metrics metrics;
    long long param_count = 0;
    double size_mb = 0.0;
    nlohmann::ordered_json config;  // resolved config for the cell
};

struct AblationTable {
    std::string title;         // "CBAM Ablation", "Loss Ablation", "Scheduler Ablation"
    std::string factor_column; // "Model", "Loss", "Scheduler"
    std::vector<AblationCell> rows;
};

namespace detail {

inline AblationCell run_ablation_cell(const TrainConfig& config, const DatasetSplits& splits,
                                      const std::string& label) {
    AblationCell cell;
    cell.row_label = label;
    cell.config = config.to_json();
    TrainResult run = train(config, splits);
    Model<float> best = deserialize_checkpoint(run.checkpoint_blob);
    ImageCache cache;
    EvalOutput eval = evaluate(best, splits.test, splits.classes, config.preprocess,
                               config.batch_size_eval, &cache);
    cell.metrics = eval.metrics;
    cell.param_count = count_parameters(best);
    cell.size_mb = static_cast<double>(serialized_size_bytes(best)) / (1024.0 * 1024.0);
    return cell;
}

}  // namespace detail

// Reproduces the three single-factor experiment families: attention off/on,
// cross-entropy vs focal, fixed vs cosine schedule. Every cell shares the
// base configuration except for the one varied factor.
inline std::vector<AblationTable> run_ablation(const TrainConfig& base,
                                               const DatasetSplits& splits) {
    std::vector<AblationTable> tables;

    {
        AblationTable t;
        t.title = "CBAM Ablation";
        t.factor_column = "Model";
        TrainConfig off = base;
        off.model.use_cbam = false;
        TrainConfig on = base;
        on.model.use_cbam = true;
        t.rows.push_back(detail::run_ablation_cell(
            off, splits, backbone_display_name(base.model.backbone.name)));
        t.rows.push_back(detail::run_ablation_cell(on, splits, "HybridSolarNet (CBAM)"));
        tables.push_back(std::move(t));
    }
    {
        AblationTable t;
        t.title = "Loss Ablation";
        t.factor_column = "Loss";
        TrainConfig ce = base;
        ce.loss = LossKind::cross_entropy;
        TrainConfig fl = base;
        fl.loss = LossKind::focal;
        std::ostringstream focal_label;
        focal_label << "Focal (gamma=" << fl.focal.gamma << ", alpha=" << fl.focal.alpha << ")";
        t.rows.push_back(detail::run_ablation_cell(ce, splits, "Cross-Entropy"));
        t.rows.push_back(detail::run_ablation_cell(fl, splits, focal_label.str()));
        tables.push_back(std::move(t));
    }
    {
        AblationTable t;
        t.title = "Scheduler Ablation";
        t.factor_column = "Scheduler";
        TrainConfig fixed = base;
        fixed.schedule.mode = ScheduleMode::fixed;
        TrainConfig cosine = base;
        cosine.schedule.mode = ScheduleMode::cosine;
        t.rows.push_back(detail::run_ablation_cell(fixed, splits, "Fixed LR"));
        t.rows.push_back(detail::run_ablation_cell(cosine, splits, "Cosine Annealing"));
        tables.push_back(std::move(t));
    }
    return tables;
}

inline std::string ablation_table_markdown(const AblationTable& table) {
    std::ostringstream out;
    out << "### " << table.title << "\n\n";
    out << "| " << table.factor_column << " | Acc. | F1 |\n";
    out << "|---|---|---|\n";
    for (const auto& row : table.rows) {
        out << "| " << row.row_label << " | " << std::fixed << std::setprecision(2)
            << row.metrics.accuracy * 100.0 << "% | " << std::setprecision(4)
            << row.metrics.macro_f1 << " |\n";
        out.unsetf(std::ios::fixed);
    }
    return out.str();
}

inline nlohmann::ordered_json ablation_tables_json(const std::vector<AblationTable>& tables) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& t : tables) {
        nlohmann::ordered_json tj;
        tj["title"] = t.title;
        tj["factor_column"] = t.factor_column;
        tj["rows"] = nlohmann::ordered_json::array();
        for (const auto& r : t.rows) {
            tj["rows"].push_back({{"label", r.row_label},
                                  {"accuracy", r.metrics.accuracy},
                                  {"macro_f1", r.metrics.macro_f1},
                                  {"param_count", r.param_count},
                                  {"size_mb", r.size_mb},
                                  {"config", r.config}});
        }
        j.push_back(std::move(tj));
    }
    return j;
}

}  // namespace solarnet
