#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "solarnet/ablation.hpp"
#include "solarnet/benchmark.hpp"
#include "solarnet/config.hpp"
#include "solarnet/cv.hpp"
#include "solarnet/gradcam.hpp"
#include "solarnet/plots.hpp"
#include "solarnet/report.hpp"
#include "solarnet/synth.hpp"
#include "solarnet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// exit code 2: a required input path is missing
struct MissingPath : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "config file (flat key = value sections)");
    cmd->add_option("--output-dir", opts.output_dir, "override [paths] output_dir");
    cmd->add_option("--seed", opts.seed, "override every seed in the config");
    cmd->add_option("--jobs", opts.jobs, "fan-out cap for cv/ablate cells")->check(CLI::PositiveNumber);
    cmd->add_flag("--force", opts.force, "overwrite existing outputs");
}

solarnet::RunConfig load_config(const CommonOpts& opts) {
    solarnet::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = solarnet::RunConfig::parse_file(opts.config_path);
    if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
    if (opts.seed) {
        cfg.split.seed = *opts.seed;
        cfg.train.seed = *opts.seed;
        cfg.synth.seed = *opts.seed;
    }
    if (opts.jobs > 1)
        std::cerr << "note: this build executes cv/ablation cells sequentially; results are\n"
                     "identical for any --jobs value because all randomness is key-derived.\n";
    if (const char* det = std::getenv("SOLARNET_DETERMINISTIC"); det && std::string(det) == "0")
        std::cerr << "note: SOLARNET_DETERMINISTIC=0 has no effect; this substrate is "
                     "deterministic by construction.\n";
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

void archive_config(const solarnet::RunConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "config.resolved.ini", cfg.serialize());
}

struct LoadedSplits {
    solarnet::DatasetSplits splits;
    json meta;
};

LoadedSplits load_splits(const solarnet::RunConfig& cfg) {
    const fs::path dir = cfg.resolved_manifest_dir();
    if (!fs::exists(dir / "meta.json"))
        throw MissingPath("prepared manifests not found at " + dir.string() +
                          " (run `solarnet prepare` first)");
    LoadedSplits out;
    {
        std::ifstream f(dir / "meta.json");
        f >> out.meta;
    }
    out.splits.classes = out.meta.at("classes").get<std::vector<std::string>>();
    out.splits.train = solarnet::read_manifest_jsonl(dir / "train.jsonl");
    out.splits.val = solarnet::read_manifest_jsonl(dir / "val.jsonl");
    out.splits.test = solarnet::read_manifest_jsonl(dir / "test.jsonl");
    return out;
}

std::string model_label(const solarnet::ModelSpec& spec) {
    return spec.use_cbam ? std::string("HybridSolarNet (CBAM)")
                         : solarnet::backbone_display_name(spec.backbone.name);
}

fs::path require_checkpoint(const solarnet::RunConfig& cfg, const std::string& given) {
    fs::path path = given.empty() ? fs::path(cfg.output_dir) / "train" / "checkpoint.ckpt"
                                  : fs::path(given);
    if (!fs::exists(path)) throw MissingPath("checkpoint not found: " + path.string());
    return path;
}

int cmd_synth(const solarnet::RunConfig& cfg, const std::string& out_dir, bool force) {
    const fs::path target = !out_dir.empty() ? fs::path(out_dir)
                            : !cfg.data_root.empty() ? fs::path(cfg.data_root)
                                                     : fs::path("synthetic_data");
    solarnet::generate_synthetic_corpus(target, cfg.synth, force);
    write_text(target / "config.resolved.ini", cfg.serialize());
    std::cout << "wrote " << cfg.synth.num_classes << " classes x " << cfg.synth.per_class
              << " images (" << cfg.synth.image_size << "px) to " << target.string() << "\n";
    return 0;
}

int cmd_prepare(const solarnet::RunConfig& cfg) {
    if (cfg.data_root.empty() || !fs::exists(cfg.data_root))
        throw MissingPath("data_root does not exist: " +
                          (cfg.data_root.empty() ? std::string("<unset>") : cfg.data_root));
    const auto manifest = solarnet::load_manifest(cfg.data_root);
    const auto splits = solarnet::stratified_split(manifest, cfg.split);
    const auto audit = solarnet::verify_no_leakage(splits, {});

    const fs::path dir = cfg.resolved_manifest_dir();
    fs::create_directories(dir);
    solarnet::write_manifest_jsonl(dir / "train.jsonl", splits.train);
    solarnet::write_manifest_jsonl(dir / "val.jsonl", splits.val);
    solarnet::write_manifest_jsonl(dir / "test.jsonl", splits.test);

    ordered_json meta;
    meta["classes"] = manifest.classes;
    meta["data_root"] = cfg.data_root;
    meta["ratios"] = {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}};
    meta["seed"] = cfg.split.seed;
    ordered_json counts;
    for (const auto& [cls, n] : manifest.counts()) counts[cls] = n;
    meta["counts"] = counts;
    write_text(dir / "meta.json", meta.dump(2) + "\n");
    write_text(dir / "leakage_report.json", audit.to_json().dump(2) + "\n");
    archive_config(cfg, dir);

    std::cout << "prepared " << manifest.records.size() << " records into " << splits.train.size()
              << "/" << splits.val.size() << "/" << splits.test.size()
              << " (train/val/test); leakage audit " << (audit.pass ? "pass" : "FAIL") << "\n";
    return audit.pass ? 0 : 1;
}

int cmd_train(const solarnet::RunConfig& cfg) {
    LoadedSplits loaded = load_splits(cfg);
    const fs::path dir = fs::path(cfg.output_dir) / "train";
    fs::create_directories(dir);

    solarnet::TrainResult result = solarnet::train(cfg.train, loaded.splits);
    std::ofstream ckpt(dir / "checkpoint.ckpt", std::ios::binary);
    ckpt.write(result.checkpoint_blob.data(),
               static_cast<std::streamsize>(result.checkpoint_blob.size()));
    ckpt.close();
    write_text(dir / "history.json", result.history.to_json(cfg.train).dump(2) + "\n");
    archive_config(cfg, dir);

    std::cout << "trained " << cfg.train.epochs << " epochs; best epoch "
              << result.history.best_epoch << " with val macro-F1 "
              << result.history.best_val_macro_f1 << "\n";
    return 0;
}

int cmd_eval(const solarnet::RunConfig& cfg, const std::string& checkpoint,
             const std::string& split_name) {
    LoadedSplits loaded = load_splits(cfg);
    const fs::path ckpt_path = require_checkpoint(cfg, checkpoint);
    solarnet::Model<float> model = solarnet::load_checkpoint(ckpt_path);

    const std::vector<solarnet::SampleRecord>& records =
        split_name == "val" ? loaded.splits.val : loaded.splits.test;
    if (records.empty()) throw std::runtime_error("eval: split '" + split_name + "' is empty");

    solarnet::ImageCache cache;
    solarnet::EvalOutput eval = solarnet::evaluate(model, records, loaded.splits.classes,
                                                   cfg.train.preprocess,
                                                   cfg.train.batch_size_eval, &cache);
    solarnet::CurveSet curves = solarnet::roc_pr_auc(eval.scores, eval.labels);

    const fs::path dir = fs::path(cfg.output_dir) / "eval";
    fs::create_directories(dir / "curves");

    ordered_json report;
    report["model"] = model_label(model.spec());
    report["split"] = split_name;
    report["classes"] = loaded.splits.classes;
    report["metrics"] = eval.metrics.to_json(loaded.splits.classes);
    ordered_json cm = ordered_json::array();
    for (int i = 0; i < eval.matrix.k; ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < eval.matrix.k; ++j) row.push_back(eval.matrix.at(i, j));
        cm.push_back(std::move(row));
    }
    report["confusion"] = std::move(cm);
    ordered_json auc;
    auc["per_class"] = ordered_json::array();
    for (const auto& c : curves.per_class)
        auc["per_class"].push_back(c.roc_auc ? ordered_json(*c.roc_auc) : ordered_json(nullptr));
    auc["micro"] = curves.micro_auc ? ordered_json(*curves.micro_auc) : ordered_json(nullptr);
    report["auc"] = std::move(auc);
    write_text(dir / "eval_report.json", report.dump(2) + "\n");

    std::ostringstream md;
    md << "# Evaluation (" << split_name << " split)\n\n";
    md << "Model: " << model_label(model.spec()) << "\n\n";
    md << "- accuracy: " << eval.metrics.accuracy << "\n";
    md << "- macro F1: " << eval.metrics.macro_f1 << "\n";
    if (curves.micro_auc) md << "- micro-average ROC AUC: " << *curves.micro_auc << "\n";
    md << "\n| class | precision | recall | F1 | support | ROC AUC |\n|---|---|---|---|---|---|\n";
    for (std::size_t c = 0; c < loaded.splits.classes.size(); ++c) {
        const auto& pc = eval.metrics.per_class[c];
        md << "| " << loaded.splits.classes[c] << " | " << pc.precision << " | " << pc.recall
           << " | " << pc.f1 << " | " << pc.support << " | ";
        if (curves.per_class[c].roc_auc) md << *curves.per_class[c].roc_auc;
        else md << "undefined";
        md << " |\n";
    }
    write_text(dir / "eval_report.md", md.str());

    std::vector<solarnet::PlotSeries> roc_series, pr_series;
    for (std::size_t c = 0; c < loaded.splits.classes.size(); ++c) {
        solarnet::write_curve_csv(dir / "curves" / ("roc_" + loaded.splits.classes[c] + ".csv"),
                                  curves.per_class[c].roc);
        solarnet::write_curve_csv(dir / "curves" / ("pr_" + loaded.splits.classes[c] + ".csv"),
                                  curves.per_class[c].pr);
        roc_series.push_back({loaded.splits.classes[c], curves.per_class[c].roc});
        pr_series.push_back({loaded.splits.classes[c], curves.per_class[c].pr});
    }
    solarnet::write_curve_csv(dir / "curves" / "roc_micro.csv", curves.micro.roc);
    solarnet::write_curve_csv(dir / "curves" / "pr_micro.csv", curves.micro.pr);
    roc_series.push_back({"micro", curves.micro.roc});
    pr_series.push_back({"micro", curves.micro.pr});
    solarnet::write_curves_plot(dir / "roc.png", "ROC (one-vs-rest)", "FPR", "TPR", roc_series);
    solarnet::write_curves_plot(dir / "pr.png", "Precision-Recall", "recall", "precision",
                                pr_series);
    archive_config(cfg, dir);

    std::cout << "eval accuracy " << eval.metrics.accuracy << ", macro F1 "
              << eval.metrics.macro_f1 << "\n";
    return 0;
}

int cmd_cv(const solarnet::RunConfig& cfg) {
    if (cfg.data_root.empty() || !fs::exists(cfg.data_root))
        throw MissingPath("data_root does not exist: " +
                          (cfg.data_root.empty() ? std::string("<unset>") : cfg.data_root));
    const auto manifest = solarnet::load_manifest(cfg.data_root);
    const solarnet::CVResult result = solarnet::kfold_cv(manifest, cfg.cv_folds, cfg.train);

    const fs::path dir = fs::path(cfg.output_dir) / "cv";
    fs::create_directories(dir);
    write_text(dir / "cv_result.json", result.to_json().dump(2) + "\n");

    std::ostringstream md;
    md << "# " << cfg.cv_folds << "-fold stratified cross-validation\n\n";
    md << "| fold | accuracy | macro F1 |\n|---|---|---|\n";
    for (std::size_t f = 0; f < result.per_fold.size(); ++f)
        md << "| " << f << " | " << result.per_fold[f].accuracy << " | "
           << result.per_fold[f].macro_f1 << " |\n";
    md << "\nmean accuracy " << result.mean_accuracy << " +/- " << result.std_accuracy
       << "; mean macro F1 " << result.mean_f1 << " +/- " << result.std_f1
       << " (population std over folds)\n";
    write_text(dir / "cv_result.md", md.str());
    archive_config(cfg, dir);

    std::cout << "cv mean accuracy " << result.mean_accuracy << " +/- " << result.std_accuracy
              << "\n";
    return 0;
}

int cmd_ablate(const solarnet::RunConfig& cfg) {
    LoadedSplits loaded = load_splits(cfg);
    const auto tables = solarnet::run_ablation(cfg.train, loaded.splits);

    const fs::path dir = fs::path(cfg.output_dir) / "ablation";
    fs::create_directories(dir);
    const char* files[] = {"cbam_ablation.md", "loss_ablation.md", "scheduler_ablation.md"};
    for (std::size_t i = 0; i < tables.size(); ++i)
        write_text(dir / files[i], solarnet::ablation_table_markdown(tables[i]));
    write_text(dir / "ablation.json", solarnet::ablation_tables_json(tables).dump(2) + "\n");
    archive_config(cfg, dir);

    for (const auto& t : tables) std::cout << solarnet::ablation_table_markdown(t) << "\n";
    return 0;
}

int cmd_gradcam(const solarnet::RunConfig& cfg, const std::string& checkpoint,
                const std::string& images_dir, std::string layer, int target_class) {
    const fs::path ckpt_path = require_checkpoint(cfg, checkpoint);
    solarnet::Model<float> model = solarnet::load_checkpoint(ckpt_path);
    if (layer.empty()) layer = model.default_feature_layer();
    if (!fs::exists(images_dir)) throw MissingPath("image directory not found: " + images_dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(images_dir))
        if (entry.is_regular_file() && solarnet::has_image_extension(entry.path()))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no images found in " + images_dir);

    const fs::path dir = fs::path(cfg.output_dir) / "gradcam";
    fs::create_directories(dir);
    ordered_json index = ordered_json::array();
    for (const auto& file : files) {
        const solarnet::Image img = solarnet::read_image(file);
        int cls = target_class;
        if (cls < 0) {
            // default target: the predicted class for this image
            solarnet::Tensor<float> x = solarnet::preprocess(img, cfg.train.preprocess);
            solarnet::Tensor<float> batch({1, 3, cfg.train.preprocess.target_size,
                                           cfg.train.preprocess.target_size});
            std::copy(x.data(), x.data() + x.size(), batch.data());
            const auto logits = model.forward(batch, solarnet::nn::Mode::eval);
            cls = 0;
            for (int c = 1; c < model.num_classes(); ++c)
                if (logits.at(0, c) > logits.at(0, cls)) cls = c;
        }
        const solarnet::Heatmap hm = solarnet::grad_cam(model, img, cls, layer, cfg.train.preprocess);
        const std::string stem = file.stem().string();
        solarnet::write_image(dir / (stem + "_overlay.png"), solarnet::overlay(hm, img));
        solarnet::write_heatmap_csv(dir / (stem + "_heatmap.csv"), hm);
        index.push_back({{"image", file.string()},
                         {"target_class", cls},
                         {"layer", layer},
                         {"all_zero", hm.all_zero}});
    }
    write_text(dir / "gallery.json", index.dump(2) + "\n");
    archive_config(cfg, dir);
    std::cout << "wrote " << files.size() << " heatmap overlays to " << dir.string() << "\n";
    return 0;
}

int cmd_bench(const solarnet::RunConfig& cfg, const std::string& checkpoint, bool with_training) {
    const fs::path ckpt_path = require_checkpoint(cfg, checkpoint);
    solarnet::BenchmarkResult result = solarnet::measure_fps_checkpoint(
        ckpt_path, cfg.train.preprocess.target_size, cfg.bench_batch_size, cfg.bench_warmup_iters,
        cfg.bench_timed_iters, cfg.bench_hardware_label);
    if (with_training) {
        LoadedSplits loaded = load_splits(cfg);
        auto [run, seconds] = solarnet::time_training(cfg.train, loaded.splits);
        result.train_time_s = seconds;
    }
    const fs::path dir = fs::path(cfg.output_dir) / "bench";
    fs::create_directories(dir);
    write_text(dir / "benchmark.json", result.to_json().dump(2) + "\n");
    archive_config(cfg, dir);
    std::cout << "fps " << result.fps << " at batch " << result.batch_size << ", size "
              << result.size_mb << " MB\n";
    return 0;
}

int cmd_report(const solarnet::RunConfig& cfg, const std::vector<std::string>& eval_paths,
               const std::vector<std::string>& bench_paths, bool include_reference,
               bool include_skipped) {
    solarnet::ComparisonReport report;
    for (std::size_t i = 0; i < eval_paths.size(); ++i) {
        if (!fs::exists(eval_paths[i])) throw MissingPath("eval report not found: " + eval_paths[i]);
        std::ifstream f(eval_paths[i]);
        json j;
        f >> j;
        solarnet::ReportRow row;
        row.model = j.at("model").get<std::string>();
        row.accuracy = j.at("metrics").at("accuracy").get<double>();
        row.f1 = j.at("metrics").at("macro_f1").get<double>();
        if (i < bench_paths.size() && fs::exists(bench_paths[i])) {
            std::ifstream bf(bench_paths[i]);
            json bj;
            bf >> bj;
            row.fps = bj.at("fps").get<double>();
            row.size_mb = bj.at("size_mb").get<double>();
        }
        row.note = "measured at desk scale";
        report.rows.push_back(std::move(row));
    }
    if (include_skipped) {
        for (const char* name : {"efficientnet_b0", "vgg19", "resnet50", "densenet121",
                                 "mobilenet_v3"}) {
            if (solarnet::backbone_available(name)) continue;
            solarnet::ReportRow row;
            row.model = solarnet::backbone_display_name(name);
            row.skipped = true;
            row.note = "backbone unavailable in this substrate";
            report.rows.push_back(std::move(row));
        }
    }
    solarnet::ComparisonReport reference;
    if (include_reference) reference.rows = solarnet::reference_rows();

    const fs::path dir = fs::path(cfg.output_dir) / "report";
    fs::create_directories(dir);
    std::string md = "## Measured (this machine)\n\n" + solarnet::comparison_report_markdown(report);
    if (include_reference)
        md += "\n## Published reference (original dataset, pretrained backbone, GPU)\n\n" +
              solarnet::comparison_report_markdown(reference);
    write_text(dir / "comparison.md", md);
    ordered_json combined;
    combined["measured"] = report.to_json();
    if (include_reference) combined["reference"] = reference.to_json();
    write_text(dir / "comparison.json", combined.dump(2) + "\n");

    std::vector<solarnet::BarDatum> fps_bars, size_bars;
    for (const auto& row : report.rows) {
        if (row.skipped || !row.fps) continue;
        fps_bars.push_back({row.model, *row.fps});
        if (row.size_mb) size_bars.push_back({row.model, *row.size_mb});
    }
    if (!fps_bars.empty()) solarnet::write_bar_chart(dir / "fps.png", "Inference FPS", fps_bars);
    if (!size_bars.empty())
        solarnet::write_bar_chart(dir / "size.png", "Checkpoint size (MB)", size_bars);
    archive_config(cfg, dir);

    std::cout << md;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"training, evaluation and explainability toolkit for solar panel fault detection"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string synth_out, checkpoint, images_dir, layer, split_name = "test";
    int target_class = -1;
    bool with_training = false;
    std::vector<std::string> eval_paths, bench_paths;
    bool no_reference = false, no_skipped = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic desk-scale corpus");
    add_common(synth, opts);
    synth->add_option("--out", synth_out, "corpus directory (default: data_root)");

    auto* prepare = app.add_subcommand("prepare", "ingest corpus, split, audit leakage");
    add_common(prepare, opts);

    auto* train = app.add_subcommand("train", "train on prepared manifests");
    add_common(train, opts);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a raw split");
    add_common(eval, opts);
    eval->add_option("--checkpoint", checkpoint, "checkpoint path");
    eval->add_option("--split", split_name, "val or test")->check(CLI::IsMember({"val", "test"}));

    auto* cv = app.add_subcommand("cv", "stratified k-fold cross-validation");
    add_common(cv, opts);

    auto* ablate = app.add_subcommand("ablate", "run the CBAM/loss/scheduler ablation grid");
    add_common(ablate, opts);

    auto* gradcam = app.add_subcommand("gradcam", "batch Grad-CAM heatmaps for a directory");
    add_common(gradcam, opts);
    gradcam->add_option("--checkpoint", checkpoint, "checkpoint path");
    gradcam->add_option("--images", images_dir, "directory of images")->required();
    gradcam->add_option("--layer", layer, "feature layer (default: last attention layer)");
    gradcam->add_option("--target-class", target_class, "fixed target class (default: predicted)");

    auto* bench = app.add_subcommand("bench", "measure inference FPS and model size");
    add_common(bench, opts);
    bench->add_option("--checkpoint", checkpoint, "checkpoint path");
    bench->add_flag("--time-training", with_training, "also time a full training run");

    auto* report = app.add_subcommand("report", "merge runs into the comparison table");
    add_common(report, opts);
    report->add_option("--eval", eval_paths, "eval_report.json paths");
    report->add_option("--bench", bench_paths, "benchmark.json paths (matched by order)");
    report->add_flag("--no-reference", no_reference, "omit published reference rows");
    report->add_flag("--no-skipped", no_skipped, "omit unavailable baseline rows");

    CLI11_PARSE(app, argc, argv);

    try {
        const solarnet::RunConfig cfg = load_config(opts);
        if (synth->parsed()) return cmd_synth(cfg, synth_out, opts.force);
        if (prepare->parsed()) return cmd_prepare(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (eval->parsed()) return cmd_eval(cfg, checkpoint, split_name);
        if (cv->parsed()) return cmd_cv(cfg);
        if (ablate->parsed()) return cmd_ablate(cfg);
        if (gradcam->parsed()) return cmd_gradcam(cfg, checkpoint, images_dir, layer, target_class);
        if (bench->parsed()) return cmd_bench(cfg, checkpoint, with_training);
        if (report->parsed())
            return cmd_report(cfg, eval_paths, bench_paths, !no_reference, !no_skipped);
    } catch (const MissingPath& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
