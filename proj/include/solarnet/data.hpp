#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "solarnet/image.hpp"
#include "solarnet/image_io.hpp"
#include "solarnet/rng.hpp"

namespace solarnet {

enum class Partition { train, val, test, unassigned };

inline const char* to_string(Partition p) {
    switch (p) {
        case Partition::train: return "train";
        case Partition::val: return "val";
        case Partition::test: return "test";
        default: return "unassigned";
    }
}

inline Partition partition_from_string(const std::string& s) {
    if (s == "train") return Partition::train;
    if (s == "val") return Partition::val;
    if (s == "test") return Partition::test;
    if (s == "unassigned") return Partition::unassigned;
    throw std::invalid_argument("unknown partition: " + s);
}

// One image. Raw records point at a file and have origin_id == provenance_id;
// derivatives (oversampling duplicates, augmented samples) carry a fresh
// provenance_id, inherit origin_id, and may hold pixels in memory.
struct SampleRecord {
    std::string provenance_id;
    std::string origin_id;
    std::string class_label;
    std::string image_ref;
    Partition partition = Partition::unassigned;
    std::shared_ptr<const Image> pixels;  // set for in-memory derivatives

    bool is_derivative() const { return origin_id != provenance_id; }
};

struct DatasetManifest {
    std::vector<std::string> classes;
    std::vector<SampleRecord> records;

    std::map<std::string, int> counts() const {
        std::map<std::string, int> c;
        for (const auto& cls : classes) c[cls] = 0;
        for (const auto& r : records) {
            auto it = c.find(r.class_label);
            if (it == c.end())
                throw std::logic_error("manifest record with unknown class: " + r.class_label);
            ++it->second;
        }
        return c;
    }

    int class_index(const std::string& label) const {
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] == label) return static_cast<int>(i);
        throw std::invalid_argument("unknown class label: " + label);
    }
};

struct SplitSpec {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
    std::uint64_t seed = 0;

    void validate() const {
        for (double r : {train, val, test})
            if (r < 0.0 || r > 1.0)
                throw std::invalid_argument("split: each ratio must be in [0,1]");
        if (std::abs(train + val + test - 1.0) > 1e-9)
            throw std::invalid_argument("split: ratios must sum to 1");
    }
};

struct DatasetSplits {
    std::vector<std::string> classes;
    std::vector<SampleRecord> train;
    std::vector<SampleRecord> val;
    std::vector<SampleRecord> test;
};

struct LeakageReport {
    bool pass = true;
    std::vector<std::string> violations;
    std::vector<std::string> reasons;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["pass"] = pass;
        j["violations"] = violations;
        j["reasons"] = reasons;
        return j;
    }
};

// Walks a directory-of-class-folders corpus. Classes come from subdirectory
// names (given order when expected_classes is set, sorted otherwise); each
// image file becomes one raw record whose origin is itself.
inline DatasetManifest load_manifest(
    const std::filesystem::path& root_dir,
    const std::optional<std::vector<std::string>>& expected_classes = std::nullopt) {
    namespace fs = std::filesystem;
    if (!fs::exists(root_dir) || !fs::is_directory(root_dir))
        throw std::runtime_error("dataset root not found: " + root_dir.string());

    std::vector<std::string> classes;
    if (expected_classes) {
        classes = *expected_classes;
        for (const auto& cls : classes)
            if (!fs::is_directory(root_dir / cls))
                throw std::runtime_error("missing class directory: " + cls);
    } else {
        for (const auto& entry : fs::directory_iterator(root_dir))
            if (entry.is_directory()) classes.push_back(entry.path().filename().string());
        std::sort(classes.begin(), classes.end());
    }
    if (classes.empty()) throw std::runtime_error("no class directories found in " + root_dir.string());

    DatasetManifest manifest;
    manifest.classes = classes;
    for (const auto& cls : classes) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(root_dir / cls))
            if (entry.is_regular_file() && has_image_extension(entry.path()))
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw std::runtime_error("empty class directory: " + cls);
        for (const auto& file : files) {
            if (!has_valid_image_signature(file))
                throw std::runtime_error("unreadable image: " + file.string());
            SampleRecord rec;
            rec.provenance_id = cls + "/" + file.filename().string();
            rec.origin_id = rec.provenance_id;
            rec.class_label = cls;
            rec.image_ref = file.generic_string();
            manifest.records.push_back(std::move(rec));
        }
    }
    return manifest;
}

// Per-class sizes under the floor-floor-remainder rule. floor applies to the
// IEEE double product, which is also how the test oracles state it.
struct SplitSizes {
    int train = 0, val = 0, test = 0;
};

inline SplitSizes split_sizes(int n, const SplitSpec& spec) {
    SplitSizes s;
    s.train = static_cast<int>(std::floor(spec.train * static_cast<double>(n)));
    s.val = static_cast<int>(std::floor(spec.val * static_cast<double>(n)));
    s.test = n - s.train - s.val;
    return s;
}

// Split before any augmentation: a seeded shuffle within each class, then
// contiguous assignment train/val/test. Deterministic for a fixed seed.
inline DatasetSplits stratified_split(const DatasetManifest& manifest, const SplitSpec& spec) {
    spec.validate();
    const bool all_positive = spec.train > 0 && spec.val > 0 && spec.test > 0;
    DatasetSplits splits;
    splits.classes = manifest.classes;
    for (std::size_t ci = 0; ci < manifest.classes.size(); ++ci) {
        const std::string& cls = manifest.classes[ci];
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < manifest.records.size(); ++i)
            if (manifest.records[i].class_label == cls) idx.push_back(i);
        if (all_positive && idx.size() < 3)
            throw std::runtime_error("class '" + cls + "' has " + std::to_string(idx.size()) +
                                     " samples; at least 3 required for a three-way split");
        if (idx.empty())
            throw std::runtime_error("class '" + cls + "' has no samples");
        Rng rng = rng_for(spec.seed, stream_tag("stratified_split"), ci);
        deterministic_shuffle(idx, rng);
        const SplitSizes sizes = split_sizes(static_cast<int>(idx.size()), spec);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            SampleRecord rec = manifest.records[idx[k]];
            if (static_cast<int>(k) < sizes.train) {
                rec.partition = Partition::train;
                splits.train.push_back(std::move(rec));
            } else if (static_cast<int>(k) < sizes.train + sizes.val) {
                rec.partition = Partition::val;
                splits.val.push_back(std::move(rec));
            } else {
                rec.partition = Partition::test;
                splits.test.push_back(std::move(rec));
            }
        }
    }
    return splits;
}

// Training-partition-only oversampling: originals pass through, minority
// classes gain seeded uniform-with-replacement duplicates up to
// target_per_class. Duplicates keep their source's origin_id.
inline std::vector<SampleRecord> balance_by_oversampling(
    const std::vector<SampleRecord>& train_records, int target_per_class, std::uint64_t seed) {
    if (target_per_class < 1)
        throw std::invalid_argument("oversampling: target_per_class must be >= 1");
    for (const auto& r : train_records)
        if (r.partition != Partition::train)
            throw std::runtime_error("oversampling applied outside the train partition (record " +
                                     r.provenance_id + "): protocol violation");

    std::vector<std::string> class_order;
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < train_records.size(); ++i) {
        const auto& label = train_records[i].class_label;
        if (!by_class.count(label)) class_order.push_back(label);
        by_class[label].push_back(i);
    }
    for (const auto& cls : class_order)
        if (static_cast<int>(by_class[cls].size()) > target_per_class)
            throw std::runtime_error("oversampling: class '" + cls + "' already has " +
                                     std::to_string(by_class[cls].size()) +
                                     " records, above target " + std::to_string(target_per_class) +
                                     "; downsampling is refused");

    std::vector<SampleRecord> out = train_records;
    for (std::size_t ci = 0; ci < class_order.size(); ++ci) {
        const auto& members = by_class[class_order[ci]];
        const int need = target_per_class - static_cast<int>(members.size());
        Rng rng = rng_for(seed, stream_tag("oversample"), ci);
        for (int k = 0; k < need; ++k) {
            const auto& src = train_records[members[rng.below(members.size())]];
            SampleRecord dup = src;
            dup.provenance_id = src.provenance_id + "#dup" + std::to_string(k);
            dup.origin_id = src.origin_id;
            out.push_back(std::move(dup));
        }
    }
    return out;
}

// Audits the split-before-augment protocol: no evaluation provenance may
// appear as a training derivative's origin, and val/test must stay raw.
// A failing audit is a successful call returning a failing report.
inline LeakageReport verify_no_leakage(const DatasetSplits& splits,
                                       const std::vector<SampleRecord>& train_derivatives) {
    LeakageReport report;
    std::set<std::string> eval_prov;
    for (const auto* part : {&splits.val, &splits.test})
        for (const auto& r : *part) eval_prov.insert(r.provenance_id);

    std::set<std::string> flagged;
    for (const auto& d : train_derivatives) {
        if (!d.is_derivative()) continue;
        if (eval_prov.count(d.origin_id) && flagged.insert(d.origin_id).second) {
            report.violations.push_back(d.origin_id);
            report.reasons.push_back("train derivative originates from evaluation record");
        }
    }
    for (const auto* part : {&splits.val, &splits.test}) {
        for (const auto& r : *part) {
            if (r.is_derivative()) {
                report.violations.push_back(r.provenance_id);
                report.reasons.push_back("derivative in evaluation split");
            }
        }
    }
    report.pass = report.violations.empty();
    return report;
}

// JSON-lines manifest serialization: one object per record, fixed key order,
// greppable and diff-able.
inline nlohmann::ordered_json record_to_json(const SampleRecord& r) {
    nlohmann::ordered_json j;
    j["provenance_id"] = r.provenance_id;
    j["origin_id"] = r.origin_id;
    j["class_label"] = r.class_label;
    j["image_ref"] = r.image_ref;
    j["partition"] = to_string(r.partition);
    return j;
}

inline SampleRecord record_from_json(const nlohmann::json& j) {
    SampleRecord r;
    r.provenance_id = j.at("provenance_id").get<std::string>();
    r.origin_id = j.at("origin_id").get<std::string>();
    r.class_label = j.at("class_label").get<std::string>();
    r.image_ref = j.at("image_ref").get<std::string>();
    r.partition = partition_from_string(j.at("partition").get<std::string>());
    return r;
}

inline void write_manifest_jsonl(const std::filesystem::path& path,
                                 const std::vector<SampleRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

inline std::vector<SampleRecord> read_manifest_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read manifest: " + path.string());
    std::vector<SampleRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error("bad manifest line " + std::to_string(line_no) + " in " +
                                     path.string() + ": " + e.what());
        }
    }
    return records;
}

}  // namespace solarnet
