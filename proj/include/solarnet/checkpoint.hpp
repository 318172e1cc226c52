#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "solarnet/models.hpp"

namespace solarnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian float32; big-endian hosts unsupported");

// Self-describing container: magic line, 8-byte LE header length, JSON header
// (model spec + run metadata + parameter manifest), then raw little-endian
// float32 payloads in manifest order.
inline constexpr char kCheckpointMagic[] = "SOLARNETCKPT1\n";

struct CheckpointMetadata {
    std::uint64_t seed = 0;
    int epoch = -1;
    nlohmann::json metrics = nlohmann::json::object();
};

inline std::string serialize_checkpoint(Model<float>& model, const CheckpointMetadata& meta) {
    nlohmann::ordered_json header;
    header["format_version"] = 1;
    header["spec"] = model.spec().to_json();
    header["metadata"] = {{"seed", meta.seed}, {"epoch", meta.epoch}, {"metrics", meta.metrics}};
    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    std::string payload;
    std::size_t offset = 0;
    model.visit_params([&](nn::ParamRef<float> p) {
        nlohmann::ordered_json entry;
        entry["name"] = p.name;
        entry["shape"] = p.value->shape();
        entry["offset"] = offset;
        entry["count"] = p.value->size();
        entry["trainable"] = p.trainable;
        manifest.push_back(std::move(entry));
        const std::size_t bytes = p.value->size() * sizeof(float);
        payload.append(reinterpret_cast<const char*>(p.value->data()), bytes);
        offset += p.value->size();
    });
    header["params"] = std::move(manifest);

    const std::string header_str = header.dump();
    std::string out(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    std::uint64_t len = header_str.size();
    char lenbuf[8];
    std::memcpy(lenbuf, &len, 8);
    out.append(lenbuf, 8);
    out += header_str;
    out += payload;
    return out;
}

inline void save_checkpoint(const std::filesystem::path& path, Model<float>& model,
                            const CheckpointMetadata& meta) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path.string());
    const std::string blob = serialize_checkpoint(model, meta);
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!f) throw std::runtime_error("checkpoint write failed: " + path.string());
}

inline std::size_t serialized_size_bytes(Model<float>& model,
                                         const CheckpointMetadata& meta = {}) {
    return serialize_checkpoint(model, meta).size();
}

inline Model<float> deserialize_checkpoint(const std::string& blob,
                                           CheckpointMetadata* meta_out = nullptr) {
    const std::size_t magic_len = sizeof(kCheckpointMagic) - 1;
    if (blob.size() < magic_len + 8 || blob.compare(0, magic_len, kCheckpointMagic) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic)");
    std::uint64_t header_len = 0;
    std::memcpy(&header_len, blob.data() + magic_len, 8);
    if (blob.size() < magic_len + 8 + header_len)
        throw std::runtime_error("checkpoint truncated in header");
    const nlohmann::json header = nlohmann::json::parse(
        blob.substr(magic_len + 8, header_len));
    if (header.at("format_version").get<int>() != 1)
        throw std::runtime_error("unsupported checkpoint format version");

    const ModelSpec spec = ModelSpec::from_json(header.at("spec"));
    Model<float> model(spec, /*init_seed=*/0);

    const char* payload = blob.data() + magic_len + 8 + header_len;
    const std::size_t payload_floats = (blob.size() - magic_len - 8 - header_len) / sizeof(float);

    std::map<std::string, const nlohmann::json*> entries;
    for (const auto& e : header.at("params")) entries[e.at("name").get<std::string>()] = &e;

    model.visit_params([&](nn::ParamRef<float> p) {
        auto it = entries.find(p.name);
        if (it == entries.end())
            throw std::runtime_error("checkpoint missing parameter: " + p.name);
        const nlohmann::json& e = *it->second;
        const std::size_t count = e.at("count").get<std::size_t>();
        const std::size_t offset = e.at("offset").get<std::size_t>();
        if (count != p.value->size())
            throw std::runtime_error("checkpoint parameter size mismatch for " + p.name);
        if (offset + count > payload_floats)
            throw std::runtime_error("checkpoint truncated in payload at " + p.name);
        std::memcpy(p.value->data(), payload + offset * sizeof(float), count * sizeof(float));
        entries.erase(it);
    });
    if (!entries.empty())
        throw std::runtime_error("checkpoint has unknown parameter: " + entries.begin()->first);

    if (meta_out) {
        const auto& m = header.at("metadata");
        meta_out->seed = m.at("seed").get<std::uint64_t>();
        meta_out->epoch = m.at("epoch").get<int>();
        meta_out->metrics = m.at("metrics");
    }
    return model;
}

inline Model<float> load_checkpoint(const std::filesystem::path& path,
                                    CheckpointMetadata* meta_out = nullptr) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read checkpoint: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return deserialize_checkpoint(ss.str(), meta_out);
}

}  // namespace solarnet
