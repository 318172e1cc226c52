#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "solarnet/cbam.hpp"
#include "solarnet/nn.hpp"
#include "solarnet/rng.hpp"
#include "solarnet/tensor.hpp"

namespace solarnet {

struct BackboneSpec {
    std::string name = "tiny";
    int output_channels = 0;  // filled in by the registry at build time
    bool pretrained = false;
};

struct ModelSpec {
    BackboneSpec backbone;
    bool use_cbam = true;
    double dropout_p = 0.4;
    int num_classes = 6;
    int cbam_reduction = 16;
    int cbam_spatial_kernel = 7;

    void validate() const {
        if (dropout_p < 0 || dropout_p >= 1)
            throw std::invalid_argument("model: dropout_p must be in [0,1)");
        if (num_classes < 2) throw std::invalid_argument("model: num_classes must be >= 2");
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["backbone"] = {{"name", backbone.name},
                         {"output_channels", backbone.output_channels},
                         {"pretrained", backbone.pretrained}};
        j["use_cbam"] = use_cbam;
        j["dropout_p"] = dropout_p;
        j["num_classes"] = num_classes;
        j["cbam_reduction"] = cbam_reduction;
        j["cbam_spatial_kernel"] = cbam_spatial_kernel;
        return j;
    }

    static ModelSpec from_json(const nlohmann::json& j) {
        ModelSpec s;
        s.backbone.name = j.at("backbone").at("name").get<std::string>();
        s.backbone.output_channels = j.at("backbone").at("output_channels").get<int>();
        s.backbone.pretrained = j.at("backbone").at("pretrained").get<bool>();
        s.use_cbam = j.at("use_cbam").get<bool>();
        s.dropout_p = j.at("dropout_p").get<double>();
        s.num_classes = j.at("num_classes").get<int>();
        s.cbam_reduction = j.at("cbam_reduction").get<int>();
        s.cbam_spatial_kernel = j.at("cbam_spatial_kernel").get<int>();
        return s;
    }
};

// Backbone registry. The heavyweight pretrained baselines attach through the
// same adapter surface when a substrate provides them; here they are declared
// but unavailable, and reports render them as "skipped".
struct BackboneInfo {
    std::vector<int> widths;   // empty means not buildable in this substrate
    double leaky_slope = 0.0;
    std::string display_name;
};

inline const BackboneInfo& backbone_info(const std::string& name) {
    static const std::map<std::string, BackboneInfo> registry = {
        {"tiny", {{16, 32, 32}, 0.0, "TinyBackbone"}},
        {"custom_cnn", {{32, 64, 128, 256}, 0.01, "CustomCNN"}},
        {"efficientnet_b0", {{}, 0.0, "EfficientNet-B0"}},
        {"vgg19", {{}, 0.0, "VGG19"}},
        {"resnet50", {{}, 0.0, "ResNet50"}},
        {"densenet121", {{}, 0.0, "DenseNet121"}},
        {"mobilenet_v3", {{}, 0.0, "MobileNetV3"}},
    };
    auto it = registry.find(name);
    if (it == registry.end()) throw std::invalid_argument("unknown backbone: " + name);
    return it->second;
}

inline bool backbone_available(const std::string& name) {
    return !backbone_info(name).widths.empty();
}

inline std::string backbone_display_name(const std::string& name) {
    return backbone_info(name).display_name;
}

// conv3x3 -> batch norm -> rectifier -> 2x max pool
template <typename T>
struct ConvBlock {
    nn::Conv2d<T> conv;
    nn::BatchNorm2d<T> bn;
    nn::LeakyReLU<T> act;
    nn::MaxPool2d<T> pool;

    ConvBlock(int in_ch, int out_ch, double slope, Rng& rng)
        : conv(in_ch, out_ch, 3, 1, 1, rng), bn(out_ch),
          act(static_cast<T>(slope)), pool(2, 2) {}

    Tensor<T> forward(const Tensor<T>& x, nn::Mode mode) {
        return pool.forward(act.forward(bn.forward(conv.forward(x), mode)));
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        return conv.backward(bn.backward(act.backward(pool.backward(dy))));
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
        conv.visit(prefix + ".conv", fn);
        bn.visit(prefix + ".bn", fn);
    }
};

template <typename T>
class Backbone {
public:
    Backbone(const std::string& name, Rng& rng) : name_(name) {
        const BackboneInfo& info = backbone_info(name);
        if (info.widths.empty())
            throw std::runtime_error("backbone '" + name +
                                     "' is not available in this numerical substrate; "
                                     "register an adapter or pick 'tiny' / 'custom_cnn'");
        int in_ch = 3;
        for (int width : info.widths) {
            blocks_.emplace_back(in_ch, width, info.leaky_slope, rng);
            in_ch = width;
        }
        out_channels_ = in_ch;
    }

    Tensor<T> forward(const Tensor<T>& x, nn::Mode mode) {
        block_outputs_.clear();
        Tensor<T> h = x;
        for (auto& block : blocks_) {
            if (h.dim(2) < 2 || h.dim(3) < 2)
                throw std::invalid_argument("backbone '" + name_ + "': input too small, " +
                                            h.shape_str() + " cannot be pooled further");
            h = block.forward(h, mode);
            block_outputs_.push_back(h);
        }
        return h;
    }

    // Backward through blocks > `down_to`; pass -1 for the full chain.
    Tensor<T> backward(const Tensor<T>& dy, int down_to = -1) {
        Tensor<T> g = dy;
        for (int i = static_cast<int>(blocks_.size()) - 1; i > down_to; --i)
            g = blocks_[static_cast<std::size_t>(i)].backward(g);
        return g;
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& fn) {
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i].visit(prefix + ".block" + std::to_string(i), fn);
    }

    int out_channels() const { return out_channels_; }
    int num_blocks() const { return static_cast<int>(blocks_.size()); }
    const Tensor<T>& block_output(int i) const { return block_outputs_.at(static_cast<std::size_t>(i)); }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    std::vector<ConvBlock<T>> blocks_;
    std::vector<Tensor<T>> block_outputs_;
    int out_channels_ = 0;
};

// Full classifier: backbone -> (CBAM when enabled) -> global average pool ->
// dropout -> linear head. Dropout acts only in training mode.
template <typename T>
class Model {
public:
    Model(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
        spec_.validate();
        if (spec_.backbone.pretrained)
            throw std::runtime_error("pretrained weights for backbone '" + spec_.backbone.name +
                                     "' are unavailable; set pretrained=false to train from scratch");
        Rng rng = rng_for(init_seed, stream_tag("model_init"));
        backbone_.emplace(spec_.backbone.name, rng);
        spec_.backbone.output_channels = backbone_->out_channels();
        if (spec_.use_cbam)
            cbam_.emplace(backbone_->out_channels(), spec_.cbam_reduction,
                          spec_.cbam_spatial_kernel, rng);
        dropout_ = nn::Dropout<T>(static_cast<T>(spec_.dropout_p));
        head_ = nn::Linear<T>(backbone_->out_channels(), spec_.num_classes, rng);
    }

    const ModelSpec& spec() const { return spec_; }

    void set_dropout_key(std::uint64_t key) { dropout_.set_step_key(key); }

    Tensor<T> forward(const Tensor<T>& batch, nn::Mode mode) {
        Tensor<T> h = backbone_->forward(batch, mode);
        if (cbam_) h = cbam_->forward(h);
        features_ = h;
        h = gap_.forward(h);
        h = dropout_.forward(h, mode);
        return head_.forward(h);
    }

    // Full backward from d(loss)/d(logits); accumulates parameter gradients
    // and returns d(loss)/d(input).
    Tensor<T> backward(const Tensor<T>& dlogits) {
        Tensor<T> g = head_.backward(dlogits);
        g = dropout_.backward(g);
        g = gap_.backward(g);
        if (cbam_) g = cbam_->backward(g);
        return backbone_->backward(g);
    }

    void visit_params(const nn::ParamVisitor<T>& fn) {
        backbone_->visit("backbone", fn);
        if (cbam_) cbam_->visit("cbam", fn);
        head_.visit("head", fn);
    }

    // Feature taps for attribution: named spatial layers of the last forward.
    std::vector<std::string> feature_layers() const {
        std::vector<std::string> names;
        for (int i = 0; i < backbone_->num_blocks(); ++i)
            names.push_back("backbone.block" + std::to_string(i));
        if (cbam_) names.push_back("cbam");
        return names;
    }

    std::string default_feature_layer() const {
        return cbam_ ? "cbam" : "backbone.block" + std::to_string(backbone_->num_blocks() - 1);
    }

    const Tensor<T>& feature_output(const std::string& layer) const {
        if (layer == "cbam") {
            if (!cbam_) throw std::invalid_argument("model has no cbam layer");
            return features_;
        }
        return backbone_->block_output(parse_block(layer));
    }

    // Gradient of sum(dlogits . logits) w.r.t. the named layer's output.
    // Touches parameter grad accumulators on the way down; callers either run
    // it outside training steps or zero grads afterwards.
    Tensor<T> feature_gradient(const std::string& layer, const Tensor<T>& dlogits) {
        Tensor<T> g = head_.backward(dlogits);
        g = dropout_.backward(g);
        g = gap_.backward(g);
        if (layer == "cbam") {
            if (!cbam_) throw std::invalid_argument("model has no cbam layer");
            return g;
        }
        const int target = parse_block(layer);
        if (cbam_) g = cbam_->backward(g);
        return backbone_->backward(g, target);
    }

    int num_classes() const { return spec_.num_classes; }
    int feature_channels() const { return backbone_->out_channels(); }
    const std::string& backbone_name() const { return backbone_->name(); }

private:
    int parse_block(const std::string& layer) const {
        const std::string prefix = "backbone.block";
        if (layer.rfind(prefix, 0) != 0)
            throw std::invalid_argument("unknown feature layer: " + layer);
        const int i = std::stoi(layer.substr(prefix.size()));
        if (i < 0 || i >= backbone_->num_blocks())
            throw std::invalid_argument("unknown feature layer: " + layer);
        return i;
    }

    ModelSpec spec_;
    std::optional<Backbone<T>> backbone_;
    std::optional<CbamBlock<T>> cbam_;
    nn::GlobalAvgPool<T> gap_;
    nn::Dropout<T> dropout_;
    nn::Linear<T> head_;
    Tensor<T> features_;
};

template <typename T = float>
Model<T> build_model(const ModelSpec& spec, std::uint64_t init_seed = 0) {
    return Model<T>(spec, init_seed);
}

// The fully specified baseline: 4 conv blocks with batch norm and leaky
// rectifier, widths doubling from 32, then GAP and a linear head.
template <typename T = float>
Model<T> build_custom_cnn(int num_classes, std::uint64_t init_seed = 0) {
    ModelSpec spec;
    spec.backbone.name = "custom_cnn";
    spec.use_cbam = false;
    spec.dropout_p = 0.0;
    spec.num_classes = num_classes;
    return Model<T>(spec, init_seed);
}

template <typename T>
long long count_parameters(Model<T>& model) {
    long long n = 0;
    model.visit_params([&](nn::ParamRef<T> p) {
        if (p.trainable) n += static_cast<long long>(p.value->size());
    });
    return n;
}

}  // namespace solarnet
