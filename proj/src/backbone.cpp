#include "pam/backbone.hpp"

#include "pam/rng.hpp"

#include <cmath>

namespace pam {

size_t BackboneConfig::feature_dim() const {
    size_t d = 0;
    for (size_t c : channels) d += c;
    return d;
}

std::vector<size_t> BackboneConfig::stage_sizes() const {
    std::vector<size_t> sizes;
    size_t s = input_size;
    for (size_t l = 0; l < channels.size(); ++l) {
        s = (s + 2 - 3) / 2 + 1;  // 3x3, stride 2, pad 1
        sizes.push_back(s);
    }
    return sizes;
}

void BackboneConfig::validate() const {
    if (channels.size() != 5) throw ValueError("backbone needs exactly 5 stages");
    if (in_channels == 0 || input_size < 16) {
        throw ValueError("backbone input must be at least 16x16");
    }
    auto sizes = stage_sizes();
    for (size_t l = 1; l < 4; ++l) {
        if (sizes[l] >= sizes[l - 1]) throw ValueError("stage sizes must strictly decrease");
    }
    if (sizes[3] < 1) throw ValueError("stage 4 collapsed to zero extent");
}

BackboneConfig BackboneConfig::paper_preset() {
    BackboneConfig cfg;
    cfg.in_channels = 3;
    cfg.input_size = 224;
    cfg.channels = {64, 256, 512, 1024, 2048};
    return cfg;
}

std::vector<Tensor> BackboneParams::all() const {
    std::vector<Tensor> out;
    for (size_t l = 0; l < weights.size(); ++l) {
        out.push_back(weights[l]);
        out.push_back(biases[l]);
    }
    return out;
}

std::vector<std::pair<std::string, Tensor>> BackboneParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (size_t l = 0; l < weights.size(); ++l) {
        std::string base = "backbone.stage" + std::to_string(l + 1) + ".conv.";
        out.emplace_back(base + "weight", weights[l]);
        out.emplace_back(base + "bias", biases[l]);
    }
    return out;
}

BackboneParams init_backbone(const BackboneConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(mix_seed(seed, 0x6261636bULL));  // "back"
    BackboneParams p;
    size_t cin = cfg.in_channels;
    for (size_t l = 0; l < cfg.channels.size(); ++l) {
        size_t cout = cfg.channels[l];
        double fan_in = static_cast<double>(cin) * 9.0;
        double fan_out = static_cast<double>(cout) * 9.0;
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Tensor w = zeros({cout, cin, 3, 3});
        for (auto& v : w.node()->values) v = rng.uniform(-limit, limit);
        w.set_requires_grad(true);
        Tensor b = zeros({cout});
        b.set_requires_grad(true);
        p.weights.push_back(w);
        p.biases.push_back(b);
        cin = cout;
    }
    return p;
}

size_t FeaturePyramid::feature_dim() const {
    size_t d = global_feature.size();
    for (const auto& s : stages) d += s.shape()[0];
    return d;
}

void FeaturePyramid::validate() const {
    if (stages.size() != 4) throw ValueError("pyramid needs 4 spatial stages");
    for (size_t l = 0; l < 4; ++l) {
        if (stages[l].rank() != 3 || stages[l].shape()[1] != stages[l].shape()[2]) {
            throw ShapeError("stage " + std::to_string(l + 1) + " must be [C,S,S]");
        }
        if (l > 0 && stages[l].shape()[1] >= stages[l - 1].shape()[1]) {
            throw ValueError("stage sizes must strictly decrease");
        }
    }
    if (stages[3].shape()[1] < 1) throw ValueError("stage 4 extent must be >= 1");
    if (global_feature.rank() != 1) throw ShapeError("global feature must be a vector");
}

FeaturePyramid backbone_forward(const Tensor& image, const BackboneParams& params,
                                const BackboneConfig& cfg) {
    if (image.rank() != 3 || image.shape()[0] != cfg.in_channels ||
        image.shape()[1] != cfg.input_size || image.shape()[2] != cfg.input_size) {
        throw ShapeError("backbone expects [" + std::to_string(cfg.in_channels) + "," +
                         std::to_string(cfg.input_size) + "," +
                         std::to_string(cfg.input_size) + "], got " +
                         shape_str(image.shape()));
    }
    FeaturePyramid pyr;
    pyr.input_height = cfg.input_size;
    pyr.input_width = cfg.input_size;
    Tensor x = image;
    for (size_t l = 0; l < 4; ++l) {
        x = relu(add_channel_bias(conv2d(x, params.weights[l], 2, 1), params.biases[l]));
        pyr.stages.push_back(x);
    }
    // final transform stays linear so the pooled feature has no dead channels
    Tensor deepest = add_channel_bias(conv2d(x, params.weights[4], 2, 1), params.biases[4]);
    pyr.global_feature = global_avg_pool(deepest);
    pyr.validate();
    return pyr;
}

}  // namespace pam
