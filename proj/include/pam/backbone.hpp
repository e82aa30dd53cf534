#pragma once

#include "pam/tensor.hpp"

#include <cstdint>
#include <vector>

namespace pam {

/// Image-side network: a plain 5-stage convolutional stack. Every stage is
/// a 3x3 stride-2 zero-pad-1 convolution; stages 1-4 apply ReLU and emit
/// spatial maps, stage 5 is a linear transform whose global average pool
/// is the global feature vector.
struct BackboneConfig {
    size_t in_channels = 3;
    size_t input_size = 64;  // square input
    std::vector<size_t> channels = {8, 16, 32, 64, 128};
    bool align_corners = false;  // sampling convention used downstream

    /// D: sum of all stage channels (local stages 1-4 plus global stage 5).
    size_t feature_dim() const;
    /// Spatial size after each of the 5 convolutions.
    std::vector<size_t> stage_sizes() const;
    void validate() const;

    /// Paper-scale preset: channels (64,256,512,1024,2048) at input 224,
    /// giving stage resolutions (112,56,28,14) and D = 3904.
    static BackboneConfig paper_preset();
};

struct BackboneParams {
    std::vector<Tensor> weights;  // per stage [C_l, C_{l-1}, 3, 3]
    std::vector<Tensor> biases;   // per stage [C_l]

    std::vector<Tensor> all() const;
    std::vector<std::pair<std::string, Tensor>> named() const;
};

/// Glorot-uniform weights, zero biases; deterministic per seed.
BackboneParams init_backbone(const BackboneConfig& cfg, uint64_t seed);

/// Coarse-to-fine feature maps: 4 spatial stages of strictly decreasing
/// resolution plus one globally pooled vector.
struct FeaturePyramid {
    std::vector<Tensor> stages;  // 4 maps [C_l, S_l, S_l]
    Tensor global_feature;       // [C_5]
    size_t input_height = 0;
    size_t input_width = 0;

    size_t feature_dim() const;
    void validate() const;
};

FeaturePyramid backbone_forward(const Tensor& image, const BackboneParams& params,
                                const BackboneConfig& cfg);

}  // namespace pam
