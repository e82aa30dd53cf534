#pragma once

#include "pam/backbone.hpp"
#include "pam/correspondence.hpp"
#include "pam/mesh.hpp"
#include "pam/tensor.hpp"

#include <cstdint>
#include <vector>

namespace pam {

/// Texel taps and weights for one bilinear lookup. The input-image point
/// (0-based pixel-center coordinates) is rescaled to the map grid with
/// align-corners=false by default (g = (p + 0.5) * S / H - 0.5) and edge
/// clamped; the four weights always sum to 1.
struct BilinearTap {
    size_t i0, i1, j0, j1;
    double w00, w01, w10, w11;
};
BilinearTap bilinear_tap(double row, double col, size_t map_h, size_t map_w,
                         size_t in_h, size_t in_w, bool align_corners);

/// Differentiable bilinear sample of map [C,S,S] at a continuous
/// input-image location. Points outside [-0.5, H-0.5] x [-0.5, W-0.5]
/// are rejected.
Tensor bilinear_sample(const Tensor& map, double row, double col, size_t in_h,
                       size_t in_w, bool align_corners = false);

/// Slot offsets of one row of the vertex feature matrix:
/// [stage1 .. stage4 | global | c_k (2) | t-pose (3)], width = D + 5.
struct FeatureLayout {
    std::vector<size_t> stage_offset;  // 4 entries
    std::vector<size_t> stage_channels;
    size_t global_offset = 0;
    size_t global_channels = 0;
    size_t pixel_offset = 0;
    size_t tpose_offset = 0;
    size_t width = 0;
};
FeatureLayout feature_layout(const std::vector<size_t>& channels);

/// Builds the [Nv, D+5] vertex feature matrix. Matched vertices sample
/// stages 1-4 bilinearly at their pixel and store the pixel location
/// normalized to (row/H, col/W); absent vertices carry zeros in the local
/// and pixel slots. The global feature and T-pose coordinates fill every
/// row. Differentiable into all five pyramid tensors.
Tensor assemble_vertex_features(const FeaturePyramid& pyramid,
                                const CorrespondenceSet& corr,
                                const TemplateMesh& tmpl,
                                bool align_corners = false);

/// Ablation baseline: local and pixel slots forced to zero for every
/// vertex, equivalent to assembling under an all-absent correspondence.
Tensor global_only_features(const FeaturePyramid& pyramid, const TemplateMesh& tmpl);

}  // namespace pam
