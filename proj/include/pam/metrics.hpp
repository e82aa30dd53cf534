#pragma once

#include "pam/mesh.hpp"

#include <vector>

namespace pam {

/// Similarity transform x -> s R x + t with proper rotation.
struct SimilarityTransform {
    double scale = 1.0;
    std::array<Vec3, 3> rotation = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    Vec3 translation = {0, 0, 0};

    Vec3 apply(const Vec3& p) const;
};

/// Mean per-joint position error after translating both sets so their
/// root joints coincide with the origin. Units follow the inputs.
double mpjpe(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
             size_t root_index = 0);

/// Closed-form similarity fit of pred onto gt minimizing the sum of
/// squared residuals (SVD of the centered cross-covariance with
/// determinant correction). Requires at least 3 non-collinear points.
SimilarityTransform procrustes_align(const std::vector<Vec3>& pred,
                                     const std::vector<Vec3>& gt);

/// Mean joint distance after optimal similarity alignment of pred onto gt.
double pa_mpjpe(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt);

}  // namespace pam
