#pragma once

#include "pam/mesh.hpp"
#include "pam/tensor.hpp"

namespace pam {

struct LossReport {
    double vertex = 0.0;
    double joint = 0.0;
    double edge = 0.0;
    double normal = 0.0;
    double total = 0.0;
};

/// All four training losses as differentiable scalars plus the weighted
/// total = vertex + joint + 0.1*normal + 0.1*edge.
struct LossTerms {
    Tensor vertex, joint, edge, normal, total;
    LossReport report() const;
};

/// Sum over vertices of the coordinate-wise L1 distance.
Tensor loss_vertex(const Tensor& pred, const Tensor& target);

/// L1 distance between regressed joint sets J = W M.
Tensor loss_joint(const Tensor& pred, const Tensor& target, const JointRegressor& reg);

/// Sum over unique template edges of | |e| - |e~| |. A zero-length
/// predicted edge contributes its value but a clamped (zero) gradient.
Tensor loss_edge(const Tensor& pred, const Mesh& target, const TemplateMesh& tmpl);

/// Sum over faces and their three winding-order edges of
/// |<(v_i - v_j)/|v_i - v_j|, n~_k>| against ground-truth face normals.
/// Zero-area ground-truth faces are skipped; zero-length predicted edges
/// are skipped and counted under "loss_normal.zero_edge".
Tensor loss_normal(const Tensor& pred, const Mesh& target, const TemplateMesh& tmpl);

LossTerms combined_loss(const Tensor& pred, const Mesh& target, const TemplateMesh& tmpl);

}  // namespace pam
