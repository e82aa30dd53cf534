#pragma once

#include "pam/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pam {

using Vec3 = std::array<double, 3>;
using FaceIndices = std::array<uint32_t, 3>;

inline Vec3 vsub(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 vadd(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 vscale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double vdot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 vcross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}
double vnorm(const Vec3& a);

/// Per-vertex location on the template's per-part UV atlas.
struct VertexIuv {
    int part = 0;   // 1..part_count
    double u = 0.0;
    double v = 0.0;
};

/// Sparse nonnegative row-stochastic matrix mapping vertices to joints.
struct JointRegressor {
    struct Triplet {
        uint32_t joint;
        uint32_t vertex;
        double weight;
    };
    size_t joint_count = 0;
    size_t vertex_count = 0;
    std::vector<Triplet> triplets;

    void validate() const;  // entries >= 0, rows sum to 1 within 1e-9
};

/// Posed vertex coordinates over the template topology.
struct Mesh {
    std::vector<Vec3> vertices;
};

/// T-posed topology plus everything derived from it: per-vertex IUV,
/// correspondence thresholds, 1-ring neighborhoods, unique edge list and
/// the joint regressor. Immutable after build(); shareable across threads.
struct TemplateMesh {
    std::vector<Vec3> vertices;
    std::vector<FaceIndices> faces;
    std::vector<VertexIuv> vertex_iuv;
    std::vector<double> delta;
    int part_count = 0;
    JointRegressor regressor;

    // derived by build()
    std::vector<std::vector<uint32_t>> neighbors;      // sorted, no self
    std::vector<std::array<uint32_t, 2>> edges;        // unique, a < b

    size_t vertex_count() const { return vertices.size(); }
    size_t face_count() const { return faces.size(); }

    /// Derives topology and checks every invariant (face indices in range,
    /// no degenerate faces, symmetric edge set, connected graph, IUV and
    /// delta bounds). Throws ValueError on violation.
    void build();

    Mesh t_pose() const { return Mesh{vertices}; }
};

/// Kipf normalization D^{-1/2} (A+I) D^{-1/2} over the mesh graph.
/// Symmetric, nonnegative; rejects a disconnected graph.
Tensor normalized_adjacency(const TemplateMesh& tmpl);

/// delta_k = min UV distance from vertex k to its 1-ring neighbors of the
/// same part. Vertices with no same-part neighbor (or only UV-coincident
/// ones) fall back to the global median delta; each fallback is counted
/// under "delta.fallback".
std::vector<double> compute_delta(const TemplateMesh& tmpl);

/// Unit normals per face: normalize((b-a) x (c-a)). Faces with area below
/// 1e-12 get a zero normal (callers skip them in normal-loss sums).
std::vector<Vec3> face_normals(const Mesh& mesh, const TemplateMesh& tmpl);

/// J = W M as plain geometry.
std::vector<Vec3> regress_joints(const JointRegressor& reg, const Mesh& mesh);

/// Dense [Nj, Nv] tensor of the regressor, for the differentiable path
/// J = matmul(regressor_tensor(W), vertices).
Tensor regressor_tensor(const JointRegressor& reg);

Tensor mesh_to_tensor(const Mesh& mesh);
Mesh tensor_to_mesh(const Tensor& t);

/// Wavefront OBJ export ("v x y z" then 1-based "f a b c"); 15 significant
/// digits. Non-finite coordinates are rejected.
void export_obj(const Mesh& mesh, const TemplateMesh& tmpl, const std::string& path);
struct ObjData {
    std::vector<Vec3> vertices;
    std::vector<FaceIndices> faces;
};
ObjData load_obj(const std::string& path);

/// Template JSON serialization (vertices, faces, iuv, delta, regressor
/// as sparse triplets).
void save_template_json(const TemplateMesh& tmpl, const std::string& path);
TemplateMesh load_template_json(const std::string& path);

}  // namespace pam
