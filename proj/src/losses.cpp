#include "pam/losses.hpp"

#include <cmath>

namespace pam {

namespace {

void check_pred_shape(const Tensor& pred, size_t nv, const char* who) {
    if (pred.rank() != 2 || pred.shape()[0] != nv || pred.shape()[1] != 3) {
        throw ShapeError(std::string(who) + " expects [" + std::to_string(nv) +
                         ",3], got " + shape_str(pred.shape()));
    }
}

}  // namespace

LossReport LossTerms::report() const {
    return {vertex.item(), joint.item(), edge.item(), normal.item(), total.item()};
}

Tensor loss_vertex(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw ShapeError("loss_vertex shapes differ: " + shape_str(pred.shape()) +
                         " vs " + shape_str(target.shape()));
    }
    return sum(abs(sub(pred, target)));
}

Tensor loss_joint(const Tensor& pred, const Tensor& target, const JointRegressor& reg) {
    Tensor w = regressor_tensor(reg);
    Tensor jp = matmul(w, pred);
    Tensor jt = matmul(w, target);
    return sum(abs(sub(jp, detach(jt))));
}

Tensor loss_edge(const Tensor& pred, const Mesh& target, const TemplateMesh& tmpl) {
    size_t nv = tmpl.vertex_count();
    check_pred_shape(pred, nv, "loss_edge");
    if (target.vertices.size() != nv) throw ShapeError("loss_edge target size mismatch");

    std::vector<double> gt_len(tmpl.edges.size());
    for (size_t e = 0; e < tmpl.edges.size(); ++e) {
        gt_len[e] = vnorm(vsub(target.vertices[tmpl.edges[e][0]],
                               target.vertices[tmpl.edges[e][1]]));
    }
    auto node = std::make_shared<Tensor::Node>();
    node->shape = {};
    node->dtype = pred.dtype();
    const auto& pv = pred.values();
    double acc = 0.0;
    for (size_t e = 0; e < tmpl.edges.size(); ++e) {
        uint32_t i = tmpl.edges[e][0], j = tmpl.edges[e][1];
        double dx = pv[i * 3] - pv[j * 3];
        double dy = pv[i * 3 + 1] - pv[j * 3 + 1];
        double dz = pv[i * 3 + 2] - pv[j * 3 + 2];
        acc += std::fabs(std::sqrt(dx * dx + dy * dy + dz * dz) - gt_len[e]);
    }
    node->values.assign(1, acc);
    Tensor out(node);
    if (!pred.requires_grad()) return out;
    node->requires_grad = true;
    node->parents = {pred};
    const TemplateMesh* tp = &tmpl;  // templates outlive tapes in this artifact
    node->backward_fn = [tp, gt_len = std::move(gt_len)](Tensor::Node& self) {
        Tensor& p = self.parents[0];
        p.ensure_grad();
        double g = self.grad[0];
        const auto& pv = p.values();
        double* gp = p.node()->grad.data();
        for (size_t e = 0; e < tp->edges.size(); ++e) {
            uint32_t i = tp->edges[e][0], j = tp->edges[e][1];
            double d[3] = {pv[i * 3] - pv[j * 3], pv[i * 3 + 1] - pv[j * 3 + 1],
                           pv[i * 3 + 2] - pv[j * 3 + 2]};
            double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            if (len < 1e-12) continue;  // clamped gradient at a collapsed edge
            double diff = len - gt_len[e];
            double s = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) * g / len;
            for (int c = 0; c < 3; ++c) {
                gp[i * 3 + c] += s * d[c];
                gp[j * 3 + c] -= s * d[c];
            }
        }
    };
    return out;
}

Tensor loss_normal(const Tensor& pred, const Mesh& target, const TemplateMesh& tmpl) {
    size_t nv = tmpl.vertex_count();
    check_pred_shape(pred, nv, "loss_normal");
    if (target.vertices.size() != nv) throw ShapeError("loss_normal target size mismatch");

    std::vector<Vec3> normals = face_normals(target, tmpl);
    auto node = std::make_shared<Tensor::Node>();
    node->shape = {};
    node->dtype = pred.dtype();
    const auto& pv = pred.values();
    double acc = 0.0;
    for (size_t f = 0; f < tmpl.face_count(); ++f) {
        const Vec3& n = normals[f];
        if (n[0] == 0.0 && n[1] == 0.0 && n[2] == 0.0) continue;  // degenerate gt face
        const auto& face = tmpl.faces[f];
        for (int e = 0; e < 3; ++e) {
            uint32_t a = face[e], b = face[(e + 1) % 3];
            double d[3] = {pv[a * 3] - pv[b * 3], pv[a * 3 + 1] - pv[b * 3 + 1],
                           pv[a * 3 + 2] - pv[b * 3 + 2]};
            double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            if (len < 1e-12) {
                count_incident("loss_normal.zero_edge");
                continue;
            }
            acc += std::fabs((d[0] * n[0] + d[1] * n[1] + d[2] * n[2]) / len);
        }
    }
    node->values.assign(1, acc);
    Tensor out(node);
    if (!pred.requires_grad()) return out;
    node->requires_grad = true;
    node->parents = {pred};
    const TemplateMesh* tp = &tmpl;
    node->backward_fn = [tp, normals = std::move(normals)](Tensor::Node& self) {
        Tensor& p = self.parents[0];
        p.ensure_grad();
        double g = self.grad[0];
        const auto& pv = p.values();
        double* gp = p.node()->grad.data();
        for (size_t f = 0; f < tp->face_count(); ++f) {
            const Vec3& n = normals[f];
            if (n[0] == 0.0 && n[1] == 0.0 && n[2] == 0.0) continue;
            const auto& face = tp->faces[f];
            for (int e = 0; e < 3; ++e) {
                uint32_t a = face[e], b = face[(e + 1) % 3];
                double d[3] = {pv[a * 3] - pv[b * 3], pv[a * 3 + 1] - pv[b * 3 + 1],
                               pv[a * 3 + 2] - pv[b * 3 + 2]};
                double len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                double len = std::sqrt(len2);
                if (len < 1e-12) continue;
                double s = (d[0] * n[0] + d[1] * n[1] + d[2] * n[2]) / len;
                double sg = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
                // d/dd |<d,n>|/|d| = sign * (n/|d| - <d,n> d / |d|^3)
                for (int c = 0; c < 3; ++c) {
                    double dd = sg * (n[c] / len - s * d[c] / len2) * g;
                    gp[a * 3 + c] += dd;
                    gp[b * 3 + c] -= dd;
                }
            }
        }
    };
    return out;
}

LossTerms combined_loss(const Tensor& pred, const Mesh& target, const TemplateMesh& tmpl) {
    LossTerms t;
    Tensor target_t = mesh_to_tensor(target);
    t.vertex = loss_vertex(pred, target_t);
    t.joint = loss_joint(pred, target_t, tmpl.regressor);
    t.edge = loss_edge(pred, target, tmpl);
    t.normal = loss_normal(pred, target, tmpl);
    t.total = add(add(t.vertex, t.joint),
                  add(scale(t.normal, 0.1), scale(t.edge, 0.1)));
    return t;
}

}  // namespace pam
