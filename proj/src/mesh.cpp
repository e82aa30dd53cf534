#include "pam/mesh.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <set>

namespace pam {

using nlohmann::json;

double vnorm(const Vec3& a) { return std::sqrt(vdot(a, a)); }

void JointRegressor::validate() const {
    std::vector<double> row_sum(joint_count, 0.0);
    for (const auto& t : triplets) {
        if (t.joint >= joint_count || t.vertex >= vertex_count) {
            throw ValueError("regressor triplet out of range");
        }
        if (t.weight < 0.0) throw ValueError("regressor weights must be nonnegative");
        row_sum[t.joint] += t.weight;
    }
    for (size_t j = 0; j < joint_count; ++j) {
        if (std::fabs(row_sum[j] - 1.0) > 1e-9) {
            throw ValueError("regressor row " + std::to_string(j) +
                             " sums to " + std::to_string(row_sum[j]) + ", expected 1");
        }
    }
}

void TemplateMesh::build() {
    size_t nv = vertices.size();
    if (nv == 0) throw ValueError("template has no vertices");
    if (vertex_iuv.size() != nv) throw ValueError("vertex_iuv size mismatch");
    if (part_count < 1) throw ValueError("part_count must be positive");

    std::vector<std::set<uint32_t>> adj(nv);
    for (const auto& f : faces) {
        if (f[0] >= nv || f[1] >= nv || f[2] >= nv) {
            throw ValueError("face index out of range");
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            throw ValueError("degenerate face (repeated vertex index)");
        }
        adj[f[0]].insert(f[1]);
        adj[f[0]].insert(f[2]);
        adj[f[1]].insert(f[0]);
        adj[f[1]].insert(f[2]);
        adj[f[2]].insert(f[0]);
        adj[f[2]].insert(f[1]);
    }
    neighbors.assign(nv, {});
    edges.clear();
    for (size_t i = 0; i < nv; ++i) {
        neighbors[i].assign(adj[i].begin(), adj[i].end());
        for (uint32_t j : adj[i]) {
            if (j > i) edges.push_back({static_cast<uint32_t>(i), j});
        }
    }

    // connectivity
    std::vector<char> seen(nv, 0);
    std::queue<uint32_t> q;
    q.push(0);
    seen[0] = 1;
    size_t reached = 1;
    while (!q.empty()) {
        uint32_t i = q.front();
        q.pop();
        for (uint32_t j : neighbors[i]) {
            if (!seen[j]) {
                seen[j] = 1;
                ++reached;
                q.push(j);
            }
        }
    }
    if (reached != nv) {
        throw ValueError("mesh graph is disconnected (" + std::to_string(reached) +
                         " of " + std::to_string(nv) + " vertices reachable)");
    }

    for (const auto& iuv : vertex_iuv) {
        if (iuv.part < 1 || iuv.part > part_count) {
            throw ValueError("vertex part id " + std::to_string(iuv.part) +
                             " outside [1," + std::to_string(part_count) + "]");
        }
        if (iuv.u < 0.0 || iuv.u > 1.0 || iuv.v < 0.0 || iuv.v > 1.0) {
            throw ValueError("vertex UV outside [0,1]");
        }
    }
    if (delta.empty()) delta = compute_delta(*this);
    if (delta.size() != nv) throw ValueError("delta size mismatch");
    for (double d : delta) {
        if (!(d > 0.0)) throw ValueError("delta must be strictly positive");
    }
    if (regressor.joint_count > 0) {
        if (regressor.vertex_count != nv) throw ValueError("regressor vertex count mismatch");
        regressor.validate();
    }
}

Tensor normalized_adjacency(const TemplateMesh& tmpl) {
    size_t nv = tmpl.vertex_count();
    if (tmpl.neighbors.size() != nv) {
        throw ValueError("template topology not built");
    }
    std::vector<double> deg(nv);
    for (size_t i = 0; i < nv; ++i) deg[i] = static_cast<double>(tmpl.neighbors[i].size()) + 1.0;
    Tensor out = zeros({nv, nv});
    auto& vals = out.node()->values;
    for (size_t i = 0; i < nv; ++i) {
        vals[i * nv + i] = 1.0 / deg[i];
        for (uint32_t j : tmpl.neighbors[i]) {
            vals[i * nv + j] = 1.0 / std::sqrt(deg[i] * deg[j]);
        }
    }
    return out;
}

std::vector<double> compute_delta(const TemplateMesh& tmpl) {
    size_t nv = tmpl.vertex_count();
    if (tmpl.neighbors.size() != nv) {
        throw ValueError("compute_delta requires built topology");
    }
    std::vector<double> delta(nv, -1.0);
    std::vector<size_t> pending;
    for (size_t k = 0; k < nv; ++k) {
        const auto& vk = tmpl.vertex_iuv[k];
        double best = std::numeric_limits<double>::infinity();
        for (uint32_t j : tmpl.neighbors[k]) {
            const auto& vj = tmpl.vertex_iuv[j];
            if (vj.part != vk.part) continue;
            double du = vk.u - vj.u, dv = vk.v - vj.v;
            best = std::min(best, std::sqrt(du * du + dv * dv));
        }
        if (std::isfinite(best) && best > 0.0) {
            delta[k] = best;
        } else {
            pending.push_back(k);
        }
    }
    if (!pending.empty()) {
        std::vector<double> valid;
        for (double d : delta) {
            if (d > 0.0) valid.push_back(d);
        }
        if (valid.empty()) {
            throw ValueError("no vertex has a same-part UV neighbor; cannot derive delta");
        }
        std::sort(valid.begin(), valid.end());
        double median = valid[valid.size() / 2];
        for (size_t k : pending) {
            delta[k] = median;
            count_incident("delta.fallback");
        }
        warn("compute_delta: " + std::to_string(pending.size()) +
             " vertices fell back to the median delta");
    }
    return delta;
}

std::vector<Vec3> face_normals(const Mesh& mesh, const TemplateMesh& tmpl) {
    std::vector<Vec3> normals(tmpl.face_count(), Vec3{0, 0, 0});
    for (size_t f = 0; f < tmpl.face_count(); ++f) {
        const auto& face = tmpl.faces[f];
        Vec3 e1 = vsub(mesh.vertices[face[1]], mesh.vertices[face[0]]);
        Vec3 e2 = vsub(mesh.vertices[face[2]], mesh.vertices[face[0]]);
        Vec3 n = vcross(e1, e2);
        double len = vnorm(n);
        if (0.5 * len < 1e-12) continue;  // degenerate face, excluded from sums
        normals[f] = vscale(n, 1.0 / len);
    }
    return normals;
}

std::vector<Vec3> regress_joints(const JointRegressor& reg, const Mesh& mesh) {
    if (reg.vertex_count != mesh.vertices.size()) {
        throw ShapeError("regressor expects " + std::to_string(reg.vertex_count) +
                         " vertices, mesh has " + std::to_string(mesh.vertices.size()));
    }
    std::vector<Vec3> joints(reg.joint_count, Vec3{0, 0, 0});
    for (const auto& t : reg.triplets) {
        joints[t.joint] = vadd(joints[t.joint], vscale(mesh.vertices[t.vertex], t.weight));
    }
    return joints;
}

Tensor regressor_tensor(const JointRegressor& reg) {
    Tensor w = zeros({reg.joint_count, reg.vertex_count});
    auto& vals = w.node()->values;
    for (const auto& t : reg.triplets) {
        vals[t.joint * reg.vertex_count + t.vertex] += t.weight;
    }
    return w;
}

Tensor mesh_to_tensor(const Mesh& mesh) {
    std::vector<double> data;
    data.reserve(mesh.vertices.size() * 3);
    for (const auto& v : mesh.vertices) {
        data.push_back(v[0]);
        data.push_back(v[1]);
        data.push_back(v[2]);
    }
    return tensor_from({mesh.vertices.size(), 3}, std::move(data));
}

Mesh tensor_to_mesh(const Tensor& t) {
    if (t.rank() != 2 || t.shape()[1] != 3) {
        throw ShapeError("mesh tensor must be [Nv,3], got " + shape_str(t.shape()));
    }
    Mesh m;
    m.vertices.resize(t.shape()[0]);
    for (size_t i = 0; i < m.vertices.size(); ++i) {
        m.vertices[i] = {t.values()[i * 3], t.values()[i * 3 + 1], t.values()[i * 3 + 2]};
    }
    return m;
}

void export_obj(const Mesh& mesh, const TemplateMesh& tmpl, const std::string& path) {
    for (const auto& v : mesh.vertices) {
        if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) {
            throw ValueError("export_obj: non-finite vertex coordinate");
        }
    }
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ValueError("cannot open " + path + " for writing");
    for (const auto& v : mesh.vertices) {
        std::fprintf(f, "v %.15g %.15g %.15g\n", v[0], v[1], v[2]);
    }
    for (const auto& face : tmpl.faces) {
        std::fprintf(f, "f %u %u %u\n", face[0] + 1, face[1] + 1, face[2] + 1);
    }
    std::fclose(f);
}

ObjData load_obj(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValueError("cannot open " + path);
    ObjData out;
    std::string tag;
    while (is >> tag) {
        if (tag == "v") {
            Vec3 v;
            is >> v[0] >> v[1] >> v[2];
            out.vertices.push_back(v);
        } else if (tag == "f") {
            FaceIndices f;
            is >> f[0] >> f[1] >> f[2];
            out.faces.push_back({f[0] - 1, f[1] - 1, f[2] - 1});
        } else {
            std::string rest;
            std::getline(is, rest);
        }
    }
    return out;
}

void save_template_json(const TemplateMesh& tmpl, const std::string& path) {
    json j;
    j["part_count"] = tmpl.part_count;
    auto& jv = j["vertices"] = json::array();
    for (const auto& v : tmpl.vertices) jv.push_back({v[0], v[1], v[2]});
    auto& jf = j["faces"] = json::array();
    for (const auto& f : tmpl.faces) jf.push_back({f[0], f[1], f[2]});
    auto& ji = j["iuv"] = json::array();
    for (const auto& i : tmpl.vertex_iuv) ji.push_back({i.part, i.u, i.v});
    j["delta"] = tmpl.delta;
    j["regressor"]["joint_count"] = tmpl.regressor.joint_count;
    auto& jt = j["regressor"]["triplets"] = json::array();
    for (const auto& t : tmpl.regressor.triplets) jt.push_back({t.joint, t.vertex, t.weight});
    std::ofstream os(path);
    if (!os) throw ValueError("cannot open " + path + " for writing");
    os << j.dump(1) << "\n";
}

TemplateMesh load_template_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValueError("cannot open " + path);
    json j = json::parse(is);
    TemplateMesh t;
    t.part_count = j.at("part_count").get<int>();
    for (const auto& v : j.at("vertices")) {
        t.vertices.push_back({v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
    }
    for (const auto& f : j.at("faces")) {
        t.faces.push_back({f[0].get<uint32_t>(), f[1].get<uint32_t>(), f[2].get<uint32_t>()});
    }
    for (const auto& i : j.at("iuv")) {
        t.vertex_iuv.push_back({i[0].get<int>(), i[1].get<double>(), i[2].get<double>()});
    }
    t.delta = j.at("delta").get<std::vector<double>>();
    t.regressor.joint_count = j.at("regressor").at("joint_count").get<size_t>();
    t.regressor.vertex_count = t.vertices.size();
    for (const auto& tr : j.at("regressor").at("triplets")) {
        t.regressor.triplets.push_back(
            {tr[0].get<uint32_t>(), tr[1].get<uint32_t>(), tr[2].get<double>()});
    }
    t.build();
    return t;
}

}  // namespace pam
