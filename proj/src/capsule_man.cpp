#include "pam/capsule_man.hpp"

#include "pam/rng.hpp"

#include <cmath>

namespace pam {

namespace {

constexpr double kChainGap = 0.004;  // axial inset between chained segments

struct SegmentSpec {
    const char* name;
    Vec3 from, to;
    double r0, r1;
    size_t rings;
    bool cap_start, cap_end;
    int chain_parent;   // segment index whose last ring we stitch to, or -1
    int attach_parent;  // segment index for a sliver connector, or -1
};

struct BuiltSegment {
    std::vector<std::vector<uint32_t>> ring_vertices;  // [ring][column]
    Vec3 axis;  // unit
};

Vec3 normalized(const Vec3& v) {
    double n = vnorm(v);
    return {v[0] / n, v[1] / n, v[2] / n};
}

void frame_of(const Vec3& w, Vec3& u, Vec3& v) {
    Vec3 ref = std::fabs(w[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    u = normalized(vcross(ref, w));
    v = vcross(w, u);
}

}  // namespace

CapsuleConfig CapsuleConfig::mini() {
    CapsuleConfig c;
    c.sectors = 3;
    c.torso_rings = 3;
    c.neck_rings = 3;
    c.head_rings = 3;
    c.limbs = false;
    return c;
}

CapsuleMan make_capsule_man(const CapsuleConfig& cfg) {
    if (cfg.sectors < 3) throw ValueError("capsule template needs at least 3 sectors");
    size_t tr = std::max<size_t>(2, cfg.torso_rings);
    size_t nr = std::max<size_t>(2, cfg.neck_rings);
    size_t hr = std::max<size_t>(2, cfg.head_rings);
    size_t lr = std::max<size_t>(2, cfg.limb_rings);

    std::vector<SegmentSpec> segs = {
        {"pelvis", {0, -0.10, 0}, {0, 0.18, 0}, 0.13, 0.15, tr, true, false, -1, -1},
        {"chest", {0, 0.18, 0}, {0, 0.46, 0}, 0.15, 0.07, tr, false, false, 0, -1},
        {"neck", {0, 0.46, 0}, {0, 0.56, 0}, 0.07, 0.08, nr, false, false, 1, -1},
        {"head", {0, 0.56, 0}, {0, 0.78, 0}, 0.08, 0.10, hr, false, true, 2, -1},
    };
    if (cfg.limbs) {
        segs.push_back({"upper_arm_l", {0.17, 0.42, 0}, {0.44, 0.42, 0}, 0.055, 0.05, lr,
                        false, false, -1, 1});
        segs.push_back({"forearm_l", {0.44, 0.42, 0}, {0.70, 0.42, 0}, 0.05, 0.04, lr,
                        false, true, 4, -1});
        segs.push_back({"upper_arm_r", {-0.17, 0.42, 0}, {-0.44, 0.42, 0}, 0.055, 0.05,
                        lr, false, false, -1, 1});
        segs.push_back({"forearm_r", {-0.44, 0.42, 0}, {-0.70, 0.42, 0}, 0.05, 0.04, lr,
                        false, true, 6, -1});
        segs.push_back({"thigh_l", {0.08, -0.10, 0}, {0.11, -0.50, 0}, 0.08, 0.06, lr,
                        false, false, -1, 0});
        segs.push_back({"shin_l", {0.11, -0.50, 0}, {0.13, -0.88, 0}, 0.06, 0.045, lr,
                        false, true, 8, -1});
        segs.push_back({"thigh_r", {-0.08, -0.10, 0}, {-0.11, -0.50, 0}, 0.08, 0.06, lr,
                        false, false, -1, 0});
        segs.push_back({"shin_r", {-0.11, -0.50, 0}, {-0.13, -0.88, 0}, 0.06, 0.045, lr,
                        false, true, 10, -1});
    }

    CapsuleMan man;
    TemplateMesh& mesh = man.mesh;
    mesh.part_count = static_cast<int>(segs.size());
    size_t cols = cfg.sectors + 1;
    std::vector<BuiltSegment> built(segs.size());

    for (size_t si = 0; si < segs.size(); ++si) {
        const SegmentSpec& sp = segs[si];
        int part = static_cast<int>(si) + 1;
        Vec3 axis = normalized(vsub(sp.to, sp.from));
        Vec3 u, v;
        frame_of(axis, u, v);
        built[si].axis = axis;
        double len = vnorm(vsub(sp.to, sp.from));
        double t_start = sp.chain_parent >= 0 ? kChainGap / len : 0.0;

        for (size_t ri = 0; ri < sp.rings; ++ri) {
            double t = t_start + (1.0 - t_start) * static_cast<double>(ri) /
                                     static_cast<double>(sp.rings - 1);
            Vec3 center = vadd(sp.from, vscale(vsub(sp.to, sp.from), t));
            double radius = sp.r0 + (sp.r1 - sp.r0) * t;
            double vv = 0.04 + 0.92 * static_cast<double>(ri) /
                                   static_cast<double>(sp.rings - 1);
            std::vector<uint32_t> ring;
            for (size_t c = 0; c < cols; ++c) {
                double theta = 2.0 * M_PI * static_cast<double>(c % cfg.sectors) /
                               static_cast<double>(cfg.sectors);
                Vec3 radial = vadd(vscale(u, std::cos(theta)), vscale(v, std::sin(theta)));
                ring.push_back(static_cast<uint32_t>(mesh.vertices.size()));
                mesh.vertices.push_back(vadd(center, vscale(radial, radius)));
                mesh.vertex_iuv.push_back(
                    {part, static_cast<double>(c) / static_cast<double>(cfg.sectors), vv});
            }
            built[si].ring_vertices.push_back(std::move(ring));
        }
        // tube quads
        for (size_t ri = 0; ri + 1 < sp.rings; ++ri) {
            const auto& r0 = built[si].ring_vertices[ri];
            const auto& r1 = built[si].ring_vertices[ri + 1];
            for (size_t c = 0; c < cfg.sectors; ++c) {
                mesh.faces.push_back({r0[c], r0[c + 1], r1[c + 1]});
                mesh.faces.push_back({r0[c], r1[c + 1], r1[c]});
            }
        }
        if (sp.cap_start) {
            Vec3 apex = vsub(sp.from, vscale(axis, sp.r0 * 0.7));
            uint32_t ai = static_cast<uint32_t>(mesh.vertices.size());
            mesh.vertices.push_back(apex);
            mesh.vertex_iuv.push_back({part, 0.5, 0.0});
            const auto& r0 = built[si].ring_vertices.front();
            for (size_t c = 0; c < cfg.sectors; ++c) {
                mesh.faces.push_back({r0[c + 1], r0[c], ai});
            }
        }
        if (sp.cap_end) {
            Vec3 apex = vadd(sp.to, vscale(axis, sp.r1 * 0.7));
            uint32_t ai = static_cast<uint32_t>(mesh.vertices.size());
            mesh.vertices.push_back(apex);
            mesh.vertex_iuv.push_back({part, 0.5, 1.0});
            const auto& rl = built[si].ring_vertices.back();
            for (size_t c = 0; c < cfg.sectors; ++c) {
                mesh.faces.push_back({rl[c], rl[c + 1], ai});
            }
        }
    }

    // chain stitches across the axial gap
    for (size_t si = 0; si < segs.size(); ++si) {
        if (segs[si].chain_parent < 0) continue;
        const auto& pr = built[segs[si].chain_parent].ring_vertices.back();
        const auto& cr = built[si].ring_vertices.front();
        for (size_t c = 0; c < cfg.sectors; ++c) {
            mesh.faces.push_back({pr[c], pr[c + 1], cr[c + 1]});
            mesh.faces.push_back({pr[c], cr[c + 1], cr[c]});
        }
    }
    // sliver connectors at limb roots
    for (size_t si = 0; si < segs.size(); ++si) {
        if (segs[si].attach_parent < 0) continue;
        const auto& ring = built[si].ring_vertices.front();
        Vec3 centroid{0, 0, 0};
        for (size_t c = 0; c < cfg.sectors; ++c) {
            centroid = vadd(centroid, mesh.vertices[ring[c]]);
        }
        centroid = vscale(centroid, 1.0 / static_cast<double>(cfg.sectors));
        uint32_t best_t = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& pring : built[segs[si].attach_parent].ring_vertices) {
            for (uint32_t vi : pring) {
                double d = vnorm(vsub(mesh.vertices[vi], centroid));
                if (d < best_d) {
                    best_d = d;
                    best_t = vi;
                }
            }
        }
        size_t best_c = 0;
        best_d = std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < cfg.sectors; ++c) {
            double d = vnorm(vsub(mesh.vertices[ring[c]], mesh.vertices[best_t]));
            if (d < best_d) {
                best_d = d;
                best_c = c;
            }
        }
        mesh.faces.push_back({ring[best_c], ring[best_c + 1], best_t});
    }

    // joint regressor: averages of hand-picked rings
    auto ring_joint = [&](uint32_t joint, size_t seg, bool last) {
        const auto& ring =
            last ? built[seg].ring_vertices.back() : built[seg].ring_vertices.front();
        double w = 1.0 / static_cast<double>(cfg.sectors);
        for (size_t c = 0; c < cfg.sectors; ++c) {
            man.mesh.regressor.triplets.push_back({joint, ring[c], w});
        }
    };
    if (cfg.limbs) {
        mesh.regressor.joint_count = 12;
        mesh.regressor.vertex_count = mesh.vertices.size();
        ring_joint(0, 0, false);   // root / pelvis
        ring_joint(1, 1, false);   // spine
        ring_joint(2, 2, false);   // neck
        ring_joint(3, 3, true);    // head top
        ring_joint(4, 5, false);   // elbows
        ring_joint(5, 5, true);    // wrists
        ring_joint(6, 7, false);
        ring_joint(7, 7, true);
        ring_joint(8, 9, false);   // knees
        ring_joint(9, 9, true);    // ankles
        ring_joint(10, 11, false);
        ring_joint(11, 11, true);
    } else {
        mesh.regressor.joint_count = 4;
        mesh.regressor.vertex_count = mesh.vertices.size();
        ring_joint(0, 0, false);
        ring_joint(1, 1, false);
        ring_joint(2, 2, false);
        ring_joint(3, 3, true);
    }

    mesh.build();

    // articulation skeleton
    man.joints.push_back({"spine", {0, 0.18, 0}, {0, 1, 0}, {}, 1, 0.35});
    man.joints.push_back({"neck", {0, 0.46, 0}, {0, 1, 0}, {3, 4}, 2, 0.5});
    if (cfg.limbs) {
        man.joints[0].parts = {2, 3, 4, 5, 6, 7, 8};
        man.joints.push_back({"shoulder_l", {0.17, 0.42, 0}, {1, 0, 0}, {5, 6}, 2, 1.0});
        man.joints.push_back({"elbow_l", {0.44, 0.42, 0}, {1, 0, 0}, {6}, 5, 1.0});
        man.joints.push_back({"shoulder_r", {-0.17, 0.42, 0}, {-1, 0, 0}, {7, 8}, 2, 1.0});
        man.joints.push_back({"elbow_r", {-0.44, 0.42, 0}, {-1, 0, 0}, {8}, 7, 1.0});
        Vec3 lleg = normalized({0.03, -0.40, 0});
        Vec3 rleg = normalized({-0.03, -0.40, 0});
        man.joints.push_back({"hip_l", {0.08, -0.10, 0}, lleg, {9, 10}, 1, 0.9});
        man.joints.push_back({"knee_l", {0.11, -0.50, 0}, normalized({0.02, -0.38, 0}), {10}, 9, 1.0});
        man.joints.push_back({"hip_r", {-0.08, -0.10, 0}, rleg, {11, 12}, 1, 0.9});
        man.joints.push_back({"knee_r", {-0.11, -0.50, 0}, normalized({-0.02, -0.38, 0}), {12}, 11, 1.0});
    } else {
        man.joints[0].parts = {2, 3, 4};
    }

    Rng rng(mix_seed(cfg.texture_seed, 0x746578ULL));  // "tex"
    man.texture.resize(mesh.vertex_count());
    for (auto& t : man.texture) t = rng.uniform(0.15, 1.0);
    return man;
}

}  // namespace pam
