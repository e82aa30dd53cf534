#pragma once

#include "pam/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pam {

/// Procedural low-poly humanoid: two torso segments, neck, head and four
/// two-segment limbs, each an open tube with per-part UV coordinates.
/// Chain segments share their junction radius and are stitched across a
/// thin axial gap; limb roots attach to the torso through a single sliver
/// triangle, keeping cross-part faces nearly invisible to the rasterizer.
struct CapsuleConfig {
    size_t sectors = 8;      // tube columns = sectors + 1 (UV seam duplicated)
    size_t torso_rings = 4;  // pelvis and chest
    size_t neck_rings = 2;
    size_t head_rings = 3;
    size_t limb_rings = 4;
    bool limbs = true;       // false: torso-only 4-part template
    uint64_t texture_seed = 2026;

    /// Torso-only preset with 50 vertices; used for tiny end-to-end checks.
    static CapsuleConfig mini();
};

/// One articulation pivot: rotating it moves every vertex of the
/// descendant parts, blended smoothly across the joint.
struct ArticulationJoint {
    std::string name;
    Vec3 pivot;
    Vec3 blend_dir;           // unit vector into the descendant limb
    std::vector<int> parts;   // descendant part ids
    int parent_part = 0;      // part the pivot attaches to (local skin blend)
    double angle_scale = 1.0;
};

/// Template bundle: the mesh plus the articulation skeleton and the fixed
/// per-vertex texture used by the image synthesizer.
struct CapsuleMan {
    TemplateMesh mesh;
    std::vector<ArticulationJoint> joints;
    std::vector<double> texture;  // per vertex, in (0,1]
    double blend_radius = 0.07;   // articulation blend zone half-width
};

CapsuleMan make_capsule_man(const CapsuleConfig& cfg);

}  // namespace pam
