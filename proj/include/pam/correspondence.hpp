#pragma once

#include "pam/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pam {

/// Dense pixel-to-surface correspondence map: per-pixel part id (0 is the
/// background label) and per-part UV coordinates. UV is stored at f32
/// precision so the IUV1 codec round-trips losslessly; background pixels
/// carry uv (0,0).
struct IuvImage {
    uint32_t height = 0;
    uint32_t width = 0;
    int part_count = 0;
    std::vector<uint8_t> part;  // H*W row-major
    std::vector<float> uv;      // H*W*2 interleaved (u,v)

    size_t idx(uint32_t i, uint32_t j) const {
        return static_cast<size_t>(i) * width + j;
    }
    void resize(uint32_t h, uint32_t w, int parts);
    void validate() const;
};

/// 1-based pixel location, row in [1,H], column in [1,W].
struct PixelRef {
    uint32_t row = 0;
    uint32_t col = 0;
};

/// Vertex-to-pixel matches. An entry is present iff the nearest same-part
/// pixel in UV space lies within delta_k of the vertex UV; absent entries
/// carry distance +inf. A present match satisfies distance <= delta_k and
/// its pixel part equals the vertex part.
struct CorrespondenceSet {
    std::vector<uint8_t> present;
    std::vector<PixelRef> pixel;    // meaningful where present
    std::vector<double> distance;   // +inf where absent

    size_t size() const { return present.size(); }
};

/// Thresholded nearest-neighbor matching. For vertex k the candidates are
/// the pixels whose part equals part(k); the winner minimizes the UV L2
/// distance, with exact ties broken by row-major pixel order; the match is
/// kept only if distance <= delta_k. Accelerated by a per-part UV grid;
/// results are identical to an exhaustive scan, bit for bit. An image with
/// no candidate pixels yields all-absent output; a pixel part id exceeding
/// the template part count is rejected.
CorrespondenceSet vertex_to_pixel(const IuvImage& iuv, const TemplateMesh& tmpl);

std::vector<uint8_t> visibility_mask(const CorrespondenceSet& set);

/// IUV1 codec: magic "IUV1", u32 H, u32 W, H*W u8 part plane, then H*W
/// interleaved (u,v) f32 pairs, all little-endian. Lossless.
void save_iuv(const IuvImage& img, const std::string& path);
IuvImage load_iuv(const std::string& path, int part_count);

}  // namespace pam
