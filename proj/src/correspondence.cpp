#include "pam/correspondence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace pam {

void IuvImage::resize(uint32_t h, uint32_t w, int parts) {
    height = h;
    width = w;
    part_count = parts;
    part.assign(static_cast<size_t>(h) * w, 0);
    uv.assign(static_cast<size_t>(h) * w * 2, 0.0f);
}

void IuvImage::validate() const {
    if (part.size() != static_cast<size_t>(height) * width ||
        uv.size() != part.size() * 2) {
        throw ShapeError("IuvImage plane sizes inconsistent with extent");
    }
    for (size_t i = 0; i < part.size(); ++i) {
        if (part[i] > part_count) {
            throw ValueError("pixel part id " + std::to_string(part[i]) +
                             " exceeds part count " + std::to_string(part_count));
        }
        float u = uv[2 * i], v = uv[2 * i + 1];
        if (u < 0.f || u > 1.f || v < 0.f || v > 1.f) {
            throw ValueError("pixel UV outside [0,1]");
        }
    }
}

namespace {

// Pixels of one part bucketed over the UV unit square. Buckets keep
// row-major pixel order so the tie-break below stays exact.
struct PartGrid {
    static constexpr int kCells = 16;
    std::vector<std::vector<uint32_t>> cells;
    bool empty = true;

    PartGrid() : cells(kCells * kCells) {}

    static int cell_of(double x) {
        int c = static_cast<int>(x * kCells);
        return std::clamp(c, 0, kCells - 1);
    }

    void insert(float u, float v, uint32_t flat) {
        cells[cell_of(u) * kCells + cell_of(v)].push_back(flat);
        empty = false;
    }
};

struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    uint32_t flat = 0;
    bool found = false;

    void consider(double d2_new, uint32_t flat_new) {
        if (!found || d2_new < d2 || (d2_new == d2 && flat_new < flat)) {
            d2 = d2_new;
            flat = flat_new;
            found = true;
        }
    }
};

}  // namespace

CorrespondenceSet vertex_to_pixel(const IuvImage& iuv, const TemplateMesh& tmpl) {
    if (iuv.part_count > tmpl.part_count) {
        throw ValueError("image part count " + std::to_string(iuv.part_count) +
                         " exceeds template part count " +
                         std::to_string(tmpl.part_count));
    }
    size_t npx = static_cast<size_t>(iuv.height) * iuv.width;
    std::vector<PartGrid> grids(static_cast<size_t>(tmpl.part_count) + 1);
    for (size_t i = 0; i < npx; ++i) {
        uint8_t p = iuv.part[i];
        if (p == 0) continue;
        if (p > tmpl.part_count) {
            throw ValueError("pixel part id " + std::to_string(p) +
                             " exceeds template part count " +
                             std::to_string(tmpl.part_count));
        }
        grids[p].insert(iuv.uv[2 * i], iuv.uv[2 * i + 1], static_cast<uint32_t>(i));
    }

    size_t nv = tmpl.vertex_count();
    CorrespondenceSet set;
    set.present.assign(nv, 0);
    set.pixel.assign(nv, {});
    set.distance.assign(nv, std::numeric_limits<double>::infinity());

    constexpr double cell_size = 1.0 / PartGrid::kCells;
    for (size_t k = 0; k < nv; ++k) {
        const auto& viuv = tmpl.vertex_iuv[k];
        const PartGrid& grid = grids[viuv.part];
        if (grid.empty) continue;
        double uk = viuv.u, vk = viuv.v;
        double cap = tmpl.delta[k];  // matches beyond the threshold are absent anyway
        int cu = PartGrid::cell_of(uk), cv = PartGrid::cell_of(vk);
        Best best;
        for (int ring = 0; ring < PartGrid::kCells; ++ring) {
            double ring_min = (ring - 1) * cell_size;  // lower bound for this ring
            if (ring > 0) {
                double limit = std::min(std::sqrt(best.d2), cap);
                if (ring_min > limit) break;
            }
            int lo_u = cu - ring, hi_u = cu + ring;
            int lo_v = cv - ring, hi_v = cv + ring;
            for (int gu = lo_u; gu <= hi_u; ++gu) {
                if (gu < 0 || gu >= PartGrid::kCells) continue;
                for (int gv = lo_v; gv <= hi_v; ++gv) {
                    if (gv < 0 || gv >= PartGrid::kCells) continue;
                    bool on_ring = (gu == lo_u || gu == hi_u || gv == lo_v || gv == hi_v);
                    if (!on_ring) continue;
                    for (uint32_t flat : grid.cells[gu * PartGrid::kCells + gv]) {
                        double du = static_cast<double>(iuv.uv[2 * flat]) - uk;
                        double dv = static_cast<double>(iuv.uv[2 * flat + 1]) - vk;
                        best.consider(du * du + dv * dv, flat);
                    }
                }
            }
        }
        if (!best.found) continue;
        double dist = std::sqrt(best.d2);
        if (dist <= tmpl.delta[k]) {
            set.present[k] = 1;
            set.pixel[k] = {static_cast<uint32_t>(best.flat / iuv.width) + 1,
                            static_cast<uint32_t>(best.flat % iuv.width) + 1};
            set.distance[k] = dist;
        }
    }
    return set;
}

std::vector<uint8_t> visibility_mask(const CorrespondenceSet& set) {
    return set.present;
}

void save_iuv(const IuvImage& img, const std::string& path) {
    static_assert(std::endian::native == std::endian::little);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValueError("cannot open " + path + " for writing");
    os.write("IUV1", 4);
    uint32_t h = img.height, w = img.width;
    os.write(reinterpret_cast<const char*>(&h), 4);
    os.write(reinterpret_cast<const char*>(&w), 4);
    os.write(reinterpret_cast<const char*>(img.part.data()),
             static_cast<std::streamsize>(img.part.size()));
    os.write(reinterpret_cast<const char*>(img.uv.data()),
             static_cast<std::streamsize>(img.uv.size() * sizeof(float)));
}

IuvImage load_iuv(const std::string& path, int part_count) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValueError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "IUV1", 4) != 0) {
        throw ValueError("bad IUV magic (expected IUV1)");
    }
    uint32_t h = 0, w = 0;
    is.read(reinterpret_cast<char*>(&h), 4);
    is.read(reinterpret_cast<char*>(&w), 4);
    IuvImage img;
    img.resize(h, w, part_count);
    is.read(reinterpret_cast<char*>(img.part.data()),
            static_cast<std::streamsize>(img.part.size()));
    is.read(reinterpret_cast<char*>(img.uv.data()),
            static_cast<std::streamsize>(img.uv.size() * sizeof(float)));
    if (!is) throw ValueError("truncated IUV payload");
    img.validate();
    return img;
}

}  // namespace pam
