#include "pam/features.hpp"

#include <algorithm>
#include <cmath>

namespace pam {

BilinearTap bilinear_tap(double row, double col, size_t map_h, size_t map_w,
                         size_t in_h, size_t in_w, bool align_corners) {
    double gr, gc;
    if (align_corners) {
        gr = (in_h > 1) ? row * static_cast<double>(map_h - 1) / static_cast<double>(in_h - 1) : 0.0;
        gc = (in_w > 1) ? col * static_cast<double>(map_w - 1) / static_cast<double>(in_w - 1) : 0.0;
    } else {
        gr = (row + 0.5) * static_cast<double>(map_h) / static_cast<double>(in_h) - 0.5;
        gc = (col + 0.5) * static_cast<double>(map_w) / static_cast<double>(in_w) - 0.5;
    }
    double fi = std::floor(gr), fj = std::floor(gc);
    double ar = gr - fi, ac = gc - fj;
    auto clampi = [](double x, size_t n) {
        return static_cast<size_t>(std::clamp(x, 0.0, static_cast<double>(n - 1)));
    };
    BilinearTap t;
    t.i0 = clampi(fi, map_h);
    t.i1 = clampi(fi + 1, map_h);
    t.j0 = clampi(fj, map_w);
    t.j1 = clampi(fj + 1, map_w);
    t.w00 = (1.0 - ar) * (1.0 - ac);
    t.w01 = (1.0 - ar) * ac;
    t.w10 = ar * (1.0 - ac);
    t.w11 = ar * ac;
    return t;
}

Tensor bilinear_sample(const Tensor& map, double row, double col, size_t in_h,
                       size_t in_w, bool align_corners) {
    if (map.rank() != 3) {
        throw ShapeError("bilinear_sample expects [C,S,S], got " + shape_str(map.shape()));
    }
    if (row < -0.5 || row > static_cast<double>(in_h) - 0.5 || col < -0.5 ||
        col > static_cast<double>(in_w) - 0.5) {
        throw ValueError("bilinear_sample point (" + std::to_string(row) + "," +
                         std::to_string(col) + ") outside image bounds");
    }
    size_t c = map.shape()[0], sh = map.shape()[1], sw = map.shape()[2];
    BilinearTap t = bilinear_tap(row, col, sh, sw, in_h, in_w, align_corners);
    std::vector<double> vals(c);
    const auto& m = map.values();
    for (size_t ch = 0; ch < c; ++ch) {
        const double* plane = m.data() + ch * sh * sw;
        vals[ch] = t.w00 * plane[t.i0 * sw + t.j0] + t.w01 * plane[t.i0 * sw + t.j1] +
                   t.w10 * plane[t.i1 * sw + t.j0] + t.w11 * plane[t.i1 * sw + t.j1];
    }
    Tensor out = tensor_from({c}, std::move(vals), map.dtype());
    if (!map.requires_grad()) return out;
    auto n = out.node();
    n->requires_grad = true;
    n->parents = {map};
    n->backward_fn = [c, sh, sw, t](Tensor::Node& self) {
        Tensor& p = self.parents[0];
        p.ensure_grad();
        double* g = p.node()->grad.data();
        for (size_t ch = 0; ch < c; ++ch) {
            double go = self.grad[ch];
            double* plane = g + ch * sh * sw;
            plane[t.i0 * sw + t.j0] += go * t.w00;
            plane[t.i0 * sw + t.j1] += go * t.w01;
            plane[t.i1 * sw + t.j0] += go * t.w10;
            plane[t.i1 * sw + t.j1] += go * t.w11;
        }
    };
    return out;
}

FeatureLayout feature_layout(const std::vector<size_t>& channels) {
    if (channels.size() != 5) throw ValueError("feature layout needs 5 stage widths");
    FeatureLayout lay;
    size_t off = 0;
    for (size_t l = 0; l < 4; ++l) {
        lay.stage_offset.push_back(off);
        lay.stage_channels.push_back(channels[l]);
        off += channels[l];
    }
    lay.global_offset = off;
    lay.global_channels = channels[4];
    off += channels[4];
    lay.pixel_offset = off;
    off += 2;
    lay.tpose_offset = off;
    off += 3;
    lay.width = off;  // D + 5
    return lay;
}

Tensor assemble_vertex_features(const FeaturePyramid& pyramid,
                                const CorrespondenceSet& corr,
                                const TemplateMesh& tmpl, bool align_corners) {
    pyramid.validate();
    size_t nv = tmpl.vertex_count();
    if (corr.size() != nv) {
        throw ShapeError("correspondence covers " + std::to_string(corr.size()) +
                         " vertices, template has " + std::to_string(nv));
    }
    std::vector<size_t> channels;
    for (const auto& s : pyramid.stages) channels.push_back(s.shape()[0]);
    channels.push_back(pyramid.global_feature.size());
    FeatureLayout lay = feature_layout(channels);

    size_t in_h = pyramid.input_height, in_w = pyramid.input_width;
    // Precompute taps per visible vertex and stage.
    std::vector<std::array<BilinearTap, 4>> taps(nv);
    for (size_t k = 0; k < nv; ++k) {
        if (!corr.present[k]) continue;
        double row = static_cast<double>(corr.pixel[k].row - 1);
        double col = static_cast<double>(corr.pixel[k].col - 1);
        for (size_t l = 0; l < 4; ++l) {
            taps[k][l] = bilinear_tap(row, col, pyramid.stages[l].shape()[1],
                                      pyramid.stages[l].shape()[2], in_h, in_w,
                                      align_corners);
        }
    }

    auto node = std::make_shared<Tensor::Node>();
    node->shape = {nv, lay.width};
    node->values.assign(nv * lay.width, 0.0);
    node->dtype = pyramid.global_feature.dtype();
    const auto& gv = pyramid.global_feature.values();
    for (size_t k = 0; k < nv; ++k) {
        double* row_out = node->values.data() + k * lay.width;
        if (corr.present[k]) {
            for (size_t l = 0; l < 4; ++l) {
                const auto& st = pyramid.stages[l];
                size_t sh = st.shape()[1], sw = st.shape()[2];
                const BilinearTap& t = taps[k][l];
                const double* m = st.values().data();
                double* dst = row_out + lay.stage_offset[l];
                for (size_t ch = 0; ch < lay.stage_channels[l]; ++ch) {
                    const double* plane = m + ch * sh * sw;
                    dst[ch] = t.w00 * plane[t.i0 * sw + t.j0] +
                              t.w01 * plane[t.i0 * sw + t.j1] +
                              t.w10 * plane[t.i1 * sw + t.j0] +
                              t.w11 * plane[t.i1 * sw + t.j1];
                }
            }
            row_out[lay.pixel_offset] =
                static_cast<double>(corr.pixel[k].row) / static_cast<double>(in_h);
            row_out[lay.pixel_offset + 1] =
                static_cast<double>(corr.pixel[k].col) / static_cast<double>(in_w);
        }
        std::copy(gv.begin(), gv.end(), row_out + lay.global_offset);
        row_out[lay.tpose_offset] = tmpl.vertices[k][0];
        row_out[lay.tpose_offset + 1] = tmpl.vertices[k][1];
        row_out[lay.tpose_offset + 2] = tmpl.vertices[k][2];
    }
    if (node->dtype == Dtype::F32) {
        for (double& v : node->values) v = static_cast<double>(static_cast<float>(v));
    }

    bool needs = pyramid.global_feature.requires_grad();
    for (const auto& s : pyramid.stages) needs = needs || s.requires_grad();
    Tensor out(node);
    if (!needs) return out;

    std::vector<Tensor> parents = pyramid.stages;   // parents[0..3]
    parents.push_back(pyramid.global_feature);      // parents[4]
    std::vector<uint8_t> vis(corr.present.begin(), corr.present.end());
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = [nv, lay, taps = std::move(taps),
                         vis = std::move(vis)](Tensor::Node& self) {
        for (auto& p : self.parents) {
            if (p.requires_grad()) p.ensure_grad();
        }
        Tensor& global = self.parents[4];
        for (size_t k = 0; k < nv; ++k) {
            const double* grow = self.grad.data() + k * lay.width;
            if (vis[k]) {
                for (size_t l = 0; l < 4; ++l) {
                    Tensor& st = self.parents[l];
                    if (!st.requires_grad()) continue;
                    size_t sh = st.shape()[1], sw = st.shape()[2];
                    const BilinearTap& t = taps[k][l];
                    double* g = st.node()->grad.data();
                    const double* gsrc = grow + lay.stage_offset[l];
                    for (size_t ch = 0; ch < lay.stage_channels[l]; ++ch) {
                        double go = gsrc[ch];
                        if (go == 0.0) continue;
                        double* plane = g + ch * sh * sw;
                        plane[t.i0 * sw + t.j0] += go * t.w00;
                        plane[t.i0 * sw + t.j1] += go * t.w01;
                        plane[t.i1 * sw + t.j0] += go * t.w10;
                        plane[t.i1 * sw + t.j1] += go * t.w11;
                    }
                }
            }
            if (global.requires_grad()) {
                double* gg = global.node()->grad.data();
                const double* gsrc = grow + lay.global_offset;
                for (size_t ch = 0; ch < lay.global_channels; ++ch) gg[ch] += gsrc[ch];
            }
        }
    };
    return out;
}

Tensor global_only_features(const FeaturePyramid& pyramid, const TemplateMesh& tmpl) {
    CorrespondenceSet none;
    none.present.assign(tmpl.vertex_count(), 0);
    none.pixel.assign(tmpl.vertex_count(), {});
    none.distance.assign(tmpl.vertex_count(), std::numeric_limits<double>::infinity());
    return assemble_vertex_features(pyramid, none, tmpl);
}

}  // namespace pam
