#include "pam/graph_net.hpp"

#include "pam/rng.hpp"

#include <algorithm>
#include <cmath>

namespace pam {

AdjacencyPattern AdjacencyPattern::from_template(const TemplateMesh& tmpl) {
    AdjacencyPattern p;
    p.n = tmpl.vertex_count();
    if (tmpl.neighbors.size() != p.n) throw ValueError("template topology not built");
    p.offsets.push_back(0);
    for (size_t i = 0; i < p.n; ++i) {
        std::vector<uint32_t> row = tmpl.neighbors[i];
        row.push_back(static_cast<uint32_t>(i));
        std::sort(row.begin(), row.end());
        p.columns.insert(p.columns.end(), row.begin(), row.end());
        p.offsets.push_back(p.columns.size());
    }
    return p;
}

AdjacencyPattern AdjacencyPattern::self_loops(size_t n) {
    AdjacencyPattern p;
    p.n = n;
    p.offsets.push_back(0);
    for (size_t i = 0; i < n; ++i) {
        p.columns.push_back(static_cast<uint32_t>(i));
        p.offsets.push_back(p.columns.size());
    }
    return p;
}

AdjacencyPattern AdjacencyPattern::path(size_t n) {
    AdjacencyPattern p;
    p.n = n;
    p.offsets.push_back(0);
    for (size_t i = 0; i < n; ++i) {
        if (i > 0) p.columns.push_back(static_cast<uint32_t>(i - 1));
        p.columns.push_back(static_cast<uint32_t>(i));
        if (i + 1 < n) p.columns.push_back(static_cast<uint32_t>(i + 1));
        p.offsets.push_back(p.columns.size());
    }
    return p;
}

namespace {

/// Softmax-weighted neighborhood aggregation: out_i = sum_j alpha_ij y_j
/// with alpha = softmax(logits) over row i's support.
Tensor graph_aggregate(const Tensor& y, const Tensor& logits,
                       const AdjacencyPattern& pattern) {
    if (y.rank() != 2 || y.shape()[0] != pattern.n) {
        throw ShapeError("aggregate input " + shape_str(y.shape()) +
                         " does not match pattern of " + std::to_string(pattern.n) +
                         " vertices");
    }
    if (logits.rank() != 1 || logits.size() != pattern.entries()) {
        throw ShapeError("edge logits " + shape_str(logits.shape()) +
                         " do not match pattern entry count " +
                         std::to_string(pattern.entries()));
    }
    size_t n = pattern.n, c = y.shape()[1];
    // Row softmax over the CSR entries.
    std::vector<double> alpha(pattern.entries());
    const auto& lv = logits.values();
    for (size_t i = 0; i < n; ++i) {
        size_t lo = pattern.offsets[i], hi = pattern.offsets[i + 1];
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t e = lo; e < hi; ++e) mx = std::max(mx, lv[e]);
        double z = 0.0;
        for (size_t e = lo; e < hi; ++e) z += std::exp(lv[e] - mx);
        for (size_t e = lo; e < hi; ++e) alpha[e] = std::exp(lv[e] - mx) / z;
    }
    auto node = std::make_shared<Tensor::Node>();
    node->shape = {n, c};
    node->values.assign(n * c, 0.0);
    node->dtype = y.dtype();
    const auto& yv = y.values();
    for (size_t i = 0; i < n; ++i) {
        double* out = node->values.data() + i * c;
        for (size_t e = pattern.offsets[i]; e < pattern.offsets[i + 1]; ++e) {
            const double* src = yv.data() + pattern.columns[e] * c;
            double a = alpha[e];
            for (size_t ch = 0; ch < c; ++ch) out[ch] += a * src[ch];
        }
    }
    if (node->dtype == Dtype::F32) {
        for (double& v : node->values) v = static_cast<double>(static_cast<float>(v));
    }
    Tensor out(node);
    if (!y.requires_grad() && !logits.requires_grad()) return out;
    node->requires_grad = true;
    node->parents = {y, logits};
    const AdjacencyPattern* pat = &pattern;  // patterns outlive tapes in this artifact
    node->backward_fn = [pat, alpha = std::move(alpha), n, c](Tensor::Node& self) {
        Tensor& py = self.parents[0];
        Tensor& pl = self.parents[1];
        if (py.requires_grad()) py.ensure_grad();
        if (pl.requires_grad()) pl.ensure_grad();
        const auto& yv = py.values();
        for (size_t i = 0; i < n; ++i) {
            const double* g = self.grad.data() + i * c;
            size_t lo = pat->offsets[i], hi = pat->offsets[i + 1];
            if (py.requires_grad()) {
                double* gy = py.node()->grad.data();
                for (size_t e = lo; e < hi; ++e) {
                    double a = alpha[e];
                    double* dst = gy + pat->columns[e] * c;
                    for (size_t ch = 0; ch < c; ++ch) dst[ch] += a * g[ch];
                }
            }
            if (pl.requires_grad()) {
                // dL/dl_e = alpha_e (p_e - sum_m alpha_m p_m), p_e = <g_i, y_col(e)>
                double s = 0.0;
                for (size_t e = lo; e < hi; ++e) {
                    const double* src = yv.data() + pat->columns[e] * c;
                    double p = 0.0;
                    for (size_t ch = 0; ch < c; ++ch) p += g[ch] * src[ch];
                    s += alpha[e] * p;
                }
                double* gl = pl.node()->grad.data();
                for (size_t e = lo; e < hi; ++e) {
                    const double* src = yv.data() + pat->columns[e] * c;
                    double p = 0.0;
                    for (size_t ch = 0; ch < c; ++ch) p += g[ch] * src[ch];
                    gl[e] += alpha[e] * (p - s);
                }
            }
        }
    };
    return out;
}

Tensor glorot(size_t rows, size_t cols, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t = zeros({rows, cols});
    for (auto& v : t.node()->values) v = rng.uniform(-limit, limit);
    t.set_requires_grad(true);
    return t;
}

}  // namespace

Tensor semgconv_forward(const Tensor& x, const SemGConvLayer& layer,
                        const AdjacencyPattern& pattern) {
    Tensor y = matmul(x, layer.weight);
    Tensor agg = graph_aggregate(y, layer.edge_logits, pattern);
    return add(agg, layer.bias);
}

std::vector<Tensor> GraphNet::params() const {
    std::vector<Tensor> out{in_weight, in_bias};
    for (const auto& l : layers) {
        out.push_back(l.weight);
        out.push_back(l.edge_logits);
        out.push_back(l.bias);
    }
    out.push_back(head_weight);
    out.push_back(head_bias);
    return out;
}

std::vector<std::pair<std::string, Tensor>> GraphNet::named_params() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("gcn.inproj.weight", in_weight);
    out.emplace_back("gcn.inproj.bias", in_bias);
    for (size_t i = 0; i < layers.size(); ++i) {
        std::string base = "gcn.block" + std::to_string(i / 2) + ".layer" +
                           std::to_string(i % 2) + ".";
        out.emplace_back(base + "weight", layers[i].weight);
        out.emplace_back(base + "edge_logits", layers[i].edge_logits);
        out.emplace_back(base + "bias", layers[i].bias);
    }
    out.emplace_back("gcn.head.weight", head_weight);
    out.emplace_back("gcn.head.bias", head_bias);
    return out;
}

GraphNet init_graph_net(const GraphNetConfig& cfg, const AdjacencyPattern& pattern,
                        uint64_t seed) {
    if (cfg.input_dim == 0 || cfg.hidden == 0) {
        throw ValueError("graph net dims must be positive");
    }
    Rng rng(mix_seed(seed, 0x67636eULL));  // "gcn"
    GraphNet net;
    net.cfg = cfg;
    net.in_weight = glorot(cfg.input_dim, cfg.hidden, rng);
    net.in_bias = zeros({cfg.hidden});
    net.in_bias.set_requires_grad(true);
    for (size_t b = 0; b < cfg.blocks; ++b) {
        for (int l = 0; l < 2; ++l) {
            SemGConvLayer layer;
            layer.weight = glorot(cfg.hidden, cfg.hidden, rng);
            layer.edge_logits = zeros({pattern.entries()});
            layer.edge_logits.set_requires_grad(true);
            layer.bias = zeros({cfg.hidden});
            layer.bias.set_requires_grad(true);
            net.layers.push_back(layer);
        }
    }
    net.head_weight = glorot(cfg.hidden, 3, rng);
    net.head_bias = zeros({3});
    net.head_bias.set_requires_grad(true);
    return net;
}

Tensor gcn_forward(const Tensor& features, const GraphNet& net,
                   const AdjacencyPattern& pattern) {
    if (features.rank() != 2 || features.shape()[1] != net.cfg.input_dim) {
        throw ShapeError("graph net expects [Nv," + std::to_string(net.cfg.input_dim) +
                         "], got " + shape_str(features.shape()));
    }
    if (features.shape()[0] != pattern.n) {
        throw ShapeError("feature rows do not match adjacency pattern");
    }
    Tensor h = add(matmul(features, net.in_weight), net.in_bias);
    for (size_t b = 0; b < net.cfg.blocks; ++b) {
        Tensor t = semgconv_forward(h, net.layers[2 * b], pattern);
        t = relu(t);
        t = semgconv_forward(t, net.layers[2 * b + 1], pattern);
        h = add(h, t);
    }
    return add(matmul(h, net.head_weight), net.head_bias);
}

}  // namespace pam
