#pragma once

#include "pam/mesh.hpp"
#include "pam/tensor.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pam {

/// Fixed sparsity pattern of A+I in CSR form. Row k lists the aggregation
/// support N(k) u {k} in ascending vertex order; edge parameters are laid
/// out flat, parallel to these entries.
struct AdjacencyPattern {
    size_t n = 0;
    std::vector<uint32_t> columns;
    std::vector<size_t> offsets;  // n+1 entries

    size_t entries() const { return columns.size(); }
    size_t degree(size_t row) const { return offsets[row + 1] - offsets[row]; }

    static AdjacencyPattern from_template(const TemplateMesh& tmpl);
    static AdjacencyPattern self_loops(size_t n);
    static AdjacencyPattern path(size_t n);
};

/// Graph convolution with a learnable adjacency: one scalar logit per
/// nonzero of A+I, softmax-normalized over each vertex's support. With all
/// logits zero the layer reduces to uniform neighborhood averaging.
struct SemGConvLayer {
    Tensor weight;       // [Cin, Cout]
    Tensor edge_logits;  // [pattern.entries()]
    Tensor bias;         // [Cout]
};

/// out_i = sum_j softmax_{j in N(i) u {i}}(logits_ij) * (x_j W) + bias.
Tensor semgconv_forward(const Tensor& x, const SemGConvLayer& layer,
                        const AdjacencyPattern& pattern);

struct GraphNetConfig {
    size_t input_dim = 0;
    size_t hidden = 64;
    size_t blocks = 4;
};

/// Vertex regressor: per-vertex linear input projection, `blocks` residual
/// blocks of two SemGConv layers with ReLU between them, and a linear
/// 3-channel head.
struct GraphNet {
    GraphNetConfig cfg;
    Tensor in_weight;  // [input_dim, hidden]
    Tensor in_bias;    // [hidden]
    std::vector<SemGConvLayer> layers;  // 2 per block
    Tensor head_weight;  // [hidden, 3]
    Tensor head_bias;    // [3]

    std::vector<Tensor> params() const;
    std::vector<std::pair<std::string, Tensor>> named_params() const;
};

/// Glorot-uniform weights, zero edge logits (uniform attention), zero
/// biases; deterministic per seed.
GraphNet init_graph_net(const GraphNetConfig& cfg, const AdjacencyPattern& pattern,
                        uint64_t seed);

/// [Nv, input_dim] features -> [Nv, 3] vertex coordinates.
Tensor gcn_forward(const Tensor& features, const GraphNet& net,
                   const AdjacencyPattern& pattern);

}  // namespace pam
