#include "pam/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_set>

namespace pam {

namespace {

bool g_strict_finite = false;
std::map<std::string, uint64_t> g_incidents;

using EigenRowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<EigenRowMat>;
using ConstMatMap = Eigen::Map<const EigenRowMat>;

void check_finite(const Tensor& t, const char* op) {
    if (!g_strict_finite) return;
    for (double v : t.values()) {
        if (!std::isfinite(v)) {
            throw ValueError(std::string(op) + ": non-finite input scalar in strict mode");
        }
    }
}

void round_f32(Tensor::Node& n) {
    if (n.dtype != Dtype::F32) return;
    for (double& v : n.values) v = static_cast<double>(static_cast<float>(v));
}

Dtype common_dtype(const Tensor& a, const Tensor& b) {
    if (a.dtype() != b.dtype()) {
        throw ValueError("mixed tensor dtypes");
    }
    return a.dtype();
}

std::shared_ptr<Tensor::Node> make_node(Shape shape, Dtype dtype) {
    auto n = std::make_shared<Tensor::Node>();
    n->shape = std::move(shape);
    n->values.assign(numel(n->shape), 0.0);
    n->dtype = dtype;
    return n;
}

/// Attach tape info if any parent participates in differentiation.
Tensor finish(std::shared_ptr<Tensor::Node> n, std::vector<Tensor> parents,
              std::function<void(Tensor::Node&)> backward_fn) {
    round_f32(*n);
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    if (needs) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
}

void accumulate(const Tensor& t, size_t i, double g) {
    t.node()->grad[i] += g;
}

void prepare_parent_grads(Tensor::Node& n) {
    for (auto& p : n.parents) {
        if (p.requires_grad()) p.ensure_grad();
    }
}

// Trailing-suffix broadcast: returns 0 if shapes equal, 1 if b broadcasts
// into a, 2 if a broadcasts into b. Throws otherwise.
int broadcast_mode(const Shape& a, const Shape& b) {
    if (a == b) return 0;
    auto is_suffix = [](const Shape& small, const Shape& big) {
        if (small.size() > big.size()) return false;
        size_t off = big.size() - small.size();
        for (size_t i = 0; i < small.size(); ++i) {
            if (small[i] != big[off + i]) return false;
        }
        return true;
    };
    if (is_suffix(b, a)) return 1;
    if (is_suffix(a, b)) return 2;
    throw ShapeError("shapes " + shape_str(a) + " and " + shape_str(b) +
                     " neither match nor trailing-broadcast");
}

struct EwSpec {
    double (*f)(double, double);
    double (*dfda)(double, double);
    double (*dfdb)(double, double);
    const char* name;
};

Tensor ew_binary(const Tensor& a, const Tensor& b, const EwSpec& spec) {
    check_finite(a, spec.name);
    check_finite(b, spec.name);
    Dtype dt = common_dtype(a, b);
    int mode = broadcast_mode(a.shape(), b.shape());
    const Tensor& big = (mode == 2) ? b : a;
    auto n = make_node(big.shape(), dt);
    size_t total = n->values.size();
    size_t bsz = (mode == 0) ? total : (mode == 1 ? b.size() : a.size());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < total; ++i) {
        double x = (mode == 2) ? av[i % bsz] : av[i];
        double y = (mode == 1) ? bv[i % bsz] : bv[i];
        n->values[i] = spec.f(x, y);
    }
    EwSpec s = spec;
    return finish(
        std::move(n), {a, b}, [s, mode, bsz](Tensor::Node& self) {
            prepare_parent_grads(self);
            Tensor& pa = self.parents[0];
            Tensor& pb = self.parents[1];
            const auto& av = pa.values();
            const auto& bv = pb.values();
            for (size_t i = 0; i < self.values.size(); ++i) {
                double x = (mode == 2) ? av[i % bsz] : av[i];
                double y = (mode == 1) ? bv[i % bsz] : bv[i];
                double g = self.grad[i];
                if (pa.requires_grad())
                    accumulate(pa, (mode == 2) ? i % bsz : i, g * s.dfda(x, y));
                if (pb.requires_grad())
                    accumulate(pb, (mode == 1) ? i % bsz : i, g * s.dfdb(x, y));
            }
        });
}

}  // namespace

size_t numel(const Shape& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(s[i]);
        if (i + 1 < s.size()) out += ",";
    }
    return out + "]";
}

void set_strict_finite(bool on) { g_strict_finite = on; }
bool strict_finite() { return g_strict_finite; }

void warn(const std::string& msg) {
    std::fprintf(stderr, "[pam] warning: %s\n", msg.c_str());
}

uint64_t incident_count(const std::string& key) {
    auto it = g_incidents.find(key);
    return it == g_incidents.end() ? 0 : it->second;
}
void count_incident(const std::string& key, uint64_t n) { g_incidents[key] += n; }
void reset_incidents() { g_incidents.clear(); }

Tensor& Tensor::set_requires_grad(bool on) {
    node_->requires_grad = on;
    return *this;
}

std::vector<double>& Tensor::mutable_values() {
    if (!node_->parents.empty()) {
        throw ValueError("mutable_values on a non-leaf tensor");
    }
    return node_->values;
}

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty()) {
        throw ValueError("tensor has no gradient; run backward first");
    }
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::ensure_grad() {
    if (node_->grad.empty()) node_->grad.assign(node_->values.size(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) {
        throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    }
    return node_->values[0];
}

double Tensor::at(const std::vector<size_t>& idx) const {
    if (idx.size() != rank()) throw ShapeError("index rank mismatch");
    size_t flat = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= node_->shape[i]) throw ShapeError("index out of range");
        flat = flat * node_->shape[i] + idx[i];
    }
    return node_->values[flat];
}

Tensor tensor_from(Shape shape, std::vector<double> values, Dtype dtype) {
    if (numel(shape) != values.size()) {
        throw ShapeError("data length " + std::to_string(values.size()) +
                         " does not fill shape " + shape_str(shape));
    }
    auto n = std::make_shared<Tensor::Node>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    n->dtype = dtype;
    round_f32(*n);
    return Tensor(std::move(n));
}

Tensor zeros(Shape shape, Dtype dtype) { return Tensor(make_node(std::move(shape), dtype)); }

Tensor full(Shape shape, double value, Dtype dtype) {
    auto n = make_node(std::move(shape), dtype);
    std::fill(n->values.begin(), n->values.end(), value);
    round_f32(*n);
    return Tensor(std::move(n));
}

Tensor scalar(double value, Dtype dtype) { return full({}, value, dtype); }

Tensor detach(const Tensor& t) {
    auto n = std::make_shared<Tensor::Node>();
    n->shape = t.shape();
    n->values = t.values();
    n->dtype = t.dtype();
    return Tensor(std::move(n));
}

Tensor add(const Tensor& a, const Tensor& b) {
    static const EwSpec s{[](double x, double y) { return x + y; },
                          [](double, double) { return 1.0; },
                          [](double, double) { return 1.0; }, "add"};
    return ew_binary(a, b, s);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    static const EwSpec s{[](double x, double y) { return x - y; },
                          [](double, double) { return 1.0; },
                          [](double, double) { return -1.0; }, "sub"};
    return ew_binary(a, b, s);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    static const EwSpec s{[](double x, double y) { return x * y; },
                          [](double, double y) { return y; },
                          [](double x, double) { return x; }, "mul"};
    return ew_binary(a, b, s);
}

Tensor scale(const Tensor& a, double s) {
    check_finite(a, "scale");
    auto n = make_node(a.shape(), a.dtype());
    for (size_t i = 0; i < n->values.size(); ++i) n->values[i] = a.values()[i] * s;
    return finish(std::move(n), {a}, [s](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& p = self.parents[0];
        for (size_t i = 0; i < self.values.size(); ++i) accumulate(p, i, self.grad[i] * s);
    });
}

Tensor relu(const Tensor& a) {
    check_finite(a, "relu");
    auto n = make_node(a.shape(), a.dtype());
    for (size_t i = 0; i < n->values.size(); ++i)
        n->values[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
    return finish(std::move(n), {a}, [](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& p = self.parents[0];
        const auto& pv = p.values();
        for (size_t i = 0; i < self.values.size(); ++i) {
            if (pv[i] > 0.0) accumulate(p, i, self.grad[i]);
        }
    });
}

Tensor abs(const Tensor& a) {
    check_finite(a, "abs");
    auto n = make_node(a.shape(), a.dtype());
    for (size_t i = 0; i < n->values.size(); ++i) n->values[i] = std::fabs(a.values()[i]);
    // subgradient at 0 is fixed to 0
    return finish(std::move(n), {a}, [](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& p = self.parents[0];
        const auto& pv = p.values();
        for (size_t i = 0; i < self.values.size(); ++i) {
            double sg = pv[i] > 0.0 ? 1.0 : (pv[i] < 0.0 ? -1.0 : 0.0);
            accumulate(p, i, self.grad[i] * sg);
        }
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_finite(a, "matmul");
    check_finite(b, "matmul");
    Dtype dt = common_dtype(a, b);
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw ShapeError("matmul of " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    size_t m = a.shape()[0], k = a.shape()[1], c = b.shape()[1];
    auto n = make_node({m, c}, dt);
    ConstMatMap A(a.values().data(), m, k);
    ConstMatMap B(b.values().data(), k, c);
    MatMap(n->values.data(), m, c) = A * B;
    return finish(std::move(n), {a, b}, [m, k, c](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& pa = self.parents[0];
        Tensor& pb = self.parents[1];
        ConstMatMap G(self.grad.data(), m, c);
        if (pa.requires_grad()) {
            ConstMatMap B(pb.values().data(), k, c);
            MatMap(pa.node()->grad.data(), m, k).noalias() += G * B.transpose();
        }
        if (pb.requires_grad()) {
            ConstMatMap A(pa.values().data(), m, k);
            MatMap(pb.node()->grad.data(), k, c).noalias() += A.transpose() * G;
        }
    });
}

Tensor conv2d(const Tensor& input, const Tensor& weight, size_t stride, size_t pad) {
    check_finite(input, "conv2d");
    check_finite(weight, "conv2d");
    Dtype dt = common_dtype(input, weight);
    if (input.rank() != 3 || weight.rank() != 4) {
        throw ShapeError("conv2d expects input [C,H,W] and weight [Co,Ci,kh,kw], got " +
                         shape_str(input.shape()) + " and " + shape_str(weight.shape()));
    }
    size_t ci = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
    size_t co = weight.shape()[0], kh = weight.shape()[2], kw = weight.shape()[3];
    if (weight.shape()[1] != ci) {
        throw ShapeError("conv2d channel mismatch: input " + shape_str(input.shape()) +
                         " vs weight " + shape_str(weight.shape()));
    }
    if (stride == 0 || h + 2 * pad < kh || w + 2 * pad < kw) {
        throw ShapeError("conv2d kernel larger than padded input");
    }
    size_t ho = (h + 2 * pad - kh) / stride + 1;
    size_t wo = (w + 2 * pad - kw) / stride + 1;
    auto n = make_node({co, ho, wo}, dt);
    const double* x = input.values().data();
    const double* k = weight.values().data();
    double* y = n->values.data();
    for (size_t oc = 0; oc < co; ++oc) {
        for (size_t oi = 0; oi < ho; ++oi) {
            for (size_t oj = 0; oj < wo; ++oj) {
                double acc = 0.0;
                for (size_t ic = 0; ic < ci; ++ic) {
                    for (size_t ki = 0; ki < kh; ++ki) {
                        long ii = static_cast<long>(oi * stride + ki) - static_cast<long>(pad);
                        if (ii < 0 || ii >= static_cast<long>(h)) continue;
                        for (size_t kj = 0; kj < kw; ++kj) {
                            long jj = static_cast<long>(oj * stride + kj) - static_cast<long>(pad);
                            if (jj < 0 || jj >= static_cast<long>(w)) continue;
                            acc += x[(ic * h + ii) * w + jj] *
                                   k[((oc * ci + ic) * kh + ki) * kw + kj];
                        }
                    }
                }
                y[(oc * ho + oi) * wo + oj] = acc;
            }
        }
    }
    return finish(std::move(n), {input, weight},
                  [ci, h, w, co, kh, kw, ho, wo, stride, pad](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& pin = self.parents[0];
        Tensor& pw = self.parents[1];
        const double* g = self.grad.data();
        const double* x = pin.values().data();
        const double* k = pw.values().data();
        double* gx = pin.requires_grad() ? pin.node()->grad.data() : nullptr;
        double* gk = pw.requires_grad() ? pw.node()->grad.data() : nullptr;
        for (size_t oc = 0; oc < co; ++oc) {
            for (size_t oi = 0; oi < ho; ++oi) {
                for (size_t oj = 0; oj < wo; ++oj) {
                    double go = g[(oc * ho + oi) * wo + oj];
                    if (go == 0.0) continue;
                    for (size_t ic = 0; ic < ci; ++ic) {
                        for (size_t ki = 0; ki < kh; ++ki) {
                            long ii = static_cast<long>(oi * stride + ki) - static_cast<long>(pad);
                            if (ii < 0 || ii >= static_cast<long>(h)) continue;
                            for (size_t kj = 0; kj < kw; ++kj) {
                                long jj = static_cast<long>(oj * stride + kj) -
                                          static_cast<long>(pad);
                                if (jj < 0 || jj >= static_cast<long>(w)) continue;
                                size_t xi = (ic * h + ii) * w + jj;
                                size_t wi = ((oc * ci + ic) * kh + ki) * kw + kj;
                                if (gx) gx[xi] += go * k[wi];
                                if (gk) gk[wi] += go * x[xi];
                            }
                        }
                    }
                }
            }
        }
    });
}

Tensor add_channel_bias(const Tensor& a, const Tensor& bias) {
    check_finite(a, "add_channel_bias");
    check_finite(bias, "add_channel_bias");
    Dtype dt = common_dtype(a, bias);
    if (a.rank() != 3 || bias.rank() != 1 || bias.shape()[0] != a.shape()[0]) {
        throw ShapeError("add_channel_bias of " + shape_str(a.shape()) + " and " +
                         shape_str(bias.shape()));
    }
    size_t c = a.shape()[0], hw = a.shape()[1] * a.shape()[2];
    auto n = make_node(a.shape(), dt);
    for (size_t ic = 0; ic < c; ++ic) {
        double b = bias.values()[ic];
        for (size_t i = 0; i < hw; ++i) n->values[ic * hw + i] = a.values()[ic * hw + i] + b;
    }
    return finish(std::move(n), {a, bias}, [c, hw](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& pa = self.parents[0];
        Tensor& pb = self.parents[1];
        for (size_t ic = 0; ic < c; ++ic) {
            double acc = 0.0;
            for (size_t i = 0; i < hw; ++i) {
                double g = self.grad[ic * hw + i];
                if (pa.requires_grad()) accumulate(pa, ic * hw + i, g);
                acc += g;
            }
            if (pb.requires_grad()) accumulate(pb, ic, acc);
        }
    });
}

Tensor global_avg_pool(const Tensor& a) {
    check_finite(a, "global_avg_pool");
    if (a.rank() != 3) {
        throw ShapeError("global_avg_pool expects [C,H,W], got " + shape_str(a.shape()));
    }
    size_t c = a.shape()[0], hw = a.shape()[1] * a.shape()[2];
    auto n = make_node({c}, a.dtype());
    for (size_t ic = 0; ic < c; ++ic) {
        double acc = 0.0;
        for (size_t i = 0; i < hw; ++i) acc += a.values()[ic * hw + i];
        n->values[ic] = acc / static_cast<double>(hw);
    }
    return finish(std::move(n), {a}, [c, hw](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& p = self.parents[0];
        double inv = 1.0 / static_cast<double>(hw);
        for (size_t ic = 0; ic < c; ++ic) {
            double g = self.grad[ic] * inv;
            for (size_t i = 0; i < hw; ++i) accumulate(p, ic * hw + i, g);
        }
    });
}

namespace {

// Decompose shape around `axis` into outer x axis x inner strides.
void axis_split(const Shape& s, size_t axis, size_t& outer, size_t& len, size_t& inner) {
    if (axis >= s.size()) throw ShapeError("axis " + std::to_string(axis) +
                                           " out of range for " + shape_str(s));
    outer = 1;
    for (size_t i = 0; i < axis; ++i) outer *= s[i];
    len = s[axis];
    inner = 1;
    for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}

}  // namespace

Tensor concat(const std::vector<Tensor>& parts, size_t axis) {
    if (parts.empty()) throw ShapeError("concat of no tensors");
    const Shape& ref = parts[0].shape();
    Dtype dt = parts[0].dtype();
    size_t axis_total = 0;
    for (const auto& p : parts) {
        if (p.rank() != ref.size() || p.dtype() != dt) {
            throw ShapeError("concat rank/dtype mismatch");
        }
        for (size_t i = 0; i < ref.size(); ++i) {
            if (i != axis && p.shape()[i] != ref[i]) {
                throw ShapeError("concat shape mismatch: " + shape_str(ref) + " vs " +
                                 shape_str(p.shape()));
            }
        }
        check_finite(p, "concat");
        axis_total += p.shape()[axis];
    }
    Shape out = ref;
    out[axis] = axis_total;
    auto n = make_node(out, dt);
    size_t outer, olen, inner;
    axis_split(out, axis, outer, olen, inner);
    std::vector<size_t> lens;
    size_t off = 0;
    for (const auto& p : parts) {
        size_t plen = p.shape()[axis];
        lens.push_back(plen);
        for (size_t o = 0; o < outer; ++o) {
            const double* src = p.values().data() + o * plen * inner;
            double* dst = n->values.data() + (o * olen + off) * inner;
            std::copy(src, src + plen * inner, dst);
        }
        off += plen;
    }
    std::vector<Tensor> parents(parts.begin(), parts.end());
    return finish(std::move(n), std::move(parents),
                  [outer, olen, inner, lens](Tensor::Node& self) {
        prepare_parent_grads(self);
        size_t off = 0;
        for (size_t pi = 0; pi < self.parents.size(); ++pi) {
            Tensor& p = self.parents[pi];
            size_t plen = lens[pi];
            if (p.requires_grad()) {
                for (size_t o = 0; o < outer; ++o) {
                    const double* src = self.grad.data() + (o * olen + off) * inner;
                    double* dst = p.node()->grad.data() + o * plen * inner;
                    for (size_t i = 0; i < plen * inner; ++i) dst[i] += src[i];
                }
            }
            off += plen;
        }
    });
}

Tensor slice(const Tensor& a, size_t axis, size_t start, size_t len) {
    check_finite(a, "slice");
    size_t outer, alen, inner;
    axis_split(a.shape(), axis, outer, alen, inner);
    if (start + len > alen) {
        throw ShapeError("slice [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") exceeds axis extent " +
                         std::to_string(alen));
    }
    Shape out = a.shape();
    out[axis] = len;
    auto n = make_node(out, a.dtype());
    for (size_t o = 0; o < outer; ++o) {
        const double* src = a.values().data() + (o * alen + start) * inner;
        std::copy(src, src + len * inner, n->values.data() + o * len * inner);
    }
    return finish(std::move(n), {a}, [outer, alen, inner, start, len](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& p = self.parents[0];
        for (size_t o = 0; o < outer; ++o) {
            const double* src = self.grad.data() + o * len * inner;
            double* dst = p.node()->grad.data() + (o * alen + start) * inner;
            for (size_t i = 0; i < len * inner; ++i) dst[i] += src[i];
        }
    });
}

namespace {

Tensor axis_norm(const Tensor& a, size_t axis, bool l2) {
    check_finite(a, l2 ? "l2_norm" : "l1_norm");
    size_t outer, len, inner;
    axis_split(a.shape(), axis, outer, len, inner);
    Shape out = a.shape();
    out.erase(out.begin() + static_cast<long>(axis));
    auto n = make_node(out, a.dtype());
    for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
            double acc = 0.0;
            for (size_t j = 0; j < len; ++j) {
                double v = a.values()[(o * len + j) * inner + in];
                acc += l2 ? v * v : std::fabs(v);
            }
            n->values[o * inner + in] = l2 ? std::sqrt(acc) : acc;
        }
    }
    return finish(std::move(n), {a}, [outer, len, inner, l2](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& p = self.parents[0];
        const auto& pv = p.values();
        for (size_t o = 0; o < outer; ++o) {
            for (size_t in = 0; in < inner; ++in) {
                double g = self.grad[o * inner + in];
                double nrm = self.values[o * inner + in];
                for (size_t j = 0; j < len; ++j) {
                    size_t idx = (o * len + j) * inner + in;
                    double d;
                    if (l2) {
                        d = nrm > 1e-12 ? pv[idx] / nrm : 0.0;
                    } else {
                        d = pv[idx] > 0.0 ? 1.0 : (pv[idx] < 0.0 ? -1.0 : 0.0);
                    }
                    accumulate(p, idx, g * d);
                }
            }
        }
    });
}

}  // namespace

Tensor l1_norm(const Tensor& a, size_t axis) { return axis_norm(a, axis, false); }
Tensor l2_norm(const Tensor& a, size_t axis) { return axis_norm(a, axis, true); }

Tensor dot(const Tensor& a, const Tensor& b) {
    check_finite(a, "dot");
    check_finite(b, "dot");
    Dtype dt = common_dtype(a, b);
    if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size()) {
        throw ShapeError("dot of " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    auto n = make_node({}, dt);
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a.values()[i] * b.values()[i];
    n->values[0] = acc;
    return finish(std::move(n), {a, b}, [](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& pa = self.parents[0];
        Tensor& pb = self.parents[1];
        double g = self.grad[0];
        for (size_t i = 0; i < pa.size(); ++i) {
            if (pa.requires_grad()) accumulate(pa, i, g * pb.values()[i]);
            if (pb.requires_grad()) accumulate(pb, i, g * pa.values()[i]);
        }
    });
}

Tensor softmax(const Tensor& a, size_t axis) {
    check_finite(a, "softmax");
    size_t outer, len, inner;
    axis_split(a.shape(), axis, outer, len, inner);
    auto n = make_node(a.shape(), a.dtype());
    for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
            double mx = -std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < len; ++j)
                mx = std::max(mx, a.values()[(o * len + j) * inner + in]);
            double z = 0.0;
            for (size_t j = 0; j < len; ++j)
                z += std::exp(a.values()[(o * len + j) * inner + in] - mx);
            for (size_t j = 0; j < len; ++j) {
                size_t idx = (o * len + j) * inner + in;
                n->values[idx] = std::exp(a.values()[idx] - mx) / z;
            }
        }
    }
    return finish(std::move(n), {a}, [outer, len, inner](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& p = self.parents[0];
        for (size_t o = 0; o < outer; ++o) {
            for (size_t in = 0; in < inner; ++in) {
                double dotgy = 0.0;
                for (size_t j = 0; j < len; ++j) {
                    size_t idx = (o * len + j) * inner + in;
                    dotgy += self.grad[idx] * self.values[idx];
                }
                for (size_t j = 0; j < len; ++j) {
                    size_t idx = (o * len + j) * inner + in;
                    accumulate(p, idx, self.values[idx] * (self.grad[idx] - dotgy));
                }
            }
        }
    });
}

Tensor sum(const Tensor& a) {
    check_finite(a, "sum");
    auto n = make_node({}, a.dtype());
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    n->values[0] = acc;
    return finish(std::move(n), {a}, [](Tensor::Node& self) {
        prepare_parent_grads(self);
        Tensor& p = self.parents[0];
        double g = self.grad[0];
        for (size_t i = 0; i < p.size(); ++i) accumulate(p, i, g);
    });
}

void backward(const Tensor& root) {
    if (!root.defined()) throw ValueError("backward on undefined tensor");
    if (!root.requires_grad()) {
        warn("backward on detached tensor is a no-op");
        count_incident("backward.detached_root");
        return;
    }
    if (root.size() != 1) {
        throw ShapeError("backward root must be scalar, got " + shape_str(root.shape()));
    }
    // Iterative post-order DFS; each node enters the order exactly once.
    std::vector<Tensor::Node*> order;
    std::unordered_set<Tensor::Node*> seen;
    struct Frame {
        Tensor::Node* n;
        size_t next_parent;
    };
    std::vector<Frame> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.n->parents.size()) {
            Tensor::Node* p = f.n->parents[f.next_parent++].node().get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }
    // Transient (non-leaf) gradients are rebuilt per pass; leaf gradients
    // accumulate across passes until zero_grad.
    for (Tensor::Node* n : order) {
        if (!n->parents.empty()) n->grad.assign(n->values.size(), 0.0);
    }
    Tensor::Node* r = root.node().get();
    if (r->grad.empty()) r->grad.assign(1, 0.0);
    r->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor::Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

}  // namespace pam
