#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace pam {

using Shape = std::vector<size_t>;

size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Scalar precision of a tensor. Storage is always double; F32 tensors
/// round every op result through float so 32-bit numerics are reproducible
/// without a second code path.
enum class Dtype { F64, F32 };

/// When strict-finite mode is on, ops reject non-finite input scalars.
/// Off by default; the trainer uses count-and-continue instead.
void set_strict_finite(bool on);
bool strict_finite();

void warn(const std::string& msg);

/// Process-wide incident counters (NaN updates, skipped loss terms, ...).
uint64_t incident_count(const std::string& key);
void count_incident(const std::string& key, uint64_t n = 1);
void reset_incidents();

/// Dense row-major tensor with an optional reverse-mode tape record.
/// Copying a Tensor copies the handle; the buffer is shared. Values are
/// immutable after construction except through mutable_values() (parameter
/// updates) and gradient accumulation.
class Tensor {
public:
    struct Node {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;  // empty until first accumulation
        Dtype dtype = Dtype::F64;
        bool requires_grad = false;
        std::vector<Tensor> parents;
        std::function<void(Node&)> backward_fn;
    };

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    size_t rank() const { return node_->shape.size(); }
    size_t size() const { return node_->values.size(); }
    Dtype dtype() const { return node_->dtype; }

    bool requires_grad() const { return node_->requires_grad; }
    Tensor& set_requires_grad(bool on);

    const std::vector<double>& values() const { return node_->values; }
    /// Direct write access to the buffer (optimizer updates). Only valid on
    /// leaf tensors; the tape does not track in-place edits.
    std::vector<double>& mutable_values();

    bool has_grad() const { return node_ && !node_->grad.empty(); }
    /// Accumulated gradient; zero-sized until backward() reaches this tensor.
    const std::vector<double>& grad() const;
    void zero_grad();
    void ensure_grad();  // allocate zero grad buffer if absent

    double item() const;
    double at(const std::vector<size_t>& idx) const;

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

Tensor tensor_from(Shape shape, std::vector<double> values, Dtype dtype = Dtype::F64);
Tensor zeros(Shape shape, Dtype dtype = Dtype::F64);
Tensor full(Shape shape, double value, Dtype dtype = Dtype::F64);
Tensor scalar(double value, Dtype dtype = Dtype::F64);
/// Copy of t with no tape record and requires_grad off.
Tensor detach(const Tensor& t);

// Element-wise ops. Shapes must match exactly, or the smaller operand's
// shape must equal a trailing suffix of the larger's (broadcast over the
// leading axes); anything richer is rejected.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor abs(const Tensor& a);

/// 2-D matrix product [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// 2-D convolution. input [Cin,H,W], weight [Cout,Cin,kh,kw], zero padding.
Tensor conv2d(const Tensor& input, const Tensor& weight, size_t stride, size_t pad);

/// [C,H,W] + per-channel bias [C].
Tensor add_channel_bias(const Tensor& a, const Tensor& bias);

/// [C,H,W] -> [C] mean over the spatial extent.
Tensor global_avg_pool(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, size_t axis);
Tensor slice(const Tensor& a, size_t axis, size_t start, size_t len);

/// Norms reduce the given axis away.
Tensor l1_norm(const Tensor& a, size_t axis);
Tensor l2_norm(const Tensor& a, size_t axis);

/// 1-D dot product -> scalar.
Tensor dot(const Tensor& a, const Tensor& b);

Tensor softmax(const Tensor& a, size_t axis);

/// Sum of all entries -> scalar.
Tensor sum(const Tensor& a);

/// Reverse-mode pass from a scalar root. Gradients accumulate into the
/// .grad buffers of every tensor on the tape; repeated calls without
/// zero_grad() keep accumulating. Each tape node is visited exactly once.
/// A detached root is a warning no-op; a non-scalar root is rejected.
void backward(const Tensor& root);

}  // namespace pam
