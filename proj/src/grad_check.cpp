#include "pam/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace pam {

namespace {

std::vector<Tensor> make_leaves(const std::vector<Tensor>& point, bool with_grad) {
    std::vector<Tensor> leaves;
    leaves.reserve(point.size());
    for (const auto& p : point) {
        Tensor t = tensor_from(p.shape(), p.values(), p.dtype());
        t.set_requires_grad(with_grad);
        leaves.push_back(t);
    }
    return leaves;
}

double eval_scalar(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                   const std::vector<Tensor>& leaves) {
    Tensor out = fn(leaves);
    if (out.size() != 1) {
        throw ShapeError("grad_check: fn must return a scalar, got " +
                         shape_str(out.shape()));
    }
    return out.item();
}

}  // namespace

GradCheckReport grad_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& fn,
    const std::vector<Tensor>& point, double h, double tol) {
    if (h <= 0.0) throw ValueError("grad_check: h must be positive");

    // One reverse-mode pass.
    std::vector<Tensor> leaves = make_leaves(point, true);
    Tensor out = fn(leaves);
    if (out.size() != 1) {
        throw ShapeError("grad_check: fn must return a scalar, got " +
                         shape_str(out.shape()));
    }
    backward(out);
    std::vector<std::vector<double>> ad;
    for (auto& l : leaves) {
        ad.push_back(l.has_grad() ? l.grad() : std::vector<double>(l.size(), 0.0));
    }

    GradCheckReport rep;
    std::vector<Tensor> probe = make_leaves(point, false);
    for (size_t pi = 0; pi < probe.size(); ++pi) {
        auto& vals = probe[pi].mutable_values();
        for (size_t i = 0; i < vals.size(); ++i) {
            double keep = vals[i];
            vals[i] = keep + h;
            double fp = eval_scalar(fn, probe);
            vals[i] = keep - h;
            double fm = eval_scalar(fn, probe);
            vals[i] = keep;
            double fd = (fp - fm) / (2.0 * h);
            double a = ad[pi][i];
            double rel = std::fabs(a - fd) /
                         std::max({1.0, std::fabs(a), std::fabs(fd)});
            rep.max_rel = std::max(rep.max_rel, rel);
            ++rep.coords;
        }
    }
    rep.pass = rep.max_rel <= tol;
    return rep;
}

}  // namespace pam
