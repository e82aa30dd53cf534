#pragma once

#include "pam/tensor.hpp"

#include <functional>
#include <vector>

namespace pam {

struct GradCheckReport {
    double max_rel = 0.0;   // worst per-coordinate discrepancy (see grad_check)
    size_t coords = 0;      // coordinates compared
    bool pass = false;
};

/// Compares reverse-mode gradients of a scalar-valued function against
/// central finite differences at the given point. The function is called
/// with fresh leaf tensors on every evaluation, so it must be a pure
/// function of its inputs. Discrepancy per coordinate is
/// |ad - fd| / max(1, |ad|, |fd|). Throws if fn returns a non-scalar.
GradCheckReport grad_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& fn,
    const std::vector<Tensor>& point, double h, double tol);

}  // namespace pam
