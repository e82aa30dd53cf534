#pragma once

#include "pam/tensor.hpp"

#include <cstdint>
#include <vector>

namespace pam {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second-moment accumulators, shape-congruent with their parameters.
struct AdamState {
    AdamConfig cfg;
    uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void init(const std::vector<Tensor>& params, AdamConfig cfg);
};

/// One bias-corrected Adam update over all parameters. The step counter
/// advances by exactly 1 per call. A parameter with no gradient is skipped
/// with a warning; a parameter with a non-finite gradient keeps its old
/// value and the incident is counted. Returns the number of tensors updated.
size_t adam_step(std::vector<Tensor>& params, AdamState& state);

}  // namespace pam
