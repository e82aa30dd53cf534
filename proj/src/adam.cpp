#include "pam/adam.hpp"

#include <cmath>

namespace pam {

void AdamState::init(const std::vector<Tensor>& params, AdamConfig c) {
    cfg = c;
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.emplace_back(p.size(), 0.0);
        v.emplace_back(p.size(), 0.0);
    }
}

size_t adam_step(std::vector<Tensor>& params, AdamState& state) {
    if (state.m.size() != params.size()) {
        throw ValueError("AdamState not initialized for this parameter set");
    }
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
    size_t updated = 0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        if (!p.has_grad()) {
            warn("adam_step: parameter " + std::to_string(pi) + " has no gradient, skipped");
            count_incident("adam.missing_grad");
            continue;
        }
        const auto& g = p.grad();
        if (g.size() != state.m[pi].size()) {
            throw ShapeError("adam_step: state shape mismatch for parameter " +
                             std::to_string(pi));
        }
        bool finite = true;
        for (double gv : g) {
            if (!std::isfinite(gv)) {
                finite = false;
                break;
            }
        }
        if (!finite) {
            count_incident("adam.nonfinite_grad");
            continue;
        }
        auto& mv = state.m[pi];
        auto& vv = state.v[pi];
        auto& x = p.mutable_values();
        for (size_t i = 0; i < g.size(); ++i) {
            mv[i] = state.cfg.beta1 * mv[i] + (1.0 - state.cfg.beta1) * g[i];
            vv[i] = state.cfg.beta2 * vv[i] + (1.0 - state.cfg.beta2) * g[i] * g[i];
            double mhat = mv[i] / bc1;
            double vhat = vv[i] / bc2;
            x[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
            if (p.dtype() == Dtype::F32) x[i] = static_cast<double>(static_cast<float>(x[i]));
        }
        ++updated;
    }
    return updated;
}

}  // namespace pam
