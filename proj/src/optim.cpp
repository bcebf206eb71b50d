#include "amd/optim.hpp"

#include <cmath>
#include <utility>

#include "amd/errors.hpp"

namespace amd {

AdamState AdamState::for_param(const Tensor& param) {
    AdamState s;
    s.m.assign(param.values().size(), 0.0);
    s.v.assign(param.values().size(), 0.0);
    return s;
}

void adam_step(Tensor& param, const std::vector<double>& grad, AdamState& state, double lr) {
    if (lr <= 0.0) throw ConfigError("adam_step: lr must be positive");
    auto& p = param.mutable_values();
    if (grad.size() != p.size() || state.m.size() != p.size() || state.v.size() != p.size())
        throw DimensionError("adam_step: grad/state shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < p.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params) : params_(std::move(params)) {
    states_.reserve(params_.size());
    for (const Tensor& p : params_) states_.push_back(AdamState::for_param(p));
}

void AdamOptimizer::step(double lr) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!params_[i].has_grad()) continue;
        adam_step(params_[i], params_[i].grad(), states_[i], lr);
        params_[i].zero_grad();
    }
}

}  // namespace amd
