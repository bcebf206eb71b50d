#pragma once

#include <cstdint>
#include <vector>

#include "amd/tensor.hpp"

namespace amd {

/// Per-parameter Adam state. Moment arrays always match the parameter shape.
struct AdamState {
    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_param(const Tensor& param);
};

/// One bias-corrected Adam update of a leaf parameter, in place.
void adam_step(Tensor& param, const std::vector<double>& grad, AdamState& state, double lr);

/// Convenience bundle for a list of trainable leaves.
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<Tensor> params);
    /// Applies one step from the grads currently on the parameters, then
    /// zeroes them. Parameters without an accumulated grad are skipped.
    void step(double lr);
    const std::vector<Tensor>& params() const { return params_; }

private:
    std::vector<Tensor> params_;
    std::vector<AdamState> states_;
};

}  // namespace amd
