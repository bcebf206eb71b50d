#pragma once

// Test-only gradient oracle: central finite differences against a scalar
// loss that is rebuilt from the current leaf values on every evaluation.
// Stays independent of the reverse-mode path it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "amd/rng.hpp"
#include "amd/tensor.hpp"

namespace amd::testing {

struct GradCheckResult {
    double max_rel_error = 0.0;
    int checked = 0;
};

// rel error = |g - fd| / max(|g|, |fd|, floor); the floor keeps dead-unit
// coordinates (true gradient 0) from dividing FD noise by itself.
inline GradCheckResult check_gradients(const std::function<Tensor()>& build_loss,
                                       std::vector<Tensor> leaves, double h = 1e-5,
                                       double floor = 1e-6) {
    Tensor loss = build_loss();
    for (Tensor& leaf : leaves) leaf.zero_grad();
    loss.backward();

    GradCheckResult result;
    for (Tensor& leaf : leaves) {
        const std::vector<double> analytic = leaf.grad();
        auto& vals = leaf.mutable_values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + h;
            const double f_plus = build_loss().item();
            vals[i] = keep - h;
            const double f_minus = build_loss().item();
            vals[i] = keep;
            const double fd = (f_plus - f_minus) / (2.0 * h);
            const double denom = std::max({std::fabs(analytic[i]), std::fabs(fd), floor});
            result.max_rel_error = std::max(result.max_rel_error, std::fabs(analytic[i] - fd) / denom);
            ++result.checked;
        }
    }
    return result;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
    std::vector<double> vals(static_cast<std::size_t>(shape_size(shape)));
    for (double& v : vals) v = rng.uniform(lo, hi);
    return Tensor::from_values(std::move(shape), std::move(vals), requires_grad);
}

}  // namespace amd::testing
