#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "amd/tensor.hpp"

namespace amd {

struct LossConfig {
    double alpha = 10.0;
    double beta = 50.0;
    double upsilon = 0.5;
    void validate() const;
};

/// XOR of two binary attribute vectors and the exclusive count M_E.
std::pair<std::vector<std::uint8_t>, int> pairwise_xor(const std::vector<std::uint8_t>& a_i,
                                                       const std::vector<std::uint8_t>& a_j);

/// L_d = | d - sum_k d^k | (subgradient 0 at the kink).
Tensor metric_distillation_loss(double d, const std::vector<Tensor>& d_components);

/// Group prior: hinge on the exclusive-share sum falling below (M_E/M)^upsilon
/// and on the common-share sum exceeding 1 - (M_E/M)^upsilon. Zero exactly
/// when both group constraints hold. Throws DegenerateFeatureError at
/// d_hat = 0.
Tensor group_prior_loss(const std::vector<Tensor>& d_components,
                        const std::vector<std::uint8_t>& a_ij, const Tensor& d_hat,
                        double upsilon);

/// The unique lambda that makes the per-attribute lower bound for exclusive
/// shares equal to the upper bound for common shares:
///   lambda = 1/2 ln[ (M - M_E) (M_E/M)^u / (M_E (1 - (M_E/M)^u)) ].
/// Returns {lambda, common bound}. Requires 0 < M_E < M.
std::pair<double, double> lambda_bound(int m, int m_e, double upsilon);

/// Individual prior: hinge per exclusive share below the common bound and
/// per common share above it. Requires 0 < M_E < M and d_hat > 0.
Tensor individual_prior_loss(const std::vector<Tensor>& d_components,
                             const std::vector<std::uint8_t>& a_ij, const Tensor& d_hat,
                             double upsilon);

/// Numeric summary of one pair's loss, plus the graph node for the total.
/// Skip rules: d_hat = 0 drops both priors; M_E == 0 or M_E == M drops the
/// individual prior (its bound is undefined there).
struct LossBreakdown {
    double L_d = 0.0;
    double L_p1 = 0.0;
    double L_p2 = 0.0;
    double total = 0.0;
    std::optional<double> lambda;
    bool p1_skipped = false;
    bool p2_skipped = false;
    double exclusive_share_sum = 0.0;
    double common_share_sum = 0.0;
    Tensor total_node;

    nlohmann::json to_json() const;
};

/// L = L_d + alpha * L_p1 + beta * L_p2 with the skip rules above. The
/// distance d is supervision from the frozen target and enters as a
/// constant; gradients flow through the components (and through d_hat in
/// the share denominators).
LossBreakdown total_loss(double d, const std::vector<Tensor>& d_components,
                         const std::vector<std::uint8_t>& a_ij, const LossConfig& config);

}  // namespace amd
