#include "amd/losses.hpp"

#include <cmath>
#include <string>

namespace amd {

void LossConfig::validate() const {
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("loss: alpha and beta must be >= 0");
    if (!(upsilon > 0.0 && upsilon < 1.0)) throw ConfigError("loss: upsilon must be in (0,1)");
}

std::pair<std::vector<std::uint8_t>, int> pairwise_xor(const std::vector<std::uint8_t>& a_i,
                                                       const std::vector<std::uint8_t>& a_j) {
    if (a_i.size() != a_j.size()) throw DimensionError("pairwise_xor: length mismatch");
    std::vector<std::uint8_t> out(a_i.size());
    int m_e = 0;
    for (std::size_t k = 0; k < a_i.size(); ++k) {
        if (a_i[k] > 1 || a_j[k] > 1) throw UsageError("pairwise_xor: attribute vectors must be binary");
        out[k] = a_i[k] ^ a_j[k];
        m_e += out[k];
    }
    return {std::move(out), m_e};
}

Tensor metric_distillation_loss(double d, const std::vector<Tensor>& d_components) {
    if (d_components.empty()) throw UsageError("metric_distillation_loss: no components");
    if (d < 0.0) throw UsageError("metric_distillation_loss: d must be >= 0");
    Tensor d_hat = sum_of(d_components);
    return abs_elem(sub(Tensor::scalar(d), d_hat));
}

namespace {

// Shares d^k / d_hat in attribute index order, split into exclusive and
// common groups. Keeping the index-order accumulation makes the hinge
// zero-sets bit-identical to a direct evaluation of the constraints.
struct ShareGroups {
    std::vector<Tensor> exclusive;
    std::vector<Tensor> common;
};

ShareGroups make_shares(const std::vector<Tensor>& d_components,
                        const std::vector<std::uint8_t>& a_ij, const Tensor& d_hat) {
    if (d_components.size() != a_ij.size())
        throw DimensionError("prior loss: components and a_ij length mismatch");
    ShareGroups groups;
    for (std::size_t k = 0; k < d_components.size(); ++k) {
        Tensor share = div(d_components[k], d_hat);
        if (a_ij[k])
            groups.exclusive.push_back(share);
        else
            groups.common.push_back(share);
    }
    return groups;
}

Tensor sum_or_zero(const std::vector<Tensor>& xs) {
    return xs.empty() ? Tensor::scalar(0.0) : sum_of(xs);
}

double group_threshold(int m, int m_e, double upsilon) {
    return std::pow(static_cast<double>(m_e) / static_cast<double>(m), upsilon);
}

}  // namespace

Tensor group_prior_loss(const std::vector<Tensor>& d_components,
                        const std::vector<std::uint8_t>& a_ij, const Tensor& d_hat,
                        double upsilon) {
    if (!(upsilon > 0.0 && upsilon < 1.0)) throw ConfigError("group_prior_loss: upsilon in (0,1)");
    if (d_hat.item() <= 0.0)
        throw DegenerateFeatureError("group_prior_loss: d_hat must be positive");
    const int m = static_cast<int>(a_ij.size());
    int m_e = 0;
    for (std::uint8_t b : a_ij) m_e += b;
    const double t = group_threshold(m, m_e, upsilon);

    ShareGroups groups = make_shares(d_components, a_ij, d_hat);
    Tensor excl_sum = sum_or_zero(groups.exclusive);
    Tensor common_sum = sum_or_zero(groups.common);
    Tensor under = relu(sub(Tensor::scalar(t), excl_sum));
    Tensor over = relu(sub(common_sum, Tensor::scalar(1.0 - t)));
    return add(under, over);
}

std::pair<double, double> lambda_bound(int m, int m_e, double upsilon) {
    if (!(m_e > 0 && m_e < m))
        throw UsageError("lambda_bound: requires 0 < M_E < M");
    if (!(upsilon > 0.0 && upsilon < 1.0)) throw ConfigError("lambda_bound: upsilon in (0,1)");
    const double t = group_threshold(m, m_e, upsilon);
    // Solves e^{-l} t / M_E = e^{l} (1-t) / (M - M_E) for l; the printed
    // form of the numerator reads "(M - M_E) (M_E/M)^u" once the bound
    // equality is worked through.
    const double lambda = 0.5 * std::log((static_cast<double>(m - m_e) * t) /
                                         (static_cast<double>(m_e) * (1.0 - t)));
    const double bound = std::exp(-lambda) * t / static_cast<double>(m_e);
    return {lambda, bound};
}

Tensor individual_prior_loss(const std::vector<Tensor>& d_components,
                             const std::vector<std::uint8_t>& a_ij, const Tensor& d_hat,
                             double upsilon) {
    if (d_hat.item() <= 0.0)
        throw DegenerateFeatureError("individual_prior_loss: d_hat must be positive");
    const int m = static_cast<int>(a_ij.size());
    int m_e = 0;
    for (std::uint8_t b : a_ij) m_e += b;
    const auto [lambda, bound] = lambda_bound(m, m_e, upsilon);
    (void)lambda;

    ShareGroups groups = make_shares(d_components, a_ij, d_hat);
    std::vector<Tensor> hinges;
    hinges.reserve(groups.exclusive.size() + groups.common.size());
    for (const Tensor& share : groups.exclusive)
        hinges.push_back(relu(sub(Tensor::scalar(bound), share)));
    for (const Tensor& share : groups.common)
        hinges.push_back(relu(sub(share, Tensor::scalar(bound))));
    return sum_of(hinges);
}

LossBreakdown total_loss(double d, const std::vector<Tensor>& d_components,
                         const std::vector<std::uint8_t>& a_ij, const LossConfig& config) {
    config.validate();
    if (d_components.size() != a_ij.size())
        throw DimensionError("total_loss: components and a_ij length mismatch");
    const int m = static_cast<int>(a_ij.size());
    int m_e = 0;
    for (std::uint8_t b : a_ij) m_e += b;

    LossBreakdown out;
    Tensor d_hat = sum_of(d_components);
    Tensor total = metric_distillation_loss(d, d_components);
    out.L_d = total.item();

    const bool degenerate = d_hat.item() <= 0.0;
    if (degenerate) {
        out.p1_skipped = true;
        out.p2_skipped = true;
    } else {
        Tensor p1 = group_prior_loss(d_components, a_ij, d_hat, config.upsilon);
        out.L_p1 = p1.item();
        if (config.alpha != 0.0) total = add(total, scale(p1, config.alpha));

        ShareGroups groups = make_shares(d_components, a_ij, d_hat);
        for (const Tensor& s : groups.exclusive) out.exclusive_share_sum += s.item();
        for (const Tensor& s : groups.common) out.common_share_sum += s.item();

        if (m_e == 0 || m_e == m) {
            out.p2_skipped = true;  // per-attribute bound undefined
        } else {
            out.lambda = lambda_bound(m, m_e, config.upsilon).first;
            Tensor p2 = individual_prior_loss(d_components, a_ij, d_hat, config.upsilon);
            out.L_p2 = p2.item();
            if (config.beta != 0.0) total = add(total, scale(p2, config.beta));
        }
    }
    out.total = out.L_d + config.alpha * out.L_p1 + config.beta * out.L_p2;
    out.total_node = total;
    return out;
}

nlohmann::json LossBreakdown::to_json() const {
    nlohmann::json j{{"L_d", L_d},
                     {"L_p1", L_p1},
                     {"L_p2", L_p2},
                     {"total", total},
                     {"p1_skipped", p1_skipped},
                     {"p2_skipped", p2_skipped},
                     {"exclusive_share_sum", exclusive_share_sum},
                     {"common_share_sum", common_share_sum}};
    if (lambda) j["lambda"] = *lambda;
    return j;
}

}  // namespace amd
