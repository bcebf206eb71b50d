#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amd/losses.hpp"
#include "amd/rng.hpp"
#include "support/finite_diff.hpp"

using namespace amd;

namespace {

std::vector<Tensor> components_of(const std::vector<double>& values, bool requires_grad = false) {
    std::vector<Tensor> out;
    for (double v : values) out.push_back(Tensor::scalar(v, requires_grad));
    return out;
}

// Independent checker for the two prior-constraint groups, evaluated with
// the same share arithmetic (component / sum, index order) as the losses so
// the zero-sets agree bit for bit.
struct ConstraintCheck {
    bool group_holds = true;       // exclusive sum >= t and common sum <= 1 - t
    bool individual_holds = true;  // each share on the right side of the bound
};

ConstraintCheck check_constraints(const std::vector<double>& components,
                                  const std::vector<std::uint8_t>& a_ij, double upsilon) {
    const int m = static_cast<int>(a_ij.size());
    int m_e = 0;
    for (auto b : a_ij) m_e += b;
    double d_hat = 0.0;
    for (double c : components) d_hat += c;
    double excl_sum = 0.0, common_sum = 0.0;
    std::vector<double> excl, common;
    for (std::size_t k = 0; k < components.size(); ++k) {
        const double share = components[k] / d_hat;
        if (a_ij[k]) {
            excl.push_back(share);
        } else {
            common.push_back(share);
        }
    }
    for (double s : excl) excl_sum += s;
    for (double s : common) common_sum += s;
    const double t = std::pow(static_cast<double>(m_e) / m, upsilon);

    ConstraintCheck out;
    out.group_holds = !(t - excl_sum > 0.0) && !(common_sum - (1.0 - t) > 0.0);
    if (m_e > 0 && m_e < m) {
        const double bound = lambda_bound(m, m_e, upsilon).second;
        for (double s : excl)
            if (bound - s > 0.0) out.individual_holds = false;
        for (double s : common)
            if (s - bound > 0.0) out.individual_holds = false;
    }
    return out;
}

}  // namespace

TEST_CASE("pairwise xor") {
    auto [v, me] = pairwise_xor({1, 0, 1, 1}, {1, 1, 0, 1});
    CHECK(v == std::vector<std::uint8_t>{0, 1, 1, 0});
    CHECK(me == 2);

    std::vector<std::uint8_t> a{1, 0, 1};
    auto [self, me_self] = pairwise_xor(a, a);
    CHECK(me_self == 0);
    CHECK(std::all_of(self.begin(), self.end(), [](auto b) { return b == 0; }));

    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::uint8_t> x(6), y(6);
        for (auto& b : x) b = rng.bernoulli(0.5);
        for (auto& b : y) b = rng.bernoulli(0.5);
        CHECK(pairwise_xor(x, y) == pairwise_xor(y, x));
    }
    CHECK_THROWS_AS(pairwise_xor({1, 0}, {1}), DimensionError);
    CHECK_THROWS_AS(pairwise_xor({2, 0}, {1, 0}), UsageError);
}

TEST_CASE("metric distillation loss") {
    CHECK(metric_distillation_loss(1.2, components_of({0.5, 0.5, 0.3})).item() ==
          doctest::Approx(0.1).epsilon(1e-12));
    CHECK(metric_distillation_loss(1.0, components_of({0.25, 0.75})).item() == 0.0);
    CHECK(metric_distillation_loss(0.7, components_of({0.0, 0.0, 0.0})).item() ==
          doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("group prior loss worked example") {
    // M=4, M_E=1, upsilon=0.5: threshold (1/4)^0.5 = 0.5
    // exclusive share 0.3, common shares summing 0.7
    std::vector<double> comps{0.3, 0.3, 0.2, 0.2};  // d_hat = 1
    std::vector<std::uint8_t> a_ij{1, 0, 0, 0};
    Tensor d_hat = sum_of(components_of(comps));
    Tensor l = group_prior_loss(components_of(comps), a_ij, d_hat, 0.5);
    CHECK(l.item() == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("group prior loss closed cases") {
    // satisfied constraints: exclusive 0.6 >= 0.5, common 0.4 <= 0.5
    std::vector<double> comps{0.6, 0.2, 0.125, 0.075};
    std::vector<std::uint8_t> a_ij{1, 0, 0, 0};
    Tensor d_hat = sum_of(components_of(comps));
    CHECK(group_prior_loss(components_of(comps), a_ij, d_hat, 0.5).item() == 0.0);

    // identical attribute vectors: dyadic components make the shares sum
    // to exactly 1, so both hinges close exactly
    std::vector<double> dyadic{0.25, 0.25, 0.25, 0.25};
    std::vector<std::uint8_t> zeros{0, 0, 0, 0};
    Tensor dh = sum_of(components_of(dyadic));
    CHECK(group_prior_loss(components_of(dyadic), zeros, dh, 0.5).item() == 0.0);

    CHECK_THROWS_AS(
        group_prior_loss(components_of({0.0, 0.0}), {1, 0}, Tensor::scalar(0.0), 0.5),
        DegenerateFeatureError);
}

TEST_CASE("lambda bound spot values") {
    auto [l1, b1] = lambda_bound(26, 6, 0.5);
    CHECK(l1 == doctest::Approx(0.5627).epsilon(2e-4));
    CHECK(b1 == doctest::Approx(0.04561).epsilon(2e-4));
    auto [l2, b2] = lambda_bound(4, 2, 0.5);
    CHECK(l2 == doctest::Approx(0.4407).epsilon(2e-4));
    CHECK(b2 == doctest::Approx(0.22754).epsilon(2e-4));
    CHECK_THROWS_AS(lambda_bound(4, 0, 0.5), UsageError);
    CHECK_THROWS_AS(lambda_bound(4, 4, 0.5), UsageError);
}

TEST_CASE("lambda makes lower and upper bounds coincide") {
    for (int m : {4, 8, 16, 26}) {
        for (int m_e = 1; m_e < m; ++m_e) {
            for (double u : {0.25, 0.5, 0.75}) {
                auto [lambda, bound] = lambda_bound(m, m_e, u);
                const double t = std::pow(static_cast<double>(m_e) / m, u);
                const double lower = std::exp(-lambda) * t / m_e;
                const double upper = std::exp(lambda) * (1.0 - t) / (m - m_e);
                CHECK(std::fabs(lower - upper) < 1e-12);
                CHECK(std::fabs(bound - lower) < 1e-15);
                // (M_E/M)^u > M_E/M for u in (0,1), so lambda stays positive
                CHECK(lambda > 0.0);
            }
        }
    }
    // the log argument tends to 1 as upsilon -> 1, driving lambda to 0
    CHECK(lambda_bound(8, 3, 1.0 - 1e-12).first == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("individual prior loss worked example") {
    // M=4, M_E=2, upsilon=0.5 -> bound 0.22754
    // exclusive shares [0.30, 0.15], common [0.35, 0.20]
    std::vector<double> comps{0.30, 0.35, 0.15, 0.20};  // d_hat = 1
    std::vector<std::uint8_t> a_ij{1, 0, 1, 0};
    Tensor d_hat = sum_of(components_of(comps));
    Tensor l = individual_prior_loss(components_of(comps), a_ij, d_hat, 0.5);
    CHECK(l.item() == doctest::Approx(0.2).epsilon(1e-4));
}

TEST_CASE("individual prior loss closes at and beyond the bound") {
    const double bound = lambda_bound(4, 2, 0.5).second;  // 0.22754
    // exclusive shares at/above the bound, common at/below it
    std::vector<double> comps{bound + 0.1, bound, bound, 1.0 - 3 * bound - 0.1};
    std::vector<std::uint8_t> a_ij{1, 0, 1, 0};
    Tensor d_hat = sum_of(components_of(comps));
    CHECK(individual_prior_loss(components_of(comps), a_ij, d_hat, 0.5).item() ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("prior losses are zero exactly when the constraints hold") {
    Rng rng(77);
    int zero_p1 = 0, zero_p2 = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int m = 2 + static_cast<int>(rng.uniform_int(7));
        std::vector<double> comps(static_cast<std::size_t>(m));
        for (double& c : comps) c = rng.uniform(0.001, 1.0);
        std::vector<std::uint8_t> a_ij(static_cast<std::size_t>(m));
        for (auto& b : a_ij) b = rng.bernoulli(0.4);

        const auto check = check_constraints(comps, a_ij, 0.5);
        Tensor d_hat = sum_of(components_of(comps));
        const double p1 = group_prior_loss(components_of(comps), a_ij, d_hat, 0.5).item();
        CHECK((p1 == 0.0) == check.group_holds);
        zero_p1 += p1 == 0.0;

        int m_e = 0;
        for (auto b : a_ij) m_e += b;
        if (m_e > 0 && m_e < m) {
            const double p2 = individual_prior_loss(components_of(comps), a_ij, d_hat, 0.5).item();
            CHECK((p2 == 0.0) == check.individual_holds);
            zero_p2 += p2 == 0.0;
        }
    }
    // both outcomes must actually occur for the equivalence to mean anything
    CHECK(zero_p1 > 10);
    CHECK(zero_p2 > 10);
}

TEST_CASE("total loss combination and skip rules") {
    // weighted sum: L_d=0.1, L_p1=0.05, L_p2=0.02, alpha=10, beta=50 -> 1.6
    {
        LossConfig cfg;
        LossBreakdown out;
        out.L_d = 0.1;
        out.L_p1 = 0.05;
        out.L_p2 = 0.02;
        CHECK(out.L_d + cfg.alpha * out.L_p1 + cfg.beta * out.L_p2 ==
              doctest::Approx(1.6).epsilon(1e-12));
    }

    LossConfig cfg;
    // perfect decomposition meeting all constraints
    {
        std::vector<double> comps{0.288, 0.112, 0.288, 0.112};
        std::vector<std::uint8_t> a_ij{1, 0, 1, 0};
        LossBreakdown b = total_loss(0.8, components_of(comps), a_ij, cfg);
        CHECK(b.total == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(b.lambda.has_value());
    }
    // degenerate pair: both priors skipped, L_d = d
    {
        LossBreakdown b = total_loss(0.7, components_of({0.0, 0.0}), {1, 0}, cfg);
        CHECK(b.p1_skipped);
        CHECK(b.p2_skipped);
        CHECK(b.L_d == doctest::Approx(0.7).epsilon(1e-15));
        CHECK(b.total == doctest::Approx(0.7).epsilon(1e-15));
    }
    // M_E = 0: individual prior skipped, group prior provably zero
    {
        LossBreakdown b = total_loss(0.9, components_of({0.25, 0.25, 0.25, 0.25}), {0, 0, 0, 0}, cfg);
        CHECK_FALSE(b.p1_skipped);
        CHECK(b.L_p1 == 0.0);
        CHECK(b.p2_skipped);
        CHECK_FALSE(b.lambda.has_value());
    }
    // M_E = M: individual prior skipped, group prior active
    {
        LossBreakdown b = total_loss(0.9, components_of({0.25, 0.25}), {1, 1}, cfg);
        CHECK(b.p2_skipped);
        CHECK_FALSE(b.p1_skipped);
    }
    // ablation: alpha = beta = 0 reports priors but total equals L_d
    {
        LossConfig ablated;
        ablated.alpha = 0.0;
        ablated.beta = 0.0;
        std::vector<double> comps{0.6, 0.1, 0.2, 0.3};
        LossBreakdown b = total_loss(1.0, components_of(comps), {1, 0, 1, 0}, ablated);
        CHECK(b.total == b.L_d);
        CHECK(b.total_node.item() == b.L_d);
        CHECK(b.L_p1 >= 0.0);
    }
}

TEST_CASE("losses are invariant to joint attribute permutation") {
    Rng rng(5);
    LossConfig cfg;
    std::vector<double> comps{0.4, 0.1, 0.25, 0.15, 0.1};
    std::vector<std::uint8_t> a_ij{1, 0, 1, 0, 0};
    const LossBreakdown base = total_loss(0.9, components_of(comps), a_ij, cfg);
    std::vector<std::size_t> perm(comps.size());
    std::iota(perm.begin(), perm.end(), 0u);
    for (int trial = 0; trial < 10; ++trial) {
        rng.shuffle(perm);
        std::vector<double> pc(comps.size());
        std::vector<std::uint8_t> pa(a_ij.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            pc[i] = comps[perm[i]];
            pa[i] = a_ij[perm[i]];
        }
        const LossBreakdown p = total_loss(0.9, components_of(pc), pa, cfg);
        CHECK(p.L_d == doctest::Approx(base.L_d).epsilon(1e-12));
        CHECK(p.L_p1 == doctest::Approx(base.L_p1).epsilon(1e-12));
        CHECK(p.L_p2 == doctest::Approx(base.L_p2).epsilon(1e-12));
        CHECK(p.total == doctest::Approx(base.total).epsilon(1e-12));
    }
}

TEST_CASE("total loss gradients match finite differences away from kinks") {
    Rng rng(29);
    LossConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        const int m = 4 + static_cast<int>(rng.uniform_int(4));
        std::vector<Tensor> comps;
        for (int k = 0; k < m; ++k) comps.push_back(Tensor::scalar(rng.uniform(0.05, 0.6), true));
        std::vector<std::uint8_t> a_ij(static_cast<std::size_t>(m));
        int m_e = 0;
        for (auto& b : a_ij) m_e += (b = rng.bernoulli(0.5));
        if (m_e == 0 || m_e == m) continue;
        const double d = rng.uniform(0.2, 1.5);
        auto build = [&] { return total_loss(d, comps, a_ij, cfg).total_node; };
        auto res = amd::testing::check_gradients(build, comps);
        CHECK(res.max_rel_error < 1e-4);
    }
}
