#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "amd/optim.hpp"
#include "amd/rng.hpp"

using namespace amd;

TEST_CASE("zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::from_values({3}, {1.0, -2.0, 0.5}, true);
    AdamState s = AdamState::for_param(p);
    adam_step(p, {0, 0, 0}, s, 0.1);
    CHECK(p.values() == std::vector<double>{1.0, -2.0, 0.5});
    CHECK(s.step == 1);
}

TEST_CASE("bias-corrected first step moves by about lr") {
    Tensor p = Tensor::scalar(1.0, true);
    AdamState s = AdamState::for_param(p);
    adam_step(p, {1.0}, s, 0.1);
    // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
    CHECK(p.item() == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("identical parameters with identical gradients stay identical") {
    Tensor a = Tensor::scalar(0.3, true);
    Tensor b = Tensor::scalar(0.3, true);
    AdamState sa = AdamState::for_param(a), sb = AdamState::for_param(b);
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const double g = rng.uniform(-1, 1);
        adam_step(a, {g}, sa, 0.01);
        adam_step(b, {g}, sb, 0.01);
        CHECK(a.item() == b.item());
    }
}

TEST_CASE("shape mismatch and bad lr are rejected") {
    Tensor p = Tensor::from_values({2}, {1, 2}, true);
    AdamState s = AdamState::for_param(p);
    CHECK_THROWS_AS(adam_step(p, {1.0}, s, 0.1), DimensionError);
    CHECK_THROWS_AS(adam_step(p, {1.0, 1.0}, s, 0.0), ConfigError);
}

TEST_CASE("optimizer bundle steps from accumulated grads and clears them") {
    Tensor p = Tensor::from_values({2}, {1.0, 1.0}, true);
    AdamOptimizer opt({p});
    Tensor loss = sum(mul(p, p));
    loss.backward();
    opt.step(0.1);
    CHECK(p.values()[0] < 1.0);
    CHECK_FALSE(p.grad()[0] != 0.0);  // zeroed after step
}
