#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "amd/rng.hpp"
#include "amd/tensor.hpp"
#include "support/finite_diff.hpp"

using namespace amd;
using amd::testing::check_gradients;
using amd::testing::random_tensor;

namespace {

// A fixed random projection turns any tensor into a scalar with
// non-uniform per-element gradients.
Tensor project(const Tensor& t, const Tensor& weights) { return sum(mul(t, weights)); }

}  // namespace

TEST_CASE("backward basics: sum gives ones, repeated calls accumulate") {
    Tensor w = Tensor::from_values({4}, {1, 2, 3, 4}, true);
    Tensor loss = sum(w);
    loss.backward();
    for (double g : w.grad()) CHECK(g == 1.0);
    loss.backward();  // accumulates without reset
    for (double g : w.grad()) CHECK(g == 2.0);
    w.zero_grad();
    loss.backward();
    for (double g : w.grad()) CHECK(g == 1.0);

    CHECK_THROWS_AS(w.backward(), UsageError);  // non-scalar seed
    Tensor constant = sum(Tensor::from_values({2}, {1, 2}));
    CHECK_THROWS_AS(constant.backward(), UsageError);  // no grad required anywhere
}

TEST_CASE("pepu analytic slope at 0.5") {
    Tensor x = Tensor::scalar(0.5, true);
    Tensor y = pepu(x, 1.0 / 26.0, 0.5);
    y.backward();
    // kappa * tau * 1.5^-0.5
    CHECK(x.grad()[0] == doctest::Approx(0.015702).epsilon(1e-4));

    auto fd = check_gradients([&] { return pepu(x, 1.0 / 26.0, 0.5); }, {x});
    CHECK(fd.max_rel_error < 1e-4);
}

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(42);
    for (int trial = 0; trial < 3; ++trial) {
        Tensor input = random_tensor({2, 5, 5}, rng, -1, 1, true);
        Tensor kernel = random_tensor({3, 2, 3, 3}, rng, -1, 1, true);
        Tensor w = random_tensor({3, 3, 3}, rng);
        auto build = [&] { return project(conv2d(input, kernel, 1, 0), w); };
        auto res = check_gradients(build, {input, kernel});
        CHECK(res.max_rel_error < 1e-4);
    }
    // strided + padded variant
    Tensor input = random_tensor({2, 6, 5}, rng, -1, 1, true);
    Tensor kernel = random_tensor({4, 2, 3, 3}, rng, -1, 1, true);
    Tensor w = random_tensor({4, 3, 3}, rng);
    auto build = [&] { return project(conv2d(input, kernel, 2, 1), w); };
    CHECK(check_gradients(build, {input, kernel}).max_rel_error < 1e-4);
}

TEST_CASE("bias, mask, slice, pooling gradients") {
    Rng rng(7);
    Tensor x = random_tensor({3, 4, 3}, rng, -1, 1, true);
    Tensor b = random_tensor({3}, rng, -1, 1, true);
    Tensor w = random_tensor({3, 4, 3}, rng);
    CHECK(check_gradients([&] { return project(add_channel_bias(x, b), w); }, {x, b}).max_rel_error <
          1e-4);

    Tensor f = random_tensor({4, 3, 3}, rng, -1, 1, true);
    Tensor a = random_tensor({3, 3}, rng, 0.1, 2.0, true);
    Tensor wf = random_tensor({4, 3, 3}, rng);
    CHECK(check_gradients([&] { return project(elementwise_mask(f, a), wf); }, {f, a}).max_rel_error <
          1e-4);

    Tensor wc = random_tensor({3, 3}, rng);
    CHECK(check_gradients([&] { return project(slice_channel(f, 2), wc); }, {f}).max_rel_error < 1e-4);

    // positive inputs through gmp at several powers
    for (double p : {1.0, 2.0, 3.0}) {
        Tensor map = random_tensor({2, 3, 4}, rng, 0.05, 2.0, true);
        Tensor wp = random_tensor({2}, rng);
        CHECK(check_gradients([&] { return project(generalized_mean_pool(map, p), wp); }, {map})
                  .max_rel_error < 1e-4);
    }
}

TEST_CASE("distance gradients") {
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor u = random_tensor({6}, rng, -2, 2, true);
        Tensor v = random_tensor({6}, rng, -2, 2, true);
        CHECK(check_gradients([&] { return l2_normalize_and_distance(u, v); }, {u, v}).max_rel_error <
              1e-4);
        CHECK(check_gradients([&] { return euclidean_distance(u, v); }, {u, v}).max_rel_error < 1e-4);
    }
}

TEST_CASE("elementwise op gradients") {
    Rng rng(17);
    Tensor a = random_tensor({5}, rng, 0.2, 2.0, true);
    Tensor b = random_tensor({5}, rng, 0.2, 2.0, true);
    Tensor w = random_tensor({5}, rng);
    CHECK(check_gradients([&] { return project(add(a, b), w); }, {a, b}).max_rel_error < 1e-4);
    CHECK(check_gradients([&] { return project(sub(a, b), w); }, {a, b}).max_rel_error < 1e-4);
    CHECK(check_gradients([&] { return project(mul(a, b), w); }, {a, b}).max_rel_error < 1e-4);
    CHECK(check_gradients([&] { return project(div(a, b), w); }, {a, b}).max_rel_error < 1e-4);
    CHECK(check_gradients([&] { return project(scale(a, -1.7), w); }, {a}).max_rel_error < 1e-4);
    CHECK(check_gradients([&] { return project(relu(sub(a, b)), w); }, {a, b}).max_rel_error < 1e-4);
    CHECK(check_gradients([&] { return project(abs_elem(sub(a, b)), w); }, {a, b}).max_rel_error <
          1e-4);
    CHECK(check_gradients([&] { return sum_of({sum(a), sum(b), sum(mul(a, b))}); }, {a, b})
              .max_rel_error < 1e-4);
}

TEST_CASE("composite conv -> pepu -> pool -> distance graph") {
    Rng rng(23);
    Tensor img_i = random_tensor({2, 6, 4}, rng, 0.0, 1.0);
    Tensor img_j = random_tensor({2, 6, 4}, rng, 0.0, 1.0);
    Tensor kernel = random_tensor({4, 2, 3, 3}, rng, -0.5, 0.5, true);
    Tensor head = random_tensor({3, 4, 1, 1}, rng, -0.5, 0.5, true);

    auto build = [&] {
        auto branch = [&](const Tensor& img) {
            Tensor feat = conv2d(img, kernel, 1, 1);
            Tensor att = pepu(conv2d(feat, head, 1, 0), 0.25, 0.5);
            Tensor masked = elementwise_mask(feat, slice_channel(att, 1));
            return generalized_mean_pool(relu(masked), 3.0);
        };
        return euclidean_distance(branch(img_i), branch(img_j));
    };
    auto res = check_gradients(build, {kernel, head});
    CHECK(res.checked > 100);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("constants are pruned from the graph") {
    Tensor frozen = Tensor::from_values({3}, {1, 2, 3}, false);
    Tensor trainable = Tensor::from_values({3}, {4, 5, 6}, true);
    Tensor loss = sum(mul(frozen, trainable));
    loss.backward();
    CHECK_FALSE(frozen.has_grad());
    CHECK(trainable.grad() == std::vector<double>{1, 2, 3});
}
