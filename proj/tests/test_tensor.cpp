#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "amd/rng.hpp"
#include "amd/tensor.hpp"

using namespace amd;

TEST_CASE("construction and invariants") {
    Tensor t = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.size() == 6);
    CHECK(t.shape() == std::vector<int>{2, 3});
    CHECK(t.all_finite());
    CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor::zeros({0, 3}), DimensionError);

    Tensor bad = Tensor::from_values({2}, {1.0, std::nan("")});
    CHECK_FALSE(bad.all_finite());
    Tensor inf = Tensor::from_values({2}, {1.0, INFINITY});
    CHECK_FALSE(inf.all_finite());
}

TEST_CASE("scalar access and leaf mutation rules") {
    Tensor s = Tensor::scalar(2.5);
    CHECK(s.item() == 2.5);
    CHECK_THROWS_AS(Tensor::from_values({2}, {1, 2}).item(), UsageError);

    Tensor a = Tensor::scalar(1.0, true);
    Tensor b = add(a, Tensor::scalar(1.0));
    CHECK_THROWS_AS(b.mutable_values(), UsageError);          // non-leaf
    CHECK_THROWS_AS(b.set_requires_grad(false), UsageError);  // non-leaf
}

TEST_CASE("conv2d shapes and errors") {
    Tensor ones = Tensor::full({1, 3, 3}, 1.0);
    Tensor k2 = Tensor::full({1, 1, 1, 1}, 2.0);
    Tensor out = conv2d(ones, k2, 1, 0);
    CHECK(out.shape() == std::vector<int>{1, 3, 3});
    for (double v : out.values()) CHECK(v == 2.0);  // scaling identity

    Tensor in22 = Tensor::from_values({1, 2, 2}, {1, 2, 3, 4});
    Tensor ksum = Tensor::full({1, 1, 2, 2}, 1.0);
    CHECK(conv2d(in22, ksum, 1, 0).item() == 10.0);  // sum case

    // output size arithmetic
    Tensor in = Tensor::zeros({2, 5, 4});
    Tensor k = Tensor::zeros({3, 2, 3, 3});
    CHECK(conv2d(in, k, 2, 1).shape() == std::vector<int>{3, 3, 2});

    Tensor mismatched = Tensor::zeros({4, 1, 3, 3});
    CHECK_THROWS_AS(conv2d(in, mismatched, 1, 0), DimensionError);
    Tensor huge = Tensor::zeros({1, 2, 9, 9});
    CHECK_THROWS_AS(conv2d(in, huge, 1, 0), DimensionError);  // kernel > padded input
    CHECK_THROWS_AS(conv2d(in, k, 0, 0), ConfigError);
    CHECK_THROWS_AS(conv2d(in, k, 1, -1), ConfigError);
}

TEST_CASE("pepu branches and parameter checks") {
    const double kappa = 1.0 / 26.0, tau = 0.5;
    Tensor x = Tensor::from_values({3}, {0.0, 3.0, -std::log(2.0)});
    Tensor y = pepu(x, kappa, tau);
    CHECK(y.at(0) == doctest::Approx(0.038462).epsilon(1e-4));   // continuity point
    CHECK(y.at(1) == doctest::Approx(0.076923).epsilon(1e-4));   // kappa * sqrt(4)
    CHECK(y.at(2) == doctest::Approx(0.019231).epsilon(1e-4));   // kappa / 2
    for (double v : y.values()) CHECK(v > 0.0);

    CHECK_THROWS_AS(pepu(x, 0.0, 0.5), ConfigError);
    CHECK_THROWS_AS(pepu(x, 1.5, 0.5), ConfigError);
    CHECK_THROWS_AS(pepu(x, 0.1, 0.0), ConfigError);
    CHECK_THROWS_AS(pepu(x, 0.1, 1.0), ConfigError);
}

TEST_CASE("pepu is continuous at 0, positive and strictly increasing") {
    const double kappa = 0.125, tau = 0.5;
    Tensor left = pepu(Tensor::scalar(-1e-12), kappa, tau);
    Tensor right = pepu(Tensor::scalar(1e-12), kappa, tau);
    CHECK(left.item() == doctest::Approx(kappa).epsilon(1e-9));
    CHECK(right.item() == doctest::Approx(kappa).epsilon(1e-9));

    Rng rng(5);
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double x = -6.0 + i * 0.06;
        const double v = pepu(Tensor::scalar(x), kappa, tau).item();
        CHECK(v > 0.0);
        if (i > 0) CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("generalized mean pooling values") {
    Tensor map = Tensor::from_values({1, 2, 2}, {1, 2, 3, 4});
    CHECK(generalized_mean_pool(map, 1.0).item() == 2.5);  // exact arithmetic mean
    CHECK(generalized_mean_pool(map, 3.0).item() == doctest::Approx(std::cbrt(25.0)).epsilon(1e-12));

    Tensor constant = Tensor::full({2, 3, 3}, 0.7);
    for (double p : {1.0, 2.0, 3.0, 7.5}) {
        Tensor pooled = generalized_mean_pool(constant, p);
        CHECK(pooled.at(0) == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(pooled.at(1) == doctest::Approx(0.7).epsilon(1e-12));
    }
    CHECK_THROWS_AS(generalized_mean_pool(map, 0.5), ConfigError);
}

TEST_CASE("generalized mean is non-decreasing in p") {
    Rng rng(11);
    std::vector<double> vals(12);
    for (double& v : vals) v = rng.uniform(0.0, 2.0);
    Tensor map = Tensor::from_values({1, 3, 4}, vals);
    double prev = -1.0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 5.0, 9.0}) {
        const double v = generalized_mean_pool(map, p).item();
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("elementwise mask") {
    Tensor f = Tensor::from_values({1, 2, 2}, {1, 2, 3, 4});
    Tensor unit = Tensor::full({2, 2}, 1.0);
    CHECK(elementwise_mask(f, unit).values() == f.values());  // identity mask
    Tensor zero = Tensor::zeros({2, 2});
    for (double v : elementwise_mask(f, zero).values()) CHECK(v == 0.0);

    Tensor a = Tensor::from_values({2, 2}, {0.5, 1.0, 1.0, 0.5});
    CHECK(elementwise_mask(f, a).values() == std::vector<double>{0.5, 2.0, 3.0, 2.0});
    CHECK_THROWS_AS(elementwise_mask(f, Tensor::zeros({3, 2})), DimensionError);
}

TEST_CASE("slice_channel") {
    Tensor x = Tensor::from_values({2, 1, 2}, {1, 2, 3, 4});
    CHECK(slice_channel(x, 1).values() == std::vector<double>{3, 4});
    CHECK_THROWS_AS(slice_channel(x, 2), DimensionError);
}

TEST_CASE("normalized distance: range, scale invariance, errors") {
    Tensor u = Tensor::from_values({2}, {1, 0});
    Tensor v = Tensor::from_values({2}, {0, 1});
    CHECK(l2_normalize_and_distance(u, u).item() == 0.0);
    CHECK(l2_normalize_and_distance(u, v).item() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    Tensor u3 = Tensor::from_values({2}, {3, 0});
    Tensor v4 = Tensor::from_values({2}, {0, 4});
    CHECK(l2_normalize_and_distance(u3, v4).item() ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> a(5), b(5);
        for (double& x : a) x = rng.uniform(-2, 2);
        for (double& x : b) x = rng.uniform(-2, 2);
        Tensor ta = Tensor::from_values({5}, a), tb = Tensor::from_values({5}, b);
        const double d = l2_normalize_and_distance(ta, tb).item();
        CHECK(d >= 0.0);
        CHECK(d <= 2.0 + 1e-12);
        // invariance under positive rescaling
        std::vector<double> a2 = a;
        for (double& x : a2) x *= 37.5;
        const double d2 = l2_normalize_and_distance(Tensor::from_values({5}, a2), tb).item();
        CHECK(d2 == doctest::Approx(d).epsilon(1e-12));
    }
    CHECK_THROWS_AS(l2_normalize_and_distance(Tensor::zeros({3}), v), DegenerateFeatureError);
    CHECK_THROWS_AS(l2_normalize_and_distance(u, Tensor::zeros({2})), DegenerateFeatureError);
}

TEST_CASE("euclidean distance") {
    Tensor u = Tensor::from_values({2}, {1, 2});
    Tensor v = Tensor::from_values({2}, {4, 6});
    CHECK(euclidean_distance(u, v).item() == 5.0);
    CHECK(euclidean_distance(u, u).item() == 0.0);
    CHECK(euclidean_distance(Tensor::scalar(0.0), Tensor::scalar(3.0)).item() == 3.0);
    CHECK_THROWS_AS(euclidean_distance(u, Tensor::zeros({3})), DimensionError);
}

TEST_CASE("determinism: identical inputs give bit-identical outputs") {
    Rng rng_a(99), rng_b(99);
    auto run = [](Rng& rng) {
        std::vector<double> in(2 * 6 * 5), ker(3 * 2 * 3 * 3);
        for (double& v : in) v = rng.uniform(-1, 1);
        for (double& v : ker) v = rng.uniform(-1, 1);
        Tensor x = Tensor::from_values({2, 6, 5}, in);
        Tensor k = Tensor::from_values({3, 2, 3, 3}, ker);
        return generalized_mean_pool(pepu(conv2d(x, k, 1, 1), 0.125, 0.5), 3.0).values();
    };
    CHECK(run(rng_a) == run(rng_b));
}
