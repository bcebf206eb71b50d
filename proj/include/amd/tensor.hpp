#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "amd/errors.hpp"

namespace amd {

namespace detail {

struct Node {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated lazily, same length as values
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Propagates this node's grad into its parents' grads. Only set on
    // nodes that require grad and have parents.
    std::function<void(Node&)> backward_fn;

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
    bool is_leaf() const { return parents.empty(); }
    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

}  // namespace detail

/// Dense double-precision tensor with reverse-mode autodiff. A Tensor is a
/// cheap handle onto a graph node; copying shares the node. The forward
/// graph is recorded dynamically: an op output keeps its parents only when
/// at least one parent requires grad, so constant subgraphs are pruned as
/// they are built.
///
/// backward() resets intermediate grads and accumulates into leaf grads,
/// so repeated calls without zero_grad() sum leaf gradients.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const;
    int dim(int i) const;
    std::int64_t size() const;
    bool is_scalar() const;

    const std::vector<double>& values() const;
    /// Direct value access for leaf tensors (parameter init and optimizer
    /// updates). Mutating a non-leaf would desynchronize the graph.
    std::vector<double>& mutable_values();
    double item() const;
    double at(std::int64_t i) const;

    bool requires_grad() const;
    void set_requires_grad(bool v);  // leaf only
    bool has_grad() const;
    const std::vector<double>& grad() const;
    void zero_grad();

    /// True when every value is finite (no NaN/Inf).
    bool all_finite() const;

    /// Reverse-mode sweep from a scalar seed. Throws UsageError on a
    /// non-scalar seed and InternalError if the graph has a cycle.
    void backward();

    bool same_node(const Tensor& other) const { return node_ == other.node_; }

    // Internal: graph node access for ops.
    const std::shared_ptr<detail::Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

std::int64_t shape_size(const std::vector<int>& shape);

// ---- elementwise / reduction ops -----------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor abs_elem(const Tensor& a);  // subgradient 0 at 0
Tensor sum(const Tensor& a);       // all elements -> scalar
/// Elementwise sum of n same-shape tensors as a single graph node.
Tensor sum_of(const std::vector<Tensor>& xs);

// ---- pipeline ops ---------------------------------------------------------

/// 2-D cross-correlation of a C_in x H x W input with a C_out x C_in x k x k
/// kernel. Output C_out x H' x W' with H' = (H + 2*padding - k)/stride + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);

/// Adds bias[c] to every spatial position of channel c.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);

/// Positive exponential power unit: kappa*(x+1)^tau for x > 0, kappa*e^x
/// otherwise. Output is strictly positive. kappa and tau must be in (0,1).
Tensor pepu(const Tensor& x, double kappa, double tau);

/// Channel-wise generalized mean pooling of a C x h x w map:
/// out[c] = (mean over spatial of v^p)^(1/p), p >= 1.
Tensor generalized_mean_pool(const Tensor& map, double p);

/// Multiplies every channel of F (C x h x w) pointwise by A (h x w).
Tensor elementwise_mask(const Tensor& F, const Tensor& A);

/// Extracts channel c of a C x h x w tensor as an h x w tensor.
Tensor slice_channel(const Tensor& x, int c);

/// || u/||u|| - v/||v|| ||_2, in [0, 2]. Throws DegenerateFeatureError on a
/// zero-norm input.
Tensor l2_normalize_and_distance(const Tensor& u, const Tensor& v);

/// Plain || u - v ||_2.
Tensor euclidean_distance(const Tensor& u, const Tensor& v);

}  // namespace amd
