#include "amd/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace amd {

using detail::Node;

std::int64_t shape_size(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimension must be positive, got " + std::to_string(d));
        n *= d;
    }
    return n;
}

static std::shared_ptr<Node> make_node(std::vector<int> shape, std::vector<double> values) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    return n;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    auto n = make_node(shape, std::vector<double>(static_cast<std::size_t>(shape_size(shape)), value));
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    if (shape_size(shape) != static_cast<std::int64_t>(values.size()))
        throw DimensionError("from_values: shape does not match value count");
    auto n = make_node(std::move(shape), std::move(values));
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_values({1}, {value}, requires_grad);
}

const std::vector<int>& Tensor::shape() const { return node_->shape; }

int Tensor::dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }

std::int64_t Tensor::size() const { return node_->size(); }

bool Tensor::is_scalar() const { return node_ && node_->size() == 1; }

const std::vector<double>& Tensor::values() const { return node_->values; }

std::vector<double>& Tensor::mutable_values() {
    if (!node_->is_leaf()) throw UsageError("mutable_values: only leaf tensors may be mutated");
    return node_->values;
}

double Tensor::item() const {
    if (!is_scalar()) throw UsageError("item: tensor is not scalar");
    return node_->values[0];
}

double Tensor::at(std::int64_t i) const { return node_->values.at(static_cast<std::size_t>(i)); }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool v) {
    if (!node_->is_leaf()) throw UsageError("set_requires_grad: only valid on leaf tensors");
    node_->requires_grad = v;
    if (!v) node_->grad.clear();
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->values.size(); }

const std::vector<double>& Tensor::grad() const {
    if (!has_grad()) throw StateError("grad: no gradient present; run backward first");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) node_->grad.assign(node_->values.size(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : node_->values)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::backward() {
    if (!defined()) throw UsageError("backward: undefined tensor");
    if (!is_scalar()) throw UsageError("backward: seed must be scalar");
    if (!node_->requires_grad) throw UsageError("backward: seed does not require grad");

    // Iterative post-order DFS. on_stack detects cycles (a malformed graph
    // would otherwise recurse forever).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::unordered_set<Node*> on_stack;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    on_stack.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx].get();
            ++idx;
            if (!p->requires_grad) continue;
            if (on_stack.count(p)) throw InternalError("backward: cycle in computation graph");
            if (visited.count(p)) continue;
            visited.insert(p);
            on_stack.insert(p);
            stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            on_stack.erase(n);
            stack.pop_back();
        }
    }

    // Interior grads are transient per sweep; leaf grads accumulate.
    for (Node* n : order) {
        if (n->is_leaf())
            n->ensure_grad();
        else
            n->grad.assign(n->values.size(), 0.0);
    }
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

// ---- op plumbing -----------------------------------------------------------

namespace {

Tensor make_op_node(std::vector<int> shape, std::vector<double> values,
                    std::vector<std::shared_ptr<Node>> parents,
                    std::function<void(Node&)> backward_fn) {
    auto n = make_node(std::move(shape), std::move(values));
    bool needs = false;
    for (const auto& p : parents)
        if (p->requires_grad) needs = true;
    if (needs) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
}

void check_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw UsageError(std::string(op) + ": undefined tensor argument");
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw DimensionError(std::string(op) + ": shape mismatch");
}

}  // namespace

// ---- elementwise / reduction ops -------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_defined(a, "add");
    check_defined(b, "add");
    check_same_shape(a, b, "add");
    std::vector<double> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.at(static_cast<std::int64_t>(i));
    auto pa = a.node(), pb = b.node();
    return make_op_node(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& n) {
        if (pa->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
        if (pb->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] += n.grad[i];
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_defined(a, "sub");
    check_defined(b, "sub");
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.at(static_cast<std::int64_t>(i));
    auto pa = a.node(), pb = b.node();
    return make_op_node(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& n) {
        if (pa->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
        if (pb->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] -= n.grad[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_defined(a, "mul");
    check_defined(b, "mul");
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.at(static_cast<std::int64_t>(i));
    auto pa = a.node(), pb = b.node();
    return make_op_node(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& n) {
        if (pa->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] * pb->values[i];
        if (pb->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] += n.grad[i] * pa->values[i];
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    check_defined(a, "div");
    check_defined(b, "div");
    check_same_shape(a, b, "div");
    std::vector<double> out(a.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= b.at(static_cast<std::int64_t>(i));
    auto pa = a.node(), pb = b.node();
    return make_op_node(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const double inv = 1.0 / pb->values[i];
            if (pa->requires_grad) pa->grad[i] += n.grad[i] * inv;
            if (pb->requires_grad) pb->grad[i] -= n.grad[i] * pa->values[i] * inv * inv;
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    check_defined(a, "scale");
    std::vector<double> out(a.values());
    for (double& v : out) v *= c;
    auto pa = a.node();
    return make_op_node(a.shape(), std::move(out), {pa}, [pa, c](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] * c;
    });
}

Tensor relu(const Tensor& a) {
    check_defined(a, "relu");
    std::vector<double> out(a.values());
    for (double& v : out)
        if (v < 0.0) v = 0.0;
    auto pa = a.node();
    return make_op_node(a.shape(), std::move(out), {pa}, [pa](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (pa->values[i] > 0.0) pa->grad[i] += n.grad[i];
    });
}

Tensor abs_elem(const Tensor& a) {
    check_defined(a, "abs_elem");
    std::vector<double> out(a.values());
    for (double& v : out) v = std::fabs(v);
    auto pa = a.node();
    return make_op_node(a.shape(), std::move(out), {pa}, [pa](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const double x = pa->values[i];
            if (x > 0.0)
                pa->grad[i] += n.grad[i];
            else if (x < 0.0)
                pa->grad[i] -= n.grad[i];
            // subgradient 0 at the kink
        }
    });
}

Tensor sum(const Tensor& a) {
    check_defined(a, "sum");
    double s = 0.0;
    for (double v : a.values()) s += v;
    auto pa = a.node();
    return make_op_node({1}, {s}, {pa}, [pa](Node& n) {
        for (std::size_t i = 0; i < pa->values.size(); ++i) pa->grad[i] += n.grad[0];
    });
}

Tensor sum_of(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw UsageError("sum_of: empty input");
    for (const Tensor& t : xs) {
        check_defined(t, "sum_of");
        check_same_shape(t, xs.front(), "sum_of");
    }
    std::vector<double> out(xs.front().values());
    for (std::size_t k = 1; k < xs.size(); ++k) {
        const auto& v = xs[k].values();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    }
    std::vector<std::shared_ptr<Node>> parents;
    parents.reserve(xs.size());
    for (const Tensor& t : xs) parents.push_back(t.node());
    auto ps = parents;
    return make_op_node(xs.front().shape(), std::move(out), std::move(parents), [ps](Node& n) {
        for (const auto& p : ps) {
            if (!p->requires_grad) continue;
            for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i];
        }
    });
}

// ---- conv2d ----------------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
    check_defined(input, "conv2d");
    check_defined(kernel, "conv2d");
    if (input.shape().size() != 3) throw DimensionError("conv2d: input must be C x H x W");
    if (kernel.shape().size() != 4) throw DimensionError("conv2d: kernel must be C_out x C_in x k x k");
    if (stride <= 0) throw ConfigError("conv2d: stride must be positive");
    if (padding < 0) throw ConfigError("conv2d: padding must be non-negative");
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = kernel.dim(0), kc = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
    if (kc != c_in) throw DimensionError("conv2d: kernel C_in does not match input channels");
    if (kh != kw) throw DimensionError("conv2d: only square kernels supported");
    if (kh > h + 2 * padding || kw > w + 2 * padding)
        throw DimensionError("conv2d: kernel larger than padded input");
    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (w + 2 * padding - kw) / stride + 1;

    std::vector<double> out(static_cast<std::size_t>(c_out) * oh * ow, 0.0);
    const double* in = input.values().data();
    const double* ker = kernel.values().data();
    for (int oc = 0; oc < c_out; ++oc) {
        for (int ic = 0; ic < c_in; ++ic) {
            const double* in_c = in + static_cast<std::size_t>(ic) * h * w;
            const double* ker_c = ker + (static_cast<std::size_t>(oc) * c_in + ic) * kh * kw;
            double* out_c = out.data() + static_cast<std::size_t>(oc) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                const int iy0 = oy * stride - padding;
                for (int ox = 0; ox < ow; ++ox) {
                    const int ix0 = ox * stride - padding;
                    double acc = 0.0;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = iy0 + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ix0 + kx;
                            if (ix < 0 || ix >= w) continue;
                            acc += in_c[iy * w + ix] * ker_c[ky * kw + kx];
                        }
                    }
                    out_c[oy * ow + ox] += acc;
                }
            }
        }
    }

    auto pin = input.node();
    auto pker = kernel.node();
    auto backward = [pin, pker, c_in, h, w, c_out, kh, kw, oh, ow, stride, padding](Node& n) {
        const double* g = n.grad.data();
        const double* in = pin->values.data();
        const double* ker = pker->values.data();
        for (int oc = 0; oc < c_out; ++oc) {
            const double* g_c = g + static_cast<std::size_t>(oc) * oh * ow;
            for (int ic = 0; ic < c_in; ++ic) {
                const double* in_c = in + static_cast<std::size_t>(ic) * h * w;
                const double* ker_c = ker + (static_cast<std::size_t>(oc) * c_in + ic) * kh * kw;
                double* gin_c = pin->requires_grad ? pin->grad.data() + static_cast<std::size_t>(ic) * h * w : nullptr;
                double* gker_c = pker->requires_grad
                                     ? pker->grad.data() + (static_cast<std::size_t>(oc) * c_in + ic) * kh * kw
                                     : nullptr;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy0 = oy * stride - padding;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix0 = ox * stride - padding;
                        const double go = g_c[oy * ow + ox];
                        if (go == 0.0) continue;
                        for (int ky = 0; ky < kh; ++ky) {
                            const int iy = iy0 + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ix = ix0 + kx;
                                if (ix < 0 || ix >= w) continue;
                                if (gin_c) gin_c[iy * w + ix] += go * ker_c[ky * kw + kx];
                                if (gker_c) gker_c[ky * kw + kx] += go * in_c[iy * w + ix];
                            }
                        }
                    }
                }
            }
        }
    };
    return make_op_node({c_out, oh, ow}, std::move(out), {pin, pker}, std::move(backward));
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
    check_defined(x, "add_channel_bias");
    check_defined(bias, "add_channel_bias");
    if (x.shape().size() != 3) throw DimensionError("add_channel_bias: input must be C x H x W");
    if (bias.shape().size() != 1 || bias.dim(0) != x.dim(0))
        throw DimensionError("add_channel_bias: bias length must equal channel count");
    const int c = x.dim(0);
    const std::int64_t hw = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    std::vector<double> out(x.values());
    for (int ch = 0; ch < c; ++ch) {
        const double b = bias.at(ch);
        for (std::int64_t i = 0; i < hw; ++i) out[static_cast<std::size_t>(ch * hw + i)] += b;
    }
    auto px = x.node();
    auto pb = bias.node();
    return make_op_node(x.shape(), std::move(out), {px, pb}, [px, pb, c, hw](Node& n) {
        if (px->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) px->grad[i] += n.grad[i];
        if (pb->requires_grad)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::int64_t i = 0; i < hw; ++i) acc += n.grad[static_cast<std::size_t>(ch * hw + i)];
                pb->grad[static_cast<std::size_t>(ch)] += acc;
            }
    });
}

// ---- PePU ------------------------------------------------------------------

Tensor pepu(const Tensor& x, double kappa, double tau) {
    check_defined(x, "pepu");
    if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("pepu: kappa must be in (0,1)");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("pepu: tau must be in (0,1)");
    std::vector<double> out(x.values());
    for (double& v : out) v = v > 0.0 ? kappa * std::pow(v + 1.0, tau) : kappa * std::exp(v);
    auto px = x.node();
    return make_op_node(x.shape(), std::move(out), {px}, [px, kappa, tau](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const double v = px->values[i];
            const double slope =
                v > 0.0 ? kappa * tau * std::pow(v + 1.0, tau - 1.0) : kappa * std::exp(v);
            px->grad[i] += n.grad[i] * slope;
        }
    });
}

// ---- generalized mean pooling ------------------------------------------------

Tensor generalized_mean_pool(const Tensor& map, double p) {
    check_defined(map, "generalized_mean_pool");
    if (map.shape().size() != 3) throw DimensionError("generalized_mean_pool: input must be C x h x w");
    if (p < 1.0) throw ConfigError("generalized_mean_pool: p must be >= 1");
    const int c = map.dim(0);
    const std::int64_t hw = static_cast<std::int64_t>(map.dim(1)) * map.dim(2);
    const double inv_hw = 1.0 / static_cast<double>(hw);
    std::vector<double> out(static_cast<std::size_t>(c), 0.0);
    const double* v = map.values().data();
    for (int ch = 0; ch < c; ++ch) {
        double m = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) m += std::pow(v[ch * hw + i], p);
        out[static_cast<std::size_t>(ch)] = std::pow(m * inv_hw, 1.0 / p);
    }
    auto pm = map.node();
    return make_op_node({c}, std::move(out), {pm}, [pm, c, hw, inv_hw, p](Node& n) {
        // d out_c / d v_i = out_c^(1-p) * v_i^(p-1) / (h*w); an all-zero
        // channel has out_c = 0 and gets subgradient 0.
        for (int ch = 0; ch < c; ++ch) {
            const double g = n.grad[static_cast<std::size_t>(ch)];
            if (g == 0.0) continue;
            const double f = n.values[static_cast<std::size_t>(ch)];
            if (f == 0.0) continue;
            const double fpow = std::pow(f, 1.0 - p);
            for (std::int64_t i = 0; i < hw; ++i) {
                const double vi = pm->values[static_cast<std::size_t>(ch * hw + i)];
                pm->grad[static_cast<std::size_t>(ch * hw + i)] +=
                    g * fpow * std::pow(vi, p - 1.0) * inv_hw;
            }
        }
    });
}

// ---- masking ----------------------------------------------------------------

Tensor elementwise_mask(const Tensor& F, const Tensor& A) {
    check_defined(F, "elementwise_mask");
    check_defined(A, "elementwise_mask");
    if (F.shape().size() != 3) throw DimensionError("elementwise_mask: F must be C x h x w");
    if (A.shape().size() != 2) throw DimensionError("elementwise_mask: A must be h x w");
    if (F.dim(1) != A.dim(0) || F.dim(2) != A.dim(1))
        throw DimensionError("elementwise_mask: spatial dims of F and A disagree");
    const int c = F.dim(0);
    const std::int64_t hw = static_cast<std::int64_t>(F.dim(1)) * F.dim(2);
    std::vector<double> out(F.values());
    const double* a = A.values().data();
    for (int ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < hw; ++i) out[static_cast<std::size_t>(ch * hw + i)] *= a[i];
    auto pf = F.node();
    auto pa = A.node();
    return make_op_node(F.shape(), std::move(out), {pf, pa}, [pf, pa, c, hw](Node& n) {
        for (int ch = 0; ch < c; ++ch)
            for (std::int64_t i = 0; i < hw; ++i) {
                const std::size_t j = static_cast<std::size_t>(ch * hw + i);
                if (pf->requires_grad) pf->grad[j] += n.grad[j] * pa->values[static_cast<std::size_t>(i)];
                if (pa->requires_grad)
                    pa->grad[static_cast<std::size_t>(i)] += n.grad[j] * pf->values[j];
            }
    });
}

Tensor slice_channel(const Tensor& x, int c) {
    check_defined(x, "slice_channel");
    if (x.shape().size() != 3) throw DimensionError("slice_channel: input must be C x h x w");
    if (c < 0 || c >= x.dim(0)) throw DimensionError("slice_channel: channel out of range");
    const int h = x.dim(1), w = x.dim(2);
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    std::vector<double> out(x.values().begin() + c * hw, x.values().begin() + (c + 1) * hw);
    auto px = x.node();
    return make_op_node({h, w}, std::move(out), {px}, [px, c, hw](Node& n) {
        for (std::int64_t i = 0; i < hw; ++i)
            px->grad[static_cast<std::size_t>(c * hw + i)] += n.grad[static_cast<std::size_t>(i)];
    });
}

// ---- distances ----------------------------------------------------------------

Tensor l2_normalize_and_distance(const Tensor& u, const Tensor& v) {
    check_defined(u, "l2_normalize_and_distance");
    check_defined(v, "l2_normalize_and_distance");
    if (u.shape().size() != 1 || v.shape().size() != 1 || u.dim(0) != v.dim(0))
        throw DimensionError("l2_normalize_and_distance: inputs must be vectors of equal length");
    const std::size_t n = u.values().size();
    double nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        nu += u.values()[i] * u.values()[i];
        nv += v.values()[i] * v.values()[i];
    }
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    if (nu == 0.0 || nv == 0.0)
        throw DegenerateFeatureError("l2_normalize_and_distance: zero-norm input");
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = u.values()[i] / nu - v.values()[i] / nv;
        d2 += e * e;
    }
    const double d = std::sqrt(d2);
    auto pu = u.node(), pv = v.node();
    return make_op_node({1}, {d}, {pu, pv}, [pu, pv, nu, nv, d, n](Node& node) {
        if (d == 0.0) return;  // subgradient 0 at coincident directions
        const double g = node.grad[0];
        // a = u/|u|, b = v/|v|, e = a - b:
        //   dd/du = (e - (a.e) a) / (|u| d),  dd/dv = (-e + (b.e) b) / (|v| d)
        double ae = 0.0, be = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = pu->values[i] / nu;
            const double b = pv->values[i] / nv;
            const double e = a - b;
            ae += a * e;
            be += b * e;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double a = pu->values[i] / nu;
            const double b = pv->values[i] / nv;
            const double e = a - b;
            if (pu->requires_grad) pu->grad[i] += g * (e - ae * a) / (nu * d);
            if (pv->requires_grad) pv->grad[i] += g * (-e + be * b) / (nv * d);
        }
    });
}

Tensor euclidean_distance(const Tensor& u, const Tensor& v) {
    check_defined(u, "euclidean_distance");
    check_defined(v, "euclidean_distance");
    if (u.shape().size() != 1 || v.shape().size() != 1 || u.dim(0) != v.dim(0))
        throw DimensionError("euclidean_distance: inputs must be vectors of equal length");
    const std::size_t n = u.values().size();
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = u.values()[i] - v.values()[i];
        d2 += e * e;
    }
    const double d = std::sqrt(d2);
    auto pu = u.node(), pv = v.node();
    return make_op_node({1}, {d}, {pu, pv}, [pu, pv, d, n](Node& node) {
        if (d == 0.0) return;
        const double g = node.grad[0];
        for (std::size_t i = 0; i < n; ++i) {
            const double e = (pu->values[i] - pv->values[i]) / d;
            if (pu->requires_grad) pu->grad[i] += g * e;
            if (pv->requires_grad) pv->grad[i] -= g * e;
        }
    });
}

}  // namespace amd
