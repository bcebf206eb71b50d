#include "amd/interpreter.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "amd/image_io.hpp"
#include "amd/rng.hpp"

namespace amd {

namespace fs = std::filesystem;

void InterpreterConfig::validate(const EmbedderConfig& target) const {
    if (n_shared < 1 || n_shared > target.stage_count())
        throw ConfigError("interpreter: n_shared must be in 1.." + std::to_string(target.stage_count()));
    if (attribute_count < 2) throw ConfigError("interpreter: attribute count must be >= 2");
    if (target.feature_channels() % 8 != 0)
        throw ConfigError("interpreter: target feature channels must be divisible by 8");
    const double k = resolved_kappa();
    if (!(k > 0.0 && k < 1.0)) throw ConfigError("interpreter: kappa must resolve into (0,1)");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("interpreter: tau must be in (0,1)");
}

Interpreter Interpreter::attach(const Embedder& target, const InterpreterConfig& config,
                                std::uint64_t seed) {
    if (!target.frozen()) throw StateError("attach: target model must be frozen");
    config.validate(target.config());

    Interpreter interp;
    interp.target_ = target;
    interp.config_ = config;

    const EmbedderConfig& tc = target.config();
    Rng rng(derive_seed(seed, 20));
    auto init_kernel = [&rng](int c_out, int c_in, int k) {
        const double bound = std::sqrt(6.0 / (static_cast<double>(c_in) * k * k));
        std::vector<double> vals(static_cast<std::size_t>(c_out) * c_in * k * k);
        for (double& v : vals) v = rng.uniform(-bound, bound);
        return Tensor::from_values({c_out, c_in, k, k}, std::move(vals), /*requires_grad=*/true);
    };

    for (int s = config.n_shared; s < tc.stage_count(); ++s) {
        const int c_in = s == 0 ? tc.in_channels : tc.widths[static_cast<std::size_t>(s - 1)];
        const int c_out = tc.widths[static_cast<std::size_t>(s)];
        interp.stage_kernels_.push_back(init_kernel(c_out, c_in, tc.kernel));
        interp.stage_biases_.push_back(Tensor::zeros({c_out}, /*requires_grad=*/true));
    }

    const int c = tc.feature_channels();
    const int c_mid = c / 8;
    const int m = config.attribute_count;
    interp.adh_conv1_kernel_ = init_kernel(c_mid, c, 3);
    interp.adh_conv1_bias_ = Tensor::zeros({c_mid}, /*requires_grad=*/true);
    // Zero head start: PePU(0) = kappa, so a fresh interpreter decomposes
    // every distance uniformly across attributes.
    interp.adh_conv2_kernel_ = Tensor::zeros({m, c_mid, 1, 1}, /*requires_grad=*/true);
    interp.adh_conv2_bias_ = Tensor::zeros({m}, /*requires_grad=*/true);
    interp.attached_ = true;
    return interp;
}

Tensor Interpreter::head(const Tensor& last_stage) const {
    Tensor mid = add_channel_bias(conv2d(last_stage, adh_conv1_kernel_, 1, 1), adh_conv1_bias_);
    Tensor pre = add_channel_bias(conv2d(mid, adh_conv2_kernel_, 1, 0), adh_conv2_bias_);
    return pepu(pre, config_.resolved_kappa(), config_.tau);
}

AAMStack Interpreter::forward_from(const FeatureBundle& target_bundle) const {
    if (!attached_) throw StateError("interpreter: not attached");
    if (static_cast<int>(target_bundle.stages.size()) != target_.config().stage_count())
        throw DimensionError("interpreter: bundle stage count mismatch");
    Tensor x = target_bundle.stages[static_cast<std::size_t>(config_.n_shared - 1)];
    const EmbedderConfig& tc = target_.config();
    for (std::size_t i = 0; i < stage_kernels_.size(); ++i) {
        const int stage = config_.n_shared + static_cast<int>(i);
        x = Embedder::stage_forward(x, stage_kernels_[i], stage_biases_[i],
                                    tc.strides[static_cast<std::size_t>(stage)]);
    }
    return AAMStack{head(x)};
}

AAMStack Interpreter::forward(const Tensor& image) const {
    if (!attached_) throw StateError("interpreter: not attached");
    return forward_from(target_.embed(image));
}

Tensor Interpreter::shared_stage_output(const Tensor& image, int n) const {
    if (!attached_) throw StateError("interpreter: not attached");
    if (n < 1 || n > config_.n_shared) throw UsageError("shared_stage_output: n out of range");
    Tensor x = image;
    for (int s = 0; s < n; ++s)
        x = Embedder::stage_forward(x, target_.stage_kernel(s), target_.stage_bias(s),
                                    target_.config().strides[static_cast<std::size_t>(s)]);
    return x;
}

std::vector<Tensor> Interpreter::attribute_features(const FeatureBundle& bundle,
                                                    const AAMStack& aams) const {
    if (!attached_) throw StateError("interpreter: not attached");
    std::vector<Tensor> feats;
    feats.reserve(static_cast<std::size_t>(config_.attribute_count));
    for (int k = 0; k < config_.attribute_count; ++k) {
        Tensor masked = elementwise_mask(bundle.feature_map, slice_channel(aams.maps, k));
        feats.push_back(generalized_mean_pool(masked, target_.config().gmp_power));
    }
    return feats;
}

PairExplanation Interpreter::decompose(const Tensor& image_i, const Tensor& image_j,
                                       const std::vector<std::uint8_t>& a_i,
                                       const std::vector<std::uint8_t>& a_j,
                                       bool keep_aams) const {
    if (!attached_) throw StateError("interpreter: not attached");
    if (static_cast<int>(a_i.size()) != config_.attribute_count ||
        static_cast<int>(a_j.size()) != config_.attribute_count)
        throw DimensionError("decompose: attribute vectors must have length M");

    const FeatureBundle bundle_i = target_.embed(image_i);
    const FeatureBundle bundle_j = target_.embed(image_j);
    AAMStack aam_i = forward_from(bundle_i);
    AAMStack aam_j = forward_from(bundle_j);
    const std::vector<Tensor> feats_i = attribute_features(bundle_i, aam_i);
    const std::vector<Tensor> feats_j = attribute_features(bundle_j, aam_j);

    PairExplanation out;
    out.distance = Embedder::pair_distance_value(bundle_i.pooled, bundle_j.pooled);
    const int m = config_.attribute_count;
    out.attribute_distances.resize(static_cast<std::size_t>(m));
    double d_hat = 0.0;
    for (int k = 0; k < m; ++k) {
        out.attribute_distances[static_cast<std::size_t>(k)] =
            euclidean_distance(feats_i[static_cast<std::size_t>(k)], feats_j[static_cast<std::size_t>(k)])
                .item();
        d_hat += out.attribute_distances[static_cast<std::size_t>(k)];
    }
    out.reconstructed = d_hat;
    out.contribution_ratios.resize(static_cast<std::size_t>(m));
    if (d_hat > 0.0) {
        for (int k = 0; k < m; ++k)
            out.contribution_ratios[static_cast<std::size_t>(k)] =
                out.attribute_distances[static_cast<std::size_t>(k)] / d_hat;
    } else {
        out.degenerate = true;
        std::fill(out.contribution_ratios.begin(), out.contribution_ratios.end(),
                  1.0 / static_cast<double>(m));
    }
    auto [a_ij, m_e] = pairwise_xor(a_i, a_j);
    out.pairwise_attributes = std::move(a_ij);
    out.exclusive_count = m_e;
    if (keep_aams) {
        out.aam_i = std::move(aam_i);
        out.aam_j = std::move(aam_j);
    }
    return out;
}

std::vector<Tensor> Interpreter::trainable_params() {
    std::vector<Tensor> out;
    for (auto& k : stage_kernels_) out.push_back(k);
    for (auto& b : stage_biases_) out.push_back(b);
    out.push_back(adh_conv1_kernel_);
    out.push_back(adh_conv1_bias_);
    out.push_back(adh_conv2_kernel_);
    out.push_back(adh_conv2_bias_);
    return out;
}

NamedTensors Interpreter::named_params() const {
    NamedTensors out;
    for (std::size_t i = 0; i < stage_kernels_.size(); ++i) {
        const std::string tag = "stage" + std::to_string(config_.n_shared + static_cast<int>(i));
        out.emplace_back(tag + "/kernel", stage_kernels_[i]);
        out.emplace_back(tag + "/bias", stage_biases_[i]);
    }
    out.emplace_back("adh/conv1_kernel", adh_conv1_kernel_);
    out.emplace_back("adh/conv1_bias", adh_conv1_bias_);
    out.emplace_back("adh/conv2_kernel", adh_conv2_kernel_);
    out.emplace_back("adh/conv2_bias", adh_conv2_bias_);
    out.emplace_back("meta/n_shared", Tensor::scalar(static_cast<double>(config_.n_shared)));
    out.emplace_back("meta/attribute_count",
                     Tensor::scalar(static_cast<double>(config_.attribute_count)));
    out.emplace_back("meta/kappa", Tensor::scalar(config_.resolved_kappa()));
    out.emplace_back("meta/tau", Tensor::scalar(config_.tau));
    return out;
}

void Interpreter::load_params(const NamedTensors& params) {
    if (!attached_) throw StateError("load_params: attach to a frozen target first");
    const int n_shared = static_cast<int>(find_tensor(params, "meta/n_shared").item());
    const int m = static_cast<int>(find_tensor(params, "meta/attribute_count").item());
    if (n_shared != config_.n_shared || m != config_.attribute_count)
        throw ConfigError("interpreter weights were trained with a different configuration");
    auto assign = [&params](Tensor& dst, const std::string& name) {
        const Tensor& src = find_tensor(params, name);
        if (src.shape() != dst.shape()) throw DataError("interpreter weight shape mismatch: " + name);
        dst.mutable_values() = src.values();
    };
    for (std::size_t i = 0; i < stage_kernels_.size(); ++i) {
        const std::string tag = "stage" + std::to_string(config_.n_shared + static_cast<int>(i));
        assign(stage_kernels_[i], tag + "/kernel");
        assign(stage_biases_[i], tag + "/bias");
    }
    assign(adh_conv1_kernel_, "adh/conv1_kernel");
    assign(adh_conv1_bias_, "adh/conv1_bias");
    assign(adh_conv2_kernel_, "adh/conv2_kernel");
    assign(adh_conv2_bias_, "adh/conv2_bias");
}

void export_aams(const AAMStack& stack, const std::vector<std::string>& attribute_names,
                 const std::string& dir, const std::string& prefix) {
    if (!stack.maps.defined()) throw UsageError("export_aams: empty stack");
    const int m = stack.maps.dim(0), h = stack.maps.dim(1), w = stack.maps.dim(2);
    if (static_cast<int>(attribute_names.size()) != m)
        throw DimensionError("export_aams: name count does not match attribute count");
    const auto& vals = stack.maps.values();
    const double lo = *std::min_element(vals.begin(), vals.end());
    const double hi = *std::max_element(vals.begin(), vals.end());
    fs::create_directories(dir);
    for (int k = 0; k < m; ++k) {
        std::vector<double> map(vals.begin() + static_cast<std::int64_t>(k) * h * w,
                                vals.begin() + static_cast<std::int64_t>(k + 1) * h * w);
        write_pgm((fs::path(dir) / (prefix + "_" + attribute_names[static_cast<std::size_t>(k)] + ".pgm"))
                      .string(),
                  map, h, w, lo, hi);
    }
    nlohmann::json sidecar{{"min", lo}, {"max", hi}, {"height", h}, {"width", w}};
    std::ofstream os(fs::path(dir) / (prefix + "_aam_range.json"));
    if (!os) throw DataError("cannot write AAM sidecar in " + dir);
    os << sidecar.dump(2) << "\n";
}

}  // namespace amd
