#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amd/losses.hpp"
#include "amd/target_model.hpp"

namespace amd {

struct InterpreterConfig {
    int n_shared = 3;         // stages shared with (and frozen from) the target
    int attribute_count = 8;  // M
    double kappa = 0.0;       // <= 0 resolves to 1/M
    double tau = 0.5;

    double resolved_kappa() const {
        return kappa > 0.0 ? kappa : 1.0 / static_cast<double>(attribute_count);
    }
    void validate(const EmbedderConfig& target) const;
};

/// Attribute-guided attention maps for one image: M x h x w, all entries
/// strictly positive (PePU output).
struct AAMStack {
    Tensor maps;
    int attribute_count() const { return maps.defined() ? maps.dim(0) : 0; }
};

/// Full explanation of one image pair.
struct PairExplanation {
    double distance = 0.0;       // d from the target model
    double reconstructed = 0.0;  // d_hat = sum_k d^k
    std::vector<double> attribute_distances;
    std::vector<double> contribution_ratios;  // r^k, uniform 1/M when degenerate
    std::vector<std::uint8_t> pairwise_attributes;
    int exclusive_count = 0;
    bool degenerate = false;  // d_hat ~ 0: ratios undefined, reported uniform
    AAMStack aam_i, aam_j;    // populated on demand
};

/// The interpreter network: stages 1..N_shared reference the frozen target
/// parameters, the remaining stages and the two-conv decomposition head are
/// trainable. The head maps the last stage to C/8 channels (3x3, padded),
/// then to M channels (1x1), then through PePU.
class Interpreter {
public:
    Interpreter() = default;

    /// Target must be frozen. Fresh trainable stages use seed-deterministic
    /// scaled-uniform init; the final head conv starts at zero so a fresh
    /// interpreter emits constant-kappa attention.
    static Interpreter attach(const Embedder& target, const InterpreterConfig& config,
                              std::uint64_t seed);

    const InterpreterConfig& config() const { return config_; }
    const Embedder& target() const { return target_; }
    bool attached() const { return attached_; }

    AAMStack forward(const Tensor& image) const;
    /// Same result as forward(), starting from the target's cached shared
    /// stage activation (the shared stages are literally the same
    /// parameters, so recomputing them would be identical).
    AAMStack forward_from(const FeatureBundle& target_bundle) const;

    /// Attribute-guided pooled features f^k = gmp(F o A^k, p), one per
    /// attribute, differentiable into the trainable parameters.
    std::vector<Tensor> attribute_features(const FeatureBundle& bundle,
                                           const AAMStack& aams) const;

    PairExplanation decompose(const Tensor& image_i, const Tensor& image_j,
                              const std::vector<std::uint8_t>& a_i,
                              const std::vector<std::uint8_t>& a_j,
                              bool keep_aams = true) const;

    std::vector<Tensor> trainable_params();
    NamedTensors named_params() const;  // trainable tensors + meta block
    void load_params(const NamedTensors& params);

    /// Output of stages 1..n of this interpreter on a raw image; used to
    /// check the sharing contract against the target's activations.
    Tensor shared_stage_output(const Tensor& image, int n) const;

private:
    Embedder target_;  // shares frozen parameter nodes with the caller's model
    InterpreterConfig config_;
    std::vector<Tensor> stage_kernels_;  // trainable stages n_shared..4
    std::vector<Tensor> stage_biases_;
    Tensor adh_conv1_kernel_, adh_conv1_bias_;
    Tensor adh_conv2_kernel_, adh_conv2_bias_;
    bool attached_ = false;

    Tensor head(const Tensor& last_stage) const;
};

/// Writes one PGM per attribute, min-max normalized over the whole stack,
/// plus a JSON sidecar with the raw min/max for exact reconstruction.
void export_aams(const AAMStack& stack, const std::vector<std::string>& attribute_names,
                 const std::string& dir, const std::string& prefix);

}  // namespace amd
