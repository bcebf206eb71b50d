#pragma once

#include <cstdint>
#include <vector>

#include "amd/synth_data.hpp"
#include "amd/tensor.hpp"
#include "amd/weights_io.hpp"

namespace amd {

/// Five-stage convolutional embedder. Five stages keep the interpreter's
/// shared-stage count N meaningful over its whole 1..5 range; the last
/// width must be divisible by 8 for the decomposition head.
struct EmbedderConfig {
    int in_channels = 3;
    int input_height = 64;
    int input_width = 32;
    std::vector<int> widths{8, 16, 32, 32, 64};
    std::vector<int> strides{2, 2, 2, 1, 1};
    int kernel = 3;
    double gmp_power = 3.0;
    double init_gain = 1.0;

    int stage_count() const { return static_cast<int>(widths.size()); }
    int feature_channels() const { return widths.back(); }
    void validate() const;
};

/// Per-image activations of the target model: one post-ReLU map per stage,
/// the final feature map F, and the pooled feature f = gmp(F, p).
struct FeatureBundle {
    std::vector<Tensor> stages;
    Tensor feature_map;
    Tensor pooled;
};

class Embedder {
public:
    Embedder() = default;
    /// Fresh trainable model, seed-deterministic scaled-uniform init.
    Embedder(EmbedderConfig config, std::uint64_t seed);

    const EmbedderConfig& config() const { return config_; }
    bool frozen() const { return frozen_; }
    void freeze();

    /// Deterministic forward pass. With a frozen model no gradients attach
    /// to the embedder parameters. Throws StateError before init/load.
    FeatureBundle embed(const Tensor& image) const;

    /// Euclidean distance between L2-normalized features, in [0, 2].
    static Tensor pair_distance(const Tensor& f_i, const Tensor& f_j);
    static double pair_distance_value(const Tensor& f_i, const Tensor& f_j);

    std::vector<Tensor> trainable_params();
    NamedTensors named_params() const;
    void load_params(const NamedTensors& params);  // loads frozen

    const Tensor& stage_kernel(int i) const { return kernels_.at(static_cast<std::size_t>(i)); }
    const Tensor& stage_bias(int i) const { return biases_.at(static_cast<std::size_t>(i)); }

    /// conv(pad k/2) + channel bias + ReLU; also used by the interpreter's
    /// trainable stages so shared stages are computed by the same code path.
    static Tensor stage_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                                int stride);

private:
    EmbedderConfig config_;
    std::vector<Tensor> kernels_;
    std::vector<Tensor> biases_;
    bool frozen_ = false;
    bool initialized_ = false;
};

struct TargetTrainOptions {
    int p_ids = 6;
    int s_samples = 4;
    double lr = 1e-3;
    double margin = 0.3;
};

struct TargetTrainEpoch {
    int epoch = 0;
    double mean_loss = 0.0;
    double probe_rank1 = 0.0;
};

struct TrainedTarget {
    Embedder model;  // frozen
    std::vector<TargetTrainEpoch> log;
};

/// Trains a fresh embedder with batch-hard triplet loss on normalized
/// features over P x S batches, logging per-epoch mean loss and a held-out
/// Rank-1 probe, then freezes the weights.
TrainedTarget train_target(const std::vector<PersonRecord>& train_records,
                           const EmbedderConfig& config, int epochs, std::uint64_t seed,
                           const TargetTrainOptions& options = {});

}  // namespace amd
