#include "amd/target_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "amd/optim.hpp"
#include "amd/rng.hpp"
#include "amd/training.hpp"

namespace amd {

void EmbedderConfig::validate() const {
    if (widths.size() != 5 || strides.size() != 5)
        throw ConfigError("embedder: exactly 5 stages required");
    for (int wdt : widths)
        if (wdt <= 0) throw ConfigError("embedder: stage widths must be positive");
    for (int s : strides)
        if (s <= 0) throw ConfigError("embedder: strides must be positive");
    if (feature_channels() % 8 != 0)
        throw ConfigError("embedder: final width must be divisible by 8");
    if (kernel % 2 == 0) throw ConfigError("embedder: kernel must be odd");
    if (gmp_power < 1.0) throw ConfigError("embedder: gmp power must be >= 1");
    if (in_channels <= 0 || input_height <= 0 || input_width <= 0)
        throw ConfigError("embedder: input shape must be positive");
}

namespace {

Tensor he_uniform_kernel(int c_out, int c_in, int k, double gain, Rng& rng) {
    const double bound = gain * std::sqrt(6.0 / (static_cast<double>(c_in) * k * k));
    std::vector<double> vals(static_cast<std::size_t>(c_out) * c_in * k * k);
    for (double& v : vals) v = rng.uniform(-bound, bound);
    return Tensor::from_values({c_out, c_in, k, k}, std::move(vals), /*requires_grad=*/true);
}

}  // namespace

Embedder::Embedder(EmbedderConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    Rng rng(derive_seed(seed, 10));
    int c_in = config_.in_channels;
    for (int s = 0; s < config_.stage_count(); ++s) {
        const int c_out = config_.widths[static_cast<std::size_t>(s)];
        kernels_.push_back(he_uniform_kernel(c_out, c_in, config_.kernel, config_.init_gain, rng));
        biases_.push_back(Tensor::zeros({c_out}, /*requires_grad=*/true));
        c_in = c_out;
    }
    initialized_ = true;
}

void Embedder::freeze() {
    for (auto& k : kernels_) k.set_requires_grad(false);
    for (auto& b : biases_) b.set_requires_grad(false);
    frozen_ = true;
}

Tensor Embedder::stage_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                               int stride) {
    const int pad = kernel.dim(2) / 2;
    return relu(add_channel_bias(conv2d(x, kernel, stride, pad), bias));
}

FeatureBundle Embedder::embed(const Tensor& image) const {
    if (!initialized_) throw StateError("embed: embedder has no weights");
    if (image.shape().size() != 3 || image.dim(0) != config_.in_channels ||
        image.dim(1) != config_.input_height || image.dim(2) != config_.input_width)
        throw DimensionError("embed: image shape does not match embedder config");
    FeatureBundle bundle;
    Tensor x = image;
    for (int s = 0; s < config_.stage_count(); ++s) {
        x = stage_forward(x, kernels_[static_cast<std::size_t>(s)],
                          biases_[static_cast<std::size_t>(s)],
                          config_.strides[static_cast<std::size_t>(s)]);
        bundle.stages.push_back(x);
    }
    bundle.feature_map = x;
    bundle.pooled = generalized_mean_pool(x, config_.gmp_power);
    return bundle;
}

Tensor Embedder::pair_distance(const Tensor& f_i, const Tensor& f_j) {
    return l2_normalize_and_distance(f_i, f_j);
}

double Embedder::pair_distance_value(const Tensor& f_i, const Tensor& f_j) {
    return pair_distance(f_i, f_j).item();
}

std::vector<Tensor> Embedder::trainable_params() {
    std::vector<Tensor> out;
    if (frozen_) return out;
    for (auto& k : kernels_) out.push_back(k);
    for (auto& b : biases_) out.push_back(b);
    return out;
}

NamedTensors Embedder::named_params() const {
    NamedTensors out;
    for (int s = 0; s < config_.stage_count(); ++s) {
        out.emplace_back("stage" + std::to_string(s) + "/kernel", kernels_[static_cast<std::size_t>(s)]);
        out.emplace_back("stage" + std::to_string(s) + "/bias", biases_[static_cast<std::size_t>(s)]);
    }
    return out;
}

void Embedder::load_params(const NamedTensors& params) {
    config_.validate();
    kernels_.clear();
    biases_.clear();
    int c_in = config_.in_channels;
    for (int s = 0; s < config_.stage_count(); ++s) {
        const int c_out = config_.widths[static_cast<std::size_t>(s)];
        const Tensor& k = find_tensor(params, "stage" + std::to_string(s) + "/kernel");
        const Tensor& b = find_tensor(params, "stage" + std::to_string(s) + "/bias");
        if (k.shape() != std::vector<int>{c_out, c_in, config_.kernel, config_.kernel})
            throw DataError("loaded kernel shape mismatch at stage " + std::to_string(s));
        if (b.shape() != std::vector<int>{c_out})
            throw DataError("loaded bias shape mismatch at stage " + std::to_string(s));
        kernels_.push_back(k);
        biases_.push_back(b);
        c_in = c_out;
    }
    initialized_ = true;
    freeze();
}

// ---- training ---------------------------------------------------------------

namespace {

// One probe query and one probe gallery image per ID (different cameras),
// held out of the training pool for the per-epoch Rank-1 probe.
struct ProbeSplit {
    std::vector<const PersonRecord*> pool;
    std::vector<const PersonRecord*> probe_query;
    std::vector<const PersonRecord*> probe_gallery;
};

ProbeSplit make_probe_split(const std::vector<PersonRecord>& records) {
    std::map<int, std::map<int, std::vector<const PersonRecord*>>> by_id_cam;
    for (const auto& r : records) by_id_cam[r.id][r.camera].push_back(&r);
    ProbeSplit split;
    std::set<const PersonRecord*> held;
    for (auto& [id, cams] : by_id_cam) {
        if (cams.size() >= 2) {
            auto it = cams.begin();
            const PersonRecord* q = it->second.front();
            ++it;
            const PersonRecord* g = it->second.front();
            split.probe_query.push_back(q);
            split.probe_gallery.push_back(g);
            held.insert(q);
            held.insert(g);
        }
    }
    for (const auto& r : records)
        if (!held.count(&r)) split.pool.push_back(&r);
    return split;
}

double probe_rank1(const Embedder& model, const ProbeSplit& split) {
    if (split.probe_query.empty()) return 0.0;
    std::vector<Tensor> gallery_feats;
    gallery_feats.reserve(split.probe_gallery.size());
    for (const PersonRecord* g : split.probe_gallery)
        gallery_feats.push_back(model.embed(g->image).pooled);
    int hits = 0;
    for (const PersonRecord* q : split.probe_query) {
        const Tensor fq = model.embed(q->image).pooled;
        double best = 0.0;
        int best_idx = -1;
        for (std::size_t g = 0; g < gallery_feats.size(); ++g) {
            const double d = Embedder::pair_distance_value(fq, gallery_feats[g]);
            if (best_idx < 0 || d < best) {
                best = d;
                best_idx = static_cast<int>(g);
            }
        }
        if (best_idx >= 0 && split.probe_gallery[static_cast<std::size_t>(best_idx)]->id == q->id)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(split.probe_query.size());
}

}  // namespace

TrainedTarget train_target(const std::vector<PersonRecord>& train_records,
                           const EmbedderConfig& config, int epochs, std::uint64_t seed,
                           const TargetTrainOptions& options) {
    if (epochs <= 0) throw ConfigError("train_target: epochs must be positive");
    std::map<int, int> images_per_id;
    for (const auto& r : train_records) images_per_id[r.id]++;
    if (images_per_id.size() < 2) throw ConfigError("train_target: need at least 2 IDs");
    for (const auto& [id, n] : images_per_id)
        if (n < 2) throw ConfigError("train_target: every ID needs at least 2 images");
    if (static_cast<int>(images_per_id.size()) < options.p_ids)
        throw ConfigError("train_target: fewer IDs than P");

    TrainedTarget result;
    result.model = Embedder(config, seed);
    AdamOptimizer opt(result.model.trainable_params());

    const ProbeSplit probe = make_probe_split(train_records);
    const std::vector<const PersonRecord*>& pool = probe.pool;
    const int batch_size = options.p_ids * options.s_samples;
    const int batches_per_epoch =
        std::max<int>(1, (static_cast<int>(pool.size()) + batch_size - 1) / batch_size);

    Rng rng(derive_seed(seed, 11));
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double loss_sum = 0.0;
        int loss_count = 0;
        for (int b = 0; b < batches_per_epoch; ++b) {
            const std::vector<const PersonRecord*> batch =
                pk_sample(pool, options.p_ids, options.s_samples, rng);
            std::vector<Tensor> feats;
            feats.reserve(batch.size());
            for (const PersonRecord* r : batch) feats.push_back(result.model.embed(r->image).pooled);

            // Normalized pairwise distances, one node per unordered pair.
            const int n = static_cast<int>(batch.size());
            std::vector<Tensor> dist(static_cast<std::size_t>(n) * n);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    Tensor d = Embedder::pair_distance(feats[static_cast<std::size_t>(i)],
                                                       feats[static_cast<std::size_t>(j)]);
                    dist[static_cast<std::size_t>(i) * n + j] = d;
                    dist[static_cast<std::size_t>(j) * n + i] = d;
                }

            // Batch-hard: per anchor, hardest positive and hardest negative.
            std::vector<Tensor> hinges;
            for (int a = 0; a < n; ++a) {
                int hard_pos = -1, hard_neg = -1;
                for (int o = 0; o < n; ++o) {
                    if (o == a) continue;
                    const double d = dist[static_cast<std::size_t>(a) * n + o].item();
                    if (batch[static_cast<std::size_t>(o)]->id == batch[static_cast<std::size_t>(a)]->id) {
                        if (hard_pos < 0 || d > dist[static_cast<std::size_t>(a) * n + hard_pos].item())
                            hard_pos = o;
                    } else {
                        if (hard_neg < 0 || d < dist[static_cast<std::size_t>(a) * n + hard_neg].item())
                            hard_neg = o;
                    }
                }
                if (hard_pos < 0 || hard_neg < 0) continue;
                Tensor gap = sub(dist[static_cast<std::size_t>(a) * n + hard_pos],
                                 dist[static_cast<std::size_t>(a) * n + hard_neg]);
                hinges.push_back(relu(add(gap, Tensor::scalar(options.margin))));
            }
            if (hinges.empty()) continue;
            Tensor loss = scale(sum_of(hinges), 1.0 / static_cast<double>(hinges.size()));
            loss.backward();
            opt.step(options.lr);
            loss_sum += loss.item();
            ++loss_count;
        }
        TargetTrainEpoch entry;
        entry.epoch = epoch;
        entry.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        entry.probe_rank1 = probe_rank1(result.model, probe);
        result.log.push_back(entry);
    }
    result.model.freeze();
    return result;
}

}  // namespace amd
