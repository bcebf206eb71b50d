#include "amd/training.hpp"

#include <algorithm>
#include <map>

#include "amd/optim.hpp"

namespace amd {

void TrainSchedule::validate() const {
    if (p_ids < 2 || s_samples < 2) throw ConfigError("schedule: P and S must be >= 2");
    if (epochs <= 0) throw ConfigError("schedule: epochs must be positive");
    if (warmup_epochs < 0 || warmup_epochs > epochs)
        throw ConfigError("schedule: warmup epochs must be in 0..epochs");
    if (base_lr <= 0.0 || warmup_start_lr <= 0.0) throw ConfigError("schedule: lrs must be positive");
}

std::vector<const PersonRecord*> pk_sample(const std::vector<const PersonRecord*>& records,
                                           int p_ids, int s_samples, Rng& rng) {
    if (p_ids < 1 || s_samples < 1) throw ConfigError("pk_sample: P and S must be >= 1");
    std::map<int, std::vector<const PersonRecord*>> by_id;
    for (const PersonRecord* r : records) by_id[r->id].push_back(r);
    if (static_cast<int>(by_id.size()) < p_ids)
        throw ConfigError("pk_sample: fewer IDs than P");

    std::vector<int> ids;
    ids.reserve(by_id.size());
    for (const auto& [id, recs] : by_id) ids.push_back(id);
    rng.shuffle(ids);
    ids.resize(static_cast<std::size_t>(p_ids));

    std::vector<const PersonRecord*> batch;
    batch.reserve(static_cast<std::size_t>(p_ids) * s_samples);
    for (int id : ids) {
        const auto& recs = by_id[id];
        if (static_cast<int>(recs.size()) >= s_samples) {
            std::vector<const PersonRecord*> shuffled = recs;
            rng.shuffle(shuffled);
            for (int s = 0; s < s_samples; ++s) batch.push_back(shuffled[static_cast<std::size_t>(s)]);
        } else {
            // with-replacement contract for IDs holding fewer than S images
            for (int s = 0; s < s_samples; ++s)
                batch.push_back(recs[rng.uniform_int(recs.size())]);
        }
    }
    return batch;
}

std::vector<std::pair<int, int>> enumerate_pairs(int batch_size) {
    if (batch_size < 2) throw UsageError("enumerate_pairs: batch size must be >= 2");
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(batch_size) * (batch_size - 1) / 2);
    for (int i = 0; i < batch_size; ++i)
        for (int j = i + 1; j < batch_size; ++j) pairs.emplace_back(i, j);
    return pairs;
}

double warmup_lr(int epoch, const TrainSchedule& schedule) {
    schedule.validate();
    if (epoch < 0 || epoch >= schedule.epochs) throw UsageError("warmup_lr: epoch out of range");
    if (epoch >= schedule.warmup_epochs) return schedule.base_lr;
    const double t = static_cast<double>(epoch) / static_cast<double>(schedule.warmup_epochs);
    return schedule.warmup_start_lr + t * (schedule.base_lr - schedule.warmup_start_lr);
}

nlohmann::json InterpreterTrainEpoch::to_json() const {
    return nlohmann::json{{"epoch", epoch},
                          {"lr", lr},
                          {"mean_L_d", mean_L_d},
                          {"mean_L_p1", mean_L_p1},
                          {"mean_L_p2", mean_L_p2},
                          {"mean_total", mean_total},
                          {"pairs", pairs},
                          {"degenerate_pairs_skipped", degenerate_pairs_skipped},
                          {"p1_skips", p1_skips},
                          {"p2_skips", p2_skips}};
}

std::vector<InterpreterTrainEpoch> train_interpreter(Interpreter& interpreter,
                                                     const std::vector<PersonRecord>& train_records,
                                                     const TrainSchedule& schedule,
                                                     const LossConfig& loss_config) {
    schedule.validate();
    loss_config.validate();
    if (!interpreter.attached()) throw StateError("train_interpreter: interpreter not attached");
    if (!interpreter.target().frozen()) throw StateError("train_interpreter: target must be frozen");
    if (train_records.empty()) throw ConfigError("train_interpreter: no training records");

    const Embedder& target = interpreter.target();
    AdamOptimizer opt(interpreter.trainable_params());

    std::vector<const PersonRecord*> pool;
    pool.reserve(train_records.size());
    for (const auto& r : train_records) pool.push_back(&r);

    const int batch_size = schedule.p_ids * schedule.s_samples;
    const int batches_per_epoch =
        std::max<int>(1, (static_cast<int>(pool.size()) + batch_size - 1) / batch_size);
    const auto pair_indices = enumerate_pairs(batch_size);

    Rng rng(derive_seed(schedule.seed, 21));
    std::vector<InterpreterTrainEpoch> log;
    for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
        InterpreterTrainEpoch entry;
        entry.epoch = epoch;
        entry.lr = warmup_lr(epoch, schedule);
        for (int b = 0; b < batches_per_epoch; ++b) {
            const auto batch = pk_sample(pool, schedule.p_ids, schedule.s_samples, rng);

            // One forward per image; pairs reuse the cached features/AAMs.
            std::vector<FeatureBundle> bundles;
            std::vector<std::vector<Tensor>> attr_feats;
            bundles.reserve(batch.size());
            attr_feats.reserve(batch.size());
            for (const PersonRecord* r : batch) {
                bundles.push_back(target.embed(r->image));
                const AAMStack aams = interpreter.forward_from(bundles.back());
                attr_feats.push_back(interpreter.attribute_features(bundles.back(), aams));
            }

            std::vector<Tensor> pair_losses;
            pair_losses.reserve(pair_indices.size());
            for (const auto& [i, j] : pair_indices) {
                const double d = Embedder::pair_distance_value(bundles[static_cast<std::size_t>(i)].pooled,
                                                               bundles[static_cast<std::size_t>(j)].pooled);
                if (d < 1e-12) {  // identical images: shares undefined
                    ++entry.degenerate_pairs_skipped;
                    continue;
                }
                std::vector<Tensor> d_components;
                d_components.reserve(attr_feats[static_cast<std::size_t>(i)].size());
                for (std::size_t k = 0; k < attr_feats[static_cast<std::size_t>(i)].size(); ++k)
                    d_components.push_back(euclidean_distance(attr_feats[static_cast<std::size_t>(i)][k],
                                                              attr_feats[static_cast<std::size_t>(j)][k]));
                const auto [a_ij, m_e] =
                    pairwise_xor(batch[static_cast<std::size_t>(i)]->attributes,
                                 batch[static_cast<std::size_t>(j)]->attributes);
                (void)m_e;
                LossBreakdown breakdown = total_loss(d, d_components, a_ij, loss_config);
                entry.mean_L_d += breakdown.L_d;
                entry.mean_L_p1 += breakdown.L_p1;
                entry.mean_L_p2 += breakdown.L_p2;
                entry.mean_total += breakdown.total;
                entry.p1_skips += breakdown.p1_skipped ? 1 : 0;
                entry.p2_skips += breakdown.p2_skipped ? 1 : 0;
                ++entry.pairs;
                pair_losses.push_back(breakdown.total_node);
            }
            if (pair_losses.empty()) continue;  // all pairs degenerate

            Tensor batch_loss = scale(sum_of(pair_losses), 1.0 / static_cast<double>(pair_losses.size()));
            batch_loss.backward();
            opt.step(entry.lr);
        }
        if (entry.pairs > 0) {
            entry.mean_L_d /= entry.pairs;
            entry.mean_L_p1 /= entry.pairs;
            entry.mean_L_p2 /= entry.pairs;
            entry.mean_total /= entry.pairs;
        }
        log.push_back(entry);
    }
    return log;
}

}  // namespace amd
