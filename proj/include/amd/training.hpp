#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "amd/interpreter.hpp"
#include "amd/losses.hpp"
#include "amd/rng.hpp"
#include "amd/synth_data.hpp"
#include "amd/target_model.hpp"

namespace amd {

struct TrainSchedule {
    int p_ids = 6;
    int s_samples = 4;
    int epochs = 30;
    int warmup_epochs = 10;
    double base_lr = 1e-4;
    double warmup_start_lr = 1e-6;
    std::uint64_t seed = 0;
    void validate() const;
};

/// P distinct IDs with S records each. IDs holding fewer than S images are
/// sampled with replacement. Deterministic per rng state.
std::vector<const PersonRecord*> pk_sample(const std::vector<const PersonRecord*>& records,
                                           int p_ids, int s_samples, Rng& rng);

/// All unordered distinct index pairs (i < j) of a batch of size n.
std::vector<std::pair<int, int>> enumerate_pairs(int batch_size);

/// Linear warmup from warmup_start_lr to base_lr across the warmup epochs,
/// base_lr afterwards.
double warmup_lr(int epoch, const TrainSchedule& schedule);

struct InterpreterTrainEpoch {
    int epoch = 0;
    double lr = 0.0;
    double mean_L_d = 0.0;
    double mean_L_p1 = 0.0;
    double mean_L_p2 = 0.0;
    double mean_total = 0.0;
    int pairs = 0;
    int degenerate_pairs_skipped = 0;  // identical-image pairs (d ~ 0)
    int p1_skips = 0;
    int p2_skips = 0;

    nlohmann::json to_json() const;
};

/// Trains the interpreter's free stages and head against the frozen target:
/// one forward per image per batch, losses averaged over all valid unordered
/// pairs, Adam on the trainable parameters with the warmup schedule.
std::vector<InterpreterTrainEpoch> train_interpreter(Interpreter& interpreter,
                                                     const std::vector<PersonRecord>& train_records,
                                                     const TrainSchedule& schedule,
                                                     const LossConfig& loss_config);

}  // namespace amd
