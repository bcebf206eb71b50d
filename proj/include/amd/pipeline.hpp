#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "amd/evaluation.hpp"
#include "amd/interpreter.hpp"
#include "amd/losses.hpp"
#include "amd/synth_data.hpp"
#include "amd/target_model.hpp"
#include "amd/training.hpp"

namespace amd {

/// One flat bag of settings for every pipeline command. Defaults follow the
/// published recipe where one exists (alpha=10, beta=50, upsilon=0.5,
/// kappa=1/M, tau=0.5, P x S = 6 x 4, 30 epochs with 10 warmup,
/// lr 1e-4 from 1e-6, gamma=1).
struct RunConfig {
    std::string data_dir = "data";
    std::string out_dir = "out";
    std::uint64_t seed = 7;

    // dataset
    int n_ids = 48;
    int images_per_id = 16;
    int n_cameras = 4;
    double test_fraction = 1.0 / 3.0;
    int attribute_count = 8;
    int export_ppm = 0;

    // target model
    int target_epochs = 20;
    double target_lr = 1e-3;
    double triplet_margin = 0.3;
    double gmp_power = 3.0;

    // interpreter
    int n_shared = 3;
    double kappa = 0.0;  // <= 0 resolves to 1/M
    double tau = 0.5;

    // interpreter training
    int p_ids = 6;
    int s_samples = 4;
    int epochs = 30;
    int warmup_epochs = 10;
    double base_lr = 1e-4;
    double warmup_start_lr = 1e-6;

    // losses
    double alpha = 10.0;
    double beta = 50.0;
    double upsilon = 0.5;

    // evaluation
    double gamma = 1.0;
    std::string pair_dump;  // optional JSONL dump path

    EmbedderConfig embedder_config() const;
    InterpreterConfig interpreter_config() const;
    TrainSchedule train_schedule() const;
    LossConfig loss_config() const;

    std::string target_weights_path() const;
    std::string interpreter_weights_path() const;
};

void run_gen_data(const RunConfig& config);
void run_train_target(const RunConfig& config);
void run_train_interpreter(const RunConfig& config);
nlohmann::json run_explain(const RunConfig& config, int query_record, int gallery_record);
nlohmann::json run_evaluate(const RunConfig& config, bool with_reweight);
void run_avg_attention(const RunConfig& config);

/// Loads dataset + frozen target (StateError when weights are missing).
DatasetSplit load_split(const RunConfig& config);
Embedder load_target(const RunConfig& config, const AttributeSchema& schema);
Interpreter load_interpreter(const RunConfig& config, const Embedder& target);

}  // namespace amd
