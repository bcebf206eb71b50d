// Command line front end for the attribute-guided metric distillation
// pipeline: synthetic data generation, target/interpreter training,
// pairwise explanations and evaluation reports.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "amd/errors.hpp"
#include "amd/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitState = 4;

void add_config_options(CLI::App* cmd, amd::RunConfig& cfg) {
    cmd->set_config("--config", "", "flat TOML config file (key = value); CLI flags override it");
    cmd->add_option("--data-dir", cfg.data_dir, "dataset directory")->capture_default_str();
    cmd->add_option("--out-dir", cfg.out_dir, "output directory for weights/logs/reports")
        ->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "global seed; all stages derive from it")->capture_default_str();

    cmd->add_option("--n-ids", cfg.n_ids, "number of identities to generate")->capture_default_str();
    cmd->add_option("--images-per-id", cfg.images_per_id, "images per identity")->capture_default_str();
    cmd->add_option("--n-cameras", cfg.n_cameras, "camera count")->capture_default_str();
    cmd->add_option("--test-fraction", cfg.test_fraction, "fraction of IDs held out for testing")
        ->capture_default_str();
    cmd->add_option("--attributes", cfg.attribute_count, "attribute count M")->capture_default_str();
    cmd->add_option("--export-ppm", cfg.export_ppm, "also export up to N PPM images per section")
        ->capture_default_str();

    cmd->add_option("--target-epochs", cfg.target_epochs, "target model training epochs")
        ->capture_default_str();
    cmd->add_option("--target-lr", cfg.target_lr, "target model Adam learning rate")
        ->capture_default_str();
    cmd->add_option("--triplet-margin", cfg.triplet_margin, "batch-hard triplet margin")
        ->capture_default_str();
    cmd->add_option("--gmp-power", cfg.gmp_power, "generalized mean pooling power p")
        ->capture_default_str();

    cmd->add_option("--n-shared", cfg.n_shared, "stages shared with the target model (1..5)")
        ->capture_default_str();
    cmd->add_option("--kappa", cfg.kappa, "PePU kappa; 0 resolves to 1/M")->capture_default_str();
    cmd->add_option("--tau", cfg.tau, "PePU tau")->capture_default_str();

    cmd->add_option("--p-ids", cfg.p_ids, "P identities per mini-batch")->capture_default_str();
    cmd->add_option("--s-samples", cfg.s_samples, "S samples per identity")->capture_default_str();
    cmd->add_option("--epochs", cfg.epochs, "interpreter training epochs")->capture_default_str();
    cmd->add_option("--warmup-epochs", cfg.warmup_epochs, "linear warmup epochs")
        ->capture_default_str();
    cmd->add_option("--base-lr", cfg.base_lr, "interpreter base learning rate")->capture_default_str();
    cmd->add_option("--warmup-start-lr", cfg.warmup_start_lr, "warmup starting learning rate")
        ->capture_default_str();

    cmd->add_option("--alpha", cfg.alpha, "weight of the group attribute prior loss")
        ->capture_default_str();
    cmd->add_option("--beta", cfg.beta, "weight of the individual attribute prior loss")
        ->capture_default_str();
    cmd->add_option("--upsilon", cfg.upsilon, "exclusive-share exponent in (0,1)")
        ->capture_default_str();

    cmd->add_option("--gamma", cfg.gamma, "re-weighting factor for reweight-eval")
        ->capture_default_str();
    cmd->add_option("--pair-dump", cfg.pair_dump, "optional JSONL path for per-pair explanations")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attribute-guided metric distillation pipeline"};
    app.require_subcommand(1);

    amd::RunConfig cfg;
    int query_record = -1, gallery_record = -1;

    CLI::App* gen = app.add_subcommand("gen-data", "generate and split a synthetic dataset");
    CLI::App* train_t = app.add_subcommand("train-target", "train and freeze the target embedder");
    CLI::App* train_i = app.add_subcommand("train-interpreter", "train the interpreter on a frozen target");
    CLI::App* explain = app.add_subcommand("explain", "decompose the distance of one record pair");
    CLI::App* evaluate = app.add_subcommand("evaluate", "compute the full metrics report");
    CLI::App* reweight = app.add_subcommand("reweight-eval", "baseline vs re-weighted retrieval report");
    CLI::App* avg_att = app.add_subcommand("avg-attention", "export average attention maps per attribute");
    for (CLI::App* cmd : {gen, train_t, train_i, explain, evaluate, reweight, avg_att})
        add_config_options(cmd, cfg);
    explain->add_option("--query-record", query_record, "global record index of the query image")
        ->required();
    explain->add_option("--gallery-record", gallery_record, "global record index of the gallery image")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            amd::run_gen_data(cfg);
            std::cout << "dataset written to " << cfg.data_dir << "\n";
        } else if (train_t->parsed()) {
            amd::run_train_target(cfg);
            std::cout << "target weights written to " << cfg.target_weights_path() << "\n";
        } else if (train_i->parsed()) {
            amd::run_train_interpreter(cfg);
            std::cout << "interpreter weights written to " << cfg.interpreter_weights_path() << "\n";
        } else if (explain->parsed()) {
            const auto report = amd::run_explain(cfg, query_record, gallery_record);
            std::cout << report.dump(2) << "\n";
        } else if (evaluate->parsed()) {
            const auto report = amd::run_evaluate(cfg, /*with_reweight=*/false);
            std::cout << report.dump(2) << "\n";
        } else if (reweight->parsed()) {
            const auto report = amd::run_evaluate(cfg, /*with_reweight=*/true);
            std::cout << report.dump(2) << "\n";
        } else if (avg_att->parsed()) {
            amd::run_avg_attention(cfg);
            std::cout << "average attention maps written to " << cfg.out_dir << "/avg_attention\n";
        }
    } catch (const amd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const amd::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const amd::StateError& e) {
        std::cerr << "state error: " << e.what() << "\n";
        return kExitState;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
