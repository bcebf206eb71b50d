#include "amd/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "amd/image_io.hpp"
#include "amd/weights_io.hpp"

namespace amd {

namespace fs = std::filesystem;
using nlohmann::json;

EmbedderConfig RunConfig::embedder_config() const {
    EmbedderConfig c;
    c.gmp_power = gmp_power;
    return c;
}

InterpreterConfig RunConfig::interpreter_config() const {
    InterpreterConfig c;
    c.n_shared = n_shared;
    c.attribute_count = attribute_count;
    c.kappa = kappa;
    c.tau = tau;
    return c;
}

TrainSchedule RunConfig::train_schedule() const {
    TrainSchedule s;
    s.p_ids = p_ids;
    s.s_samples = s_samples;
    s.epochs = epochs;
    s.warmup_epochs = warmup_epochs;
    s.base_lr = base_lr;
    s.warmup_start_lr = warmup_start_lr;
    s.seed = seed;
    return s;
}

LossConfig RunConfig::loss_config() const {
    LossConfig c;
    c.alpha = alpha;
    c.beta = beta;
    c.upsilon = upsilon;
    return c;
}

std::string RunConfig::target_weights_path() const {
    return (fs::path(out_dir) / "target.weights").string();
}

std::string RunConfig::interpreter_weights_path() const {
    return (fs::path(out_dir) / "interpreter.weights").string();
}

void run_gen_data(const RunConfig& config) {
    const AttributeSchema schema = AttributeSchema::with_attribute_count(config.attribute_count);
    const auto records = generate_dataset(schema, config.n_ids, config.images_per_id,
                                          config.n_cameras, config.seed);
    DatasetSplit split = split_dataset(records, config.test_fraction, config.seed);
    split.schema = schema;
    save_dataset(split, config.data_dir);
    if (config.export_ppm > 0)
        export_ppm_samples(split, (fs::path(config.data_dir) / "ppm").string(), config.export_ppm);
}

DatasetSplit load_split(const RunConfig& config) { return load_dataset(config.data_dir); }

Embedder load_target(const RunConfig& config, const AttributeSchema& schema) {
    EmbedderConfig ec = config.embedder_config();
    ec.input_height = schema.image_height;
    ec.input_width = schema.image_width;
    if (!fs::exists(config.target_weights_path()))
        throw StateError("target weights not found: " + config.target_weights_path() +
                         " (run train-target first)");
    Embedder model(ec, 0);
    model.load_params(load_weights(config.target_weights_path()));
    return model;
}

Interpreter load_interpreter(const RunConfig& config, const Embedder& target) {
    if (!fs::exists(config.interpreter_weights_path()))
        throw StateError("interpreter weights not found: " + config.interpreter_weights_path() +
                         " (run train-interpreter first)");
    Interpreter interp = Interpreter::attach(target, config.interpreter_config(), config.seed);
    interp.load_params(load_weights(config.interpreter_weights_path()));
    return interp;
}

void run_train_target(const RunConfig& config) {
    const DatasetSplit split = load_split(config);
    EmbedderConfig ec = config.embedder_config();
    ec.input_height = split.schema.image_height;
    ec.input_width = split.schema.image_width;
    TargetTrainOptions options;
    options.p_ids = config.p_ids;
    options.s_samples = config.s_samples;
    options.lr = config.target_lr;
    options.margin = config.triplet_margin;
    TrainedTarget trained =
        train_target(split.train, ec, config.target_epochs, config.seed, options);

    fs::create_directories(config.out_dir);
    save_weights(config.target_weights_path(), trained.model.named_params());
    std::ofstream log(fs::path(config.out_dir) / "target_train_log.jsonl", std::ios::trunc);
    if (!log) throw DataError("cannot write target training log");
    for (const auto& e : trained.log)
        log << json{{"epoch", e.epoch}, {"loss", e.mean_loss}, {"probe_rank1", e.probe_rank1}}.dump()
            << "\n";
}

void run_train_interpreter(const RunConfig& config) {
    const DatasetSplit split = load_split(config);
    const Embedder target = load_target(config, split.schema);
    Interpreter interp = Interpreter::attach(target, config.interpreter_config(), config.seed);
    const auto log_entries =
        train_interpreter(interp, split.train, config.train_schedule(), config.loss_config());

    fs::create_directories(config.out_dir);
    save_weights(config.interpreter_weights_path(), interp.named_params());
    std::ofstream log(fs::path(config.out_dir) / "interpreter_train_log.jsonl", std::ios::trunc);
    if (!log) throw DataError("cannot write interpreter training log");
    for (const auto& e : log_entries) log << e.to_json().dump() << "\n";
}

namespace {

const PersonRecord& record_by_index(const DatasetSplit& split, int index) {
    const std::size_t n_train = split.train.size();
    const std::size_t n_query = split.query.size();
    const std::size_t i = static_cast<std::size_t>(index);
    if (index < 0 || i >= n_train + n_query + split.gallery.size())
        throw DataError("record index out of range: " + std::to_string(index));
    if (i < n_train) return split.train[i];
    if (i < n_train + n_query) return split.query[i - n_train];
    return split.gallery[i - n_train - n_query];
}

}  // namespace

json run_explain(const RunConfig& config, int query_record, int gallery_record) {
    const DatasetSplit split = load_split(config);
    const Embedder target = load_target(config, split.schema);
    const Interpreter interp = load_interpreter(config, target);
    const PersonRecord& rec_i = record_by_index(split, query_record);
    const PersonRecord& rec_j = record_by_index(split, gallery_record);

    const PairExplanation expl =
        interp.decompose(rec_i.image, rec_j.image, rec_i.attributes, rec_j.attributes);

    // Top-3 attributes by contribution ratio, stable on ties.
    const int m = static_cast<int>(expl.contribution_ratios.size());
    std::vector<int> order(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) order[static_cast<std::size_t>(k)] = k;
    std::stable_sort(order.begin(), order.end(), [&expl](int a, int b) {
        return expl.contribution_ratios[static_cast<std::size_t>(a)] >
               expl.contribution_ratios[static_cast<std::size_t>(b)];
    });
    json top3 = json::array();
    std::vector<std::string> names;
    for (const auto& a : split.schema.attributes) names.push_back(a.name);
    for (int r = 0; r < std::min(3, m); ++r) {
        const int k = order[static_cast<std::size_t>(r)];
        top3.push_back({{"attribute", names[static_cast<std::size_t>(k)]},
                        {"index", k},
                        {"distance", expl.attribute_distances[static_cast<std::size_t>(k)]},
                        {"ratio", expl.contribution_ratios[static_cast<std::size_t>(k)]},
                        {"exclusive", expl.pairwise_attributes[static_cast<std::size_t>(k)] != 0}});
    }

    fs::create_directories(config.out_dir);
    const std::string tag =
        "explain_q" + std::to_string(query_record) + "_g" + std::to_string(gallery_record);
    json out{{"query_record", query_record},
             {"gallery_record", gallery_record},
             {"query_id", rec_i.id},
             {"gallery_id", rec_j.id},
             {"d", expl.distance},
             {"d_hat", expl.reconstructed},
             {"attribute_distances", expl.attribute_distances},
             {"contribution_ratios", expl.contribution_ratios},
             {"a_ij", expl.pairwise_attributes},
             {"m_e", expl.exclusive_count},
             {"degenerate", expl.degenerate},
             {"top3", top3}};
    std::ofstream os(fs::path(config.out_dir) / (tag + ".json"), std::ios::trunc);
    if (!os) throw DataError("cannot write explain report");
    os << out.dump(2) << "\n";

    // AAMs of the top-3 attributes for both images.
    std::vector<std::string> top_names;
    for (const auto& t : top3) top_names.push_back(t.at("attribute").get<std::string>());
    auto export_top = [&](const AAMStack& stack, const std::string& side) {
        const int h = stack.maps.dim(1), w = stack.maps.dim(2);
        const auto& vals = stack.maps.values();
        const double lo = *std::min_element(vals.begin(), vals.end());
        const double hi = *std::max_element(vals.begin(), vals.end());
        for (const auto& t : top3) {
            const int k = t.at("index").get<int>();
            std::vector<double> map(vals.begin() + static_cast<std::int64_t>(k) * h * w,
                                    vals.begin() + static_cast<std::int64_t>(k + 1) * h * w);
            write_pgm((fs::path(config.out_dir) /
                       (tag + "_" + side + "_" + names[static_cast<std::size_t>(k)] + ".pgm"))
                          .string(),
                      map, h, w, lo, hi);
        }
        json sidecar{{"min", lo}, {"max", hi}};
        std::ofstream sc(fs::path(config.out_dir) / (tag + "_" + side + "_aam_range.json"),
                         std::ios::trunc);
        sc << sidecar.dump(2) << "\n";
    };
    export_top(expl.aam_i, "query");
    export_top(expl.aam_j, "gallery");
    return out;
}

json run_evaluate(const RunConfig& config, bool with_reweight) {
    const DatasetSplit split = load_split(config);
    const Embedder target = load_target(config, split.schema);
    const Interpreter interp = load_interpreter(config, target);
    EvalOptions options;
    options.with_reweight = with_reweight;
    options.gamma = config.gamma;
    options.pair_dump_path = config.pair_dump;
    const MetricsReport report = evaluate_split(split, target, interp, options);
    fs::create_directories(config.out_dir);
    const std::string name = with_reweight ? "reweight_metrics.json" : "metrics.json";
    std::ofstream os(fs::path(config.out_dir) / name, std::ios::trunc);
    if (!os) throw DataError("cannot write metrics report");
    json j = report.to_json();
    os << j.dump(2) << "\n";
    return j;
}

void run_avg_attention(const RunConfig& config) {
    const DatasetSplit split = load_split(config);
    const Embedder target = load_target(config, split.schema);
    const Interpreter interp = load_interpreter(config, target);
    std::vector<PersonRecord> test_records = split.query;
    test_records.insert(test_records.end(), split.gallery.begin(), split.gallery.end());
    const AttentionAverages avg = average_attention(test_records, interp);

    const std::string dir = (fs::path(config.out_dir) / "avg_attention").string();
    fs::create_directories(dir);
    json sidecar;
    for (int k = 0; k < interp.config().attribute_count; ++k) {
        const std::string& name = split.schema.attributes[static_cast<std::size_t>(k)].name;
        for (const char* side : {"positive", "negative"}) {
            const auto& maps = side == std::string("positive") ? avg.positive : avg.negative;
            const auto& map = maps[static_cast<std::size_t>(k)];
            if (!map) {
                sidecar[name][side] = nullptr;  // no records on this side
                continue;
            }
            const double lo = *std::min_element(map->begin(), map->end());
            const double hi = *std::max_element(map->begin(), map->end());
            write_pgm((fs::path(dir) / (name + "_" + side + ".pgm")).string(), *map, avg.height,
                      avg.width, lo, hi);
            sidecar[name][side] = {{"min", lo}, {"max", hi}};
        }
    }
    std::ofstream os(fs::path(dir) / "ranges.json", std::ios::trunc);
    if (!os) throw DataError("cannot write avg-attention sidecar");
    os << sidecar.dump(2) << "\n";
}

}  // namespace amd
