#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amd/interpreter.hpp"
#include "amd/synth_data.hpp"

namespace amd {

struct RetrievalItem {
    int id = 0;
    int camera = 0;
};

struct RetrievalMetrics {
    double rank1 = 0.0;
    double rank5 = 0.0;
    double mAP = 0.0;
    int evaluated_queries = 0;
    int skipped_queries = 0;
};

/// Standard ReID protocol: per query, rank the gallery ascending by
/// distance with stable index tie-break, excluding same-ID same-camera
/// entries; queries without any usable correct match are skipped.
RetrievalMetrics reid_eval(const std::vector<RetrievalItem>& queries,
                           const std::vector<RetrievalItem>& gallery,
                           const std::vector<double>& distances /* |Q| x |G| row-major */);

struct AdreResult {
    std::optional<double> value;  // absent when every pair was skipped
    int used = 0;
    int skipped = 0;
};

/// Mean of |d - d_hat| / d over pairs with d >= 1e-6.
AdreResult adre(const std::vector<PairExplanation>& pairs);

enum class XmapMode { Exclusive, Common };

struct XmapResult {
    std::optional<double> value;
    int used = 0;
    int skipped = 0;  // pairs with M_E in {0, M}
};

/// Mean AP of ranking the M attribute distances (descending for exclusive
/// relevance, ascending for common) with stable attribute-index tie-break.
/// Callers pass cross-ID pairs only.
XmapResult xmap(const std::vector<PairExplanation>& pairs, XmapMode mode);

/// Eq-style linear re-weighting: d' = d + gamma * max over exclusive
/// attribute distances (d' = d when M_E = 0).
double reweight(double d, const PairExplanation& explanation, double gamma);

struct AttentionAverages {
    int height = 0;
    int width = 0;
    // per attribute: mean AAM channel over records with / without the bit.
    std::vector<std::optional<std::vector<double>>> positive;
    std::vector<std::optional<std::vector<double>>> negative;
};

AttentionAverages average_attention(const std::vector<PersonRecord>& records,
                                    const Interpreter& interpreter);

/// Exact area pooling of a binary H x W mask down to h x w fractional
/// coverage values in [0, 1].
std::vector<double> downscale_mask_area(const std::vector<std::uint8_t>& mask, int src_h, int src_w,
                                        int dst_h, int dst_w);

/// Per positive attribute: (coverage-weighted mean attention inside the
/// downscaled mask) / (mean attention over the whole map). Absent for
/// negative attributes and for masks that downscale to zero coverage.
std::vector<std::optional<double>> localization_scores(const PersonRecord& record,
                                                       const AAMStack& aams);

struct MetricsReport {
    RetrievalMetrics target_retrieval;
    RetrievalMetrics interpreter_retrieval;  // retrieval by reconstructed d_hat
    AdreResult adre;
    XmapResult xmap_e;
    XmapResult xmap_c;
    std::optional<double> mean_localization;  // over exclusive positive attributes of test pairs
    int localization_entries = 0;
    double gamma = 0.0;
    std::optional<RetrievalMetrics> reweighted_retrieval;

    nlohmann::json to_json() const;
};

struct EvalOptions {
    bool with_reweight = false;
    double gamma = 1.0;
    bool with_localization = true;
    std::string pair_dump_path;  // JSONL per-pair dump when non-empty
};

/// Full evaluation over the split's query x gallery pairs.
MetricsReport evaluate_split(const DatasetSplit& split, const Embedder& target,
                             const Interpreter& interpreter, const EvalOptions& options = {});

}  // namespace amd
