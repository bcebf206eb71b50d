#include "amd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace amd {

namespace {

struct RankedAp {
    double ap = 0.0;
    bool valid = false;
    std::vector<int> order;  // gallery indices, best first
};

// AP over a ranked list with incremental precision-at-hit averaging.
RankedAp ranked_ap(const std::vector<double>& dist, const std::vector<char>& relevant,
                   const std::vector<char>& usable, bool ascending) {
    RankedAp out;
    out.order.reserve(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (usable[i]) out.order.push_back(static_cast<int>(i));
    if (ascending)
        std::stable_sort(out.order.begin(), out.order.end(),
                         [&dist](int a, int b) { return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)]; });
    else
        std::stable_sort(out.order.begin(), out.order.end(),
                         [&dist](int a, int b) { return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)]; });
    int n_rel = 0;
    for (int i : out.order) n_rel += relevant[static_cast<std::size_t>(i)] ? 1 : 0;
    if (n_rel == 0) return out;
    int hits = 0;
    double ap = 0.0;
    for (std::size_t rank = 0; rank < out.order.size(); ++rank) {
        if (relevant[static_cast<std::size_t>(out.order[rank])]) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    out.ap = ap / static_cast<double>(n_rel);
    out.valid = true;
    return out;
}

}  // namespace

RetrievalMetrics reid_eval(const std::vector<RetrievalItem>& queries,
                           const std::vector<RetrievalItem>& gallery,
                           const std::vector<double>& distances) {
    const std::size_t nq = queries.size(), ng = gallery.size();
    if (distances.size() != nq * ng) throw DimensionError("reid_eval: distance matrix shape mismatch");
    RetrievalMetrics metrics;
    double ap_sum = 0.0;
    int rank1_hits = 0, rank5_hits = 0;
    for (std::size_t q = 0; q < nq; ++q) {
        std::vector<double> row(distances.begin() + static_cast<std::int64_t>(q * ng),
                                distances.begin() + static_cast<std::int64_t>((q + 1) * ng));
        std::vector<char> usable(ng), relevant(ng);
        bool any_relevant = false;
        for (std::size_t g = 0; g < ng; ++g) {
            const bool same_id = gallery[g].id == queries[q].id;
            usable[g] = !(same_id && gallery[g].camera == queries[q].camera);
            relevant[g] = usable[g] && same_id;
            any_relevant = any_relevant || relevant[g];
        }
        if (!any_relevant) {
            ++metrics.skipped_queries;
            continue;
        }
        const RankedAp ranked = ranked_ap(row, relevant, usable, /*ascending=*/true);
        ap_sum += ranked.ap;
        for (std::size_t k = 0; k < ranked.order.size() && k < 5; ++k) {
            if (relevant[static_cast<std::size_t>(ranked.order[k])]) {
                if (k == 0) ++rank1_hits;
                ++rank5_hits;
                break;
            }
        }
        ++metrics.evaluated_queries;
    }
    if (metrics.evaluated_queries > 0) {
        metrics.rank1 = static_cast<double>(rank1_hits) / metrics.evaluated_queries;
        metrics.rank5 = static_cast<double>(rank5_hits) / metrics.evaluated_queries;
        metrics.mAP = ap_sum / metrics.evaluated_queries;
    }
    return metrics;
}

AdreResult adre(const std::vector<PairExplanation>& pairs) {
    AdreResult out;
    double sum = 0.0;
    for (const auto& p : pairs) {
        if (p.distance < 1e-6) {
            ++out.skipped;
            continue;
        }
        sum += std::fabs(p.distance - p.reconstructed) / p.distance;
        ++out.used;
    }
    if (out.used > 0) out.value = sum / out.used;
    return out;
}

XmapResult xmap(const std::vector<PairExplanation>& pairs, XmapMode mode) {
    XmapResult out;
    double sum = 0.0;
    for (const auto& p : pairs) {
        const int m = static_cast<int>(p.pairwise_attributes.size());
        if (p.exclusive_count == 0 || p.exclusive_count == m) {
            ++out.skipped;  // relevance set empty on one side
            continue;
        }
        std::vector<char> relevant(static_cast<std::size_t>(m)), usable(static_cast<std::size_t>(m), 1);
        for (int k = 0; k < m; ++k) {
            const bool exclusive = p.pairwise_attributes[static_cast<std::size_t>(k)] != 0;
            relevant[static_cast<std::size_t>(k)] = mode == XmapMode::Exclusive ? exclusive : !exclusive;
        }
        const RankedAp ranked = ranked_ap(p.attribute_distances, relevant, usable,
                                          /*ascending=*/mode == XmapMode::Common);
        sum += ranked.ap;
        ++out.used;
    }
    if (out.used > 0) out.value = sum / out.used;
    return out;
}

double reweight(double d, const PairExplanation& explanation, double gamma) {
    double max_excl = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < explanation.pairwise_attributes.size(); ++k) {
        if (!explanation.pairwise_attributes[k]) continue;
        const double dk = explanation.attribute_distances[k];
        if (!any || dk > max_excl) max_excl = dk;
        any = true;
    }
    return any ? d + gamma * max_excl : d;
}

AttentionAverages average_attention(const std::vector<PersonRecord>& records,
                                    const Interpreter& interpreter) {
    const int m = interpreter.config().attribute_count;
    AttentionAverages avg;
    avg.positive.resize(static_cast<std::size_t>(m));
    avg.negative.resize(static_cast<std::size_t>(m));
    std::vector<std::vector<double>> pos_sum(static_cast<std::size_t>(m));
    std::vector<std::vector<double>> neg_sum(static_cast<std::size_t>(m));
    std::vector<int> pos_n(static_cast<std::size_t>(m), 0), neg_n(static_cast<std::size_t>(m), 0);
    for (const auto& rec : records) {
        const AAMStack aams = interpreter.forward(rec.image);
        avg.height = aams.maps.dim(1);
        avg.width = aams.maps.dim(2);
        const std::size_t hw = static_cast<std::size_t>(avg.height) * avg.width;
        for (int k = 0; k < m; ++k) {
            auto& sum = rec.attributes[static_cast<std::size_t>(k)] ? pos_sum[static_cast<std::size_t>(k)]
                                                                    : neg_sum[static_cast<std::size_t>(k)];
            auto& n = rec.attributes[static_cast<std::size_t>(k)] ? pos_n[static_cast<std::size_t>(k)]
                                                                  : neg_n[static_cast<std::size_t>(k)];
            if (sum.empty()) sum.assign(hw, 0.0);
            const double* channel = aams.maps.values().data() + static_cast<std::size_t>(k) * hw;
            for (std::size_t i = 0; i < hw; ++i) sum[i] += channel[i];
            ++n;
        }
    }
    for (int k = 0; k < m; ++k) {
        if (pos_n[static_cast<std::size_t>(k)] > 0) {
            auto& s = pos_sum[static_cast<std::size_t>(k)];
            for (double& v : s) v /= pos_n[static_cast<std::size_t>(k)];
            avg.positive[static_cast<std::size_t>(k)] = std::move(s);
        }
        if (neg_n[static_cast<std::size_t>(k)] > 0) {
            auto& s = neg_sum[static_cast<std::size_t>(k)];
            for (double& v : s) v /= neg_n[static_cast<std::size_t>(k)];
            avg.negative[static_cast<std::size_t>(k)] = std::move(s);
        }
    }
    return avg;
}

std::vector<double> downscale_mask_area(const std::vector<std::uint8_t>& mask, int src_h, int src_w,
                                        int dst_h, int dst_w) {
    if (static_cast<std::size_t>(src_h) * src_w != mask.size())
        throw DimensionError("downscale_mask_area: mask size mismatch");
    if (dst_h <= 0 || dst_w <= 0 || dst_h > src_h || dst_w > src_w)
        throw DimensionError("downscale_mask_area: invalid target size");
    std::vector<double> out(static_cast<std::size_t>(dst_h) * dst_w, 0.0);
    const double sy = static_cast<double>(src_h) / dst_h;
    const double sx = static_cast<double>(src_w) / dst_w;
    for (int y = 0; y < dst_h; ++y) {
        const double y0 = y * sy, y1 = (y + 1) * sy;
        for (int x = 0; x < dst_w; ++x) {
            const double x0 = x * sx, x1 = (x + 1) * sx;
            double acc = 0.0;
            for (int iy = static_cast<int>(std::floor(y0)); iy < static_cast<int>(std::ceil(y1)); ++iy) {
                const double oy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
                if (oy <= 0.0) continue;
                for (int ix = static_cast<int>(std::floor(x0)); ix < static_cast<int>(std::ceil(x1)); ++ix) {
                    const double ox = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
                    if (ox <= 0.0) continue;
                    if (mask[static_cast<std::size_t>(iy) * src_w + ix]) acc += oy * ox;
                }
            }
            out[static_cast<std::size_t>(y) * dst_w + x] = acc / (sy * sx);
        }
    }
    return out;
}

std::vector<std::optional<double>> localization_scores(const PersonRecord& record,
                                                       const AAMStack& aams) {
    const int m = aams.attribute_count();
    if (static_cast<int>(record.region_masks.size()) != m)
        throw DimensionError("localization_scores: mask count does not match attribute count");
    const int h = aams.maps.dim(1), w = aams.maps.dim(2);
    const int src_h = record.image.dim(1), src_w = record.image.dim(2);
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<std::optional<double>> out(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        if (!record.attributes[static_cast<std::size_t>(k)]) continue;
        const std::vector<double> cover =
            downscale_mask_area(record.region_masks[static_cast<std::size_t>(k)], src_h, src_w, h, w);
        const double* channel = aams.maps.values().data() + static_cast<std::size_t>(k) * hw;
        double weighted = 0.0, weight = 0.0, total = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
            weighted += cover[i] * channel[i];
            weight += cover[i];
            total += channel[i];
        }
        if (weight <= 0.0) continue;  // mask vanished under downscaling
        const double inside_mean = weighted / weight;
        const double overall_mean = total / static_cast<double>(hw);
        if (overall_mean > 0.0) out[static_cast<std::size_t>(k)] = inside_mean / overall_mean;
    }
    return out;
}

nlohmann::json MetricsReport::to_json() const {
    auto retrieval_json = [](const RetrievalMetrics& r) {
        return nlohmann::json{{"rank1", r.rank1},
                              {"rank5", r.rank5},
                              {"mAP", r.mAP},
                              {"evaluated_queries", r.evaluated_queries},
                              {"skipped_queries", r.skipped_queries}};
    };
    nlohmann::json j;
    j["target"] = retrieval_json(target_retrieval);
    j["interpreter"] = retrieval_json(interpreter_retrieval);
    j["adre"] = adre.value ? nlohmann::json(*adre.value) : nlohmann::json();
    j["adre_pairs_used"] = adre.used;
    j["adre_pairs_skipped"] = adre.skipped;
    j["xmap_e"] = xmap_e.value ? nlohmann::json(*xmap_e.value) : nlohmann::json();
    j["xmap_c"] = xmap_c.value ? nlohmann::json(*xmap_c.value) : nlohmann::json();
    j["xmap_pairs_used"] = xmap_e.used;
    j["xmap_pairs_skipped"] = xmap_e.skipped;
    j["localization_mean"] =
        mean_localization ? nlohmann::json(*mean_localization) : nlohmann::json();
    j["localization_entries"] = localization_entries;
    if (reweighted_retrieval) {
        j["gamma"] = gamma;
        j["reweighted"] = retrieval_json(*reweighted_retrieval);
    }
    return j;
}

MetricsReport evaluate_split(const DatasetSplit& split, const Embedder& target,
                             const Interpreter& interpreter, const EvalOptions& options) {
    if (split.query.empty() || split.gallery.empty())
        throw DataError("evaluate_split: query and gallery must be non-empty");
    const int m = interpreter.config().attribute_count;

    struct ImageEval {
        std::vector<double> pooled_normalized;
        std::vector<std::vector<double>> attr_feats;  // M x C
        std::vector<std::optional<double>> loc;
        const PersonRecord* rec = nullptr;
    };
    auto eval_image = [&](const PersonRecord& rec, bool with_loc) {
        ImageEval e;
        e.rec = &rec;
        const FeatureBundle bundle = target.embed(rec.image);
        const AAMStack aams = interpreter.forward_from(bundle);
        const auto& pooled = bundle.pooled.values();
        double norm = 0.0;
        for (double v : pooled) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0) throw DegenerateFeatureError("evaluate_split: zero-norm pooled feature");
        e.pooled_normalized.resize(pooled.size());
        for (std::size_t i = 0; i < pooled.size(); ++i) e.pooled_normalized[i] = pooled[i] / norm;
        for (const Tensor& f : interpreter.attribute_features(bundle, aams))
            e.attr_feats.push_back(f.values());
        if (with_loc) e.loc = localization_scores(rec, aams);
        return e;
    };

    std::vector<ImageEval> q_eval, g_eval;
    q_eval.reserve(split.query.size());
    g_eval.reserve(split.gallery.size());
    for (const auto& rec : split.query) q_eval.push_back(eval_image(rec, options.with_localization));
    for (const auto& rec : split.gallery) g_eval.push_back(eval_image(rec, options.with_localization));

    auto euclid = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double e = a[i] - b[i];
            s += e * e;
        }
        return std::sqrt(s);
    };

    const std::size_t nq = q_eval.size(), ng = g_eval.size();
    std::vector<double> target_dist(nq * ng), recon_dist(nq * ng), reweight_dist;
    if (options.with_reweight) reweight_dist.assign(nq * ng, 0.0);

    std::vector<PairExplanation> all_pairs;
    std::vector<PairExplanation> cross_id_pairs;
    all_pairs.reserve(nq * ng);

    std::ofstream dump;
    if (!options.pair_dump_path.empty()) {
        dump.open(options.pair_dump_path, std::ios::trunc);
        if (!dump) throw DataError("cannot open pair dump: " + options.pair_dump_path);
    }

    double loc_sum = 0.0;
    int loc_count = 0;
    for (std::size_t q = 0; q < nq; ++q) {
        for (std::size_t g = 0; g < ng; ++g) {
            PairExplanation p;
            p.distance = euclid(q_eval[q].pooled_normalized, g_eval[g].pooled_normalized);
            p.attribute_distances.resize(static_cast<std::size_t>(m));
            double d_hat = 0.0;
            for (int k = 0; k < m; ++k) {
                p.attribute_distances[static_cast<std::size_t>(k)] =
                    euclid(q_eval[q].attr_feats[static_cast<std::size_t>(k)],
                           g_eval[g].attr_feats[static_cast<std::size_t>(k)]);
                d_hat += p.attribute_distances[static_cast<std::size_t>(k)];
            }
            p.reconstructed = d_hat;
            p.contribution_ratios.resize(static_cast<std::size_t>(m));
            if (d_hat > 0.0) {
                for (int k = 0; k < m; ++k)
                    p.contribution_ratios[static_cast<std::size_t>(k)] =
                        p.attribute_distances[static_cast<std::size_t>(k)] / d_hat;
            } else {
                p.degenerate = true;
                std::fill(p.contribution_ratios.begin(), p.contribution_ratios.end(), 1.0 / m);
            }
            auto [a_ij, m_e] = pairwise_xor(q_eval[q].rec->attributes, g_eval[g].rec->attributes);
            p.pairwise_attributes = std::move(a_ij);
            p.exclusive_count = m_e;

            target_dist[q * ng + g] = p.distance;
            recon_dist[q * ng + g] = p.reconstructed;
            if (options.with_reweight)
                reweight_dist[q * ng + g] = reweight(p.distance, p, options.gamma);

            const bool cross_id = q_eval[q].rec->id != g_eval[g].rec->id;
            if (cross_id && options.with_localization) {
                for (int k = 0; k < m; ++k) {
                    if (!p.pairwise_attributes[static_cast<std::size_t>(k)]) continue;
                    const ImageEval& side =
                        q_eval[q].rec->attributes[static_cast<std::size_t>(k)] ? q_eval[q] : g_eval[g];
                    const auto& score = side.loc[static_cast<std::size_t>(k)];
                    if (score) {
                        loc_sum += *score;
                        ++loc_count;
                    }
                }
            }
            if (dump.is_open()) {
                nlohmann::json row{{"query", q},
                                   {"gallery", g},
                                   {"d", p.distance},
                                   {"d_hat", p.reconstructed},
                                   {"attribute_distances", p.attribute_distances},
                                   {"ratios", p.contribution_ratios},
                                   {"a_ij", p.pairwise_attributes},
                                   {"m_e", p.exclusive_count},
                                   {"degenerate", p.degenerate}};
                dump << row.dump() << "\n";
            }
            if (cross_id) cross_id_pairs.push_back(p);
            all_pairs.push_back(std::move(p));
        }
    }

    std::vector<RetrievalItem> q_items, g_items;
    for (const auto& e : q_eval) q_items.push_back({e.rec->id, e.rec->camera});
    for (const auto& e : g_eval) g_items.push_back({e.rec->id, e.rec->camera});

    MetricsReport report;
    report.target_retrieval = reid_eval(q_items, g_items, target_dist);
    report.interpreter_retrieval = reid_eval(q_items, g_items, recon_dist);
    report.adre = adre(all_pairs);
    report.xmap_e = xmap(cross_id_pairs, XmapMode::Exclusive);
    report.xmap_c = xmap(cross_id_pairs, XmapMode::Common);
    if (options.with_localization && loc_count > 0) {
        report.mean_localization = loc_sum / loc_count;
        report.localization_entries = loc_count;
    }
    if (options.with_reweight) {
        report.gamma = options.gamma;
        report.reweighted_retrieval = reid_eval(q_items, g_items, reweight_dist);
    }
    return report;
}

}  // namespace amd
