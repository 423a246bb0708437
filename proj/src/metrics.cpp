#include "mip/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "mip/error.hpp"
#include "mip/preference.hpp"

namespace mip {

using nlohmann::json;

double auc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    const size_t m = pos_scores.size();
    const size_t n = neg_scores.size();
    if (m == 0 || n == 0) fail("empty_input", "auc needs both positive and negative scores");

    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> all;
    all.reserve(m + n);
    for (double s : pos_scores) all.push_back({s, true});
    for (double s : neg_scores) all.push_back({s, false});
    std::sort(all.begin(), all.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // Average ranks over tie groups; the positive rank sum then carries
    // concordant pairs plus half the tied pairs exactly.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < all.size()) {
        size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t t = i; t < j; ++t)
            if (all[t].positive) rank_sum_pos += avg_rank;
        i = j;
    }
    const double md = static_cast<double>(m);
    const double numerator = rank_sum_pos - md * (md + 1.0) / 2.0;
    return numerator / (md * static_cast<double>(n));
}

static int hits_in_top_k(const std::vector<int>& ranked, const std::vector<int>& positives,
                         int k) {
    std::unordered_set<int> pos(positives.begin(), positives.end());
    int hits = 0;
    const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
    for (int i = 0; i < limit; ++i)
        if (pos.count(ranked[static_cast<size_t>(i)]) != 0) ++hits;
    return hits;
}

double recall_at_k(const std::vector<int>& ranked, const std::vector<int>& positives, int k) {
    if (positives.empty()) return 0.0;
    return static_cast<double>(hits_in_top_k(ranked, positives, k)) /
           static_cast<double>(positives.size());
}

double precision_at_k(const std::vector<int>& ranked, const std::vector<int>& positives, int k) {
    if (k <= 0) return 0.0;
    return static_cast<double>(hits_in_top_k(ranked, positives, k)) / static_cast<double>(k);
}

double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& positives, int k) {
    if (positives.empty()) return 0.0;
    std::unordered_set<int> pos(positives.begin(), positives.end());
    double dcg = 0.0;
    const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
    for (int i = 0; i < limit; ++i)
        if (pos.count(ranked[static_cast<size_t>(i)]) != 0)
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    double ideal = 0.0;
    const int ideal_hits = std::min<int>(k, static_cast<int>(positives.size()));
    for (int i = 0; i < ideal_hits; ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

EvalReport evaluate(const MipModel& model, const std::vector<SequenceExample>& sequences,
                    const EvalOptions& options) {
    if (sequences.empty()) fail("empty_input", "evaluate: no sequences");
    if (options.mode == WeightMode::learned &&
        model.params().find("wffn.w1") == nullptr)
        fail("config_invalid", "weight_mode=learned but the model has no weight FFN");

    const int n = static_cast<int>(sequences.size());
    struct PerSeq {
        std::vector<double> pos_scores, neg_scores;
        std::map<int, double> recall, ndcg, precision;
        double nll_sum = 0.0;
        long nll_count = 0;
        double clustering_ms = 0.0;
    };
    std::vector<PerSeq> results(static_cast<size_t>(n));

    const auto t0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
        const SequenceExample& ex = sequences[static_cast<size_t>(s)];
        PerSeq& out = results[static_cast<size_t>(s)];

        MipModel::EncodeOptions opts;
        opts.clusterer = options.clusterer;
        opts.clustering_ms = &out.clustering_ms;
        EncodeCache cache = model.encode(ex.items, ex.times, opts);
        WeightCache wc = model.compute_weights(cache, options.mode);

        std::vector<int> candidates = ex.positives;
        candidates.insert(candidates.end(), ex.negatives.begin(), ex.negatives.end());
        const auto scored = model.score_candidates(cache, wc.w, candidates);

        for (size_t c = 0; c < candidates.size(); ++c) {
            const bool positive = c < ex.positives.size();
            (positive ? out.pos_scores : out.neg_scores).push_back(scored[c].y);
            const double p = std::clamp(scored[c].probability, 1e-12, 1.0 - 1e-12);
            out.nll_sum += positive ? -std::log(p) : -std::log(1.0 - p);
            ++out.nll_count;
        }

        // Rank candidates best-first; ties by candidate order for determinism.
        std::vector<size_t> order(candidates.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return scored[a].y > scored[b].y; });
        std::vector<int> ranked;
        ranked.reserve(order.size());
        for (size_t idx : order) ranked.push_back(candidates[idx]);
        for (int k : options.k_values) {
            out.recall[k] = recall_at_k(ranked, ex.positives, k);
            out.ndcg[k] = ndcg_at_k(ranked, ex.positives, k);
            out.precision[k] = precision_at_k(ranked, ex.positives, k);
        }
    }
    const auto t1 = std::chrono::steady_clock::now();

    EvalReport report;
    report.sequences = n;
    report.total_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    std::vector<double> all_pos, all_neg;
    double nll_sum = 0.0;
    long nll_count = 0;
    for (const auto& r : results) {
        all_pos.insert(all_pos.end(), r.pos_scores.begin(), r.pos_scores.end());
        all_neg.insert(all_neg.end(), r.neg_scores.begin(), r.neg_scores.end());
        nll_sum += r.nll_sum;
        nll_count += r.nll_count;
        report.clustering_ms += r.clustering_ms;
    }
    report.auc = auc(all_pos, all_neg);
    report.nll = nll_sum / static_cast<double>(nll_count);
    for (int k : options.k_values) {
        double rec = 0.0, nd = 0.0, prec = 0.0;
        for (const auto& r : results) {
            rec += r.recall.at(k);
            nd += r.ndcg.at(k);
            prec += r.precision.at(k);
        }
        report.recall[k] = rec / n;
        report.ndcg[k] = nd / n;
        report.precision[k] = prec / n;
    }
    const ClusteringConfig& clu =
        options.clusterer != nullptr ? *options.clusterer : model.spec().clusterer;
    report.cluster_method = to_string(clu.method);
    report.inference_clusters = clu.method == ClusterMethod::none ? 0 : clu.k;
    report.weight_mode = to_string(options.mode);
    return report;
}

// ---------------------------------------------------------------------------
// Latency
// ---------------------------------------------------------------------------

static LatencyProbe summarize(const std::string& phase, const std::vector<double>& samples_ms) {
    LatencyProbe probe;
    probe.phase = phase;
    probe.samples = static_cast<int>(samples_ms.size());
    if (samples_ms.empty()) return probe;
    double sum = 0.0;
    for (double v : samples_ms) sum += v;
    probe.mean_ms = sum / static_cast<double>(samples_ms.size());
    if (samples_ms.size() > 1) {
        double sq = 0.0;
        for (double v : samples_ms) sq += (v - probe.mean_ms) * (v - probe.mean_ms);
        probe.std_ms = std::sqrt(sq / static_cast<double>(samples_ms.size() - 1));
    }
    return probe;
}

std::vector<LatencyProbe> profile_latency(MipModel& model,
                                          const std::vector<SequenceExample>& sequences,
                                          int samples, WeightMode mode) {
    if (sequences.empty()) fail("empty_input", "profile_latency: no sequences");
    constexpr int kWarmup = 5;
    using Clock = std::chrono::steady_clock;

    std::vector<double> infer_ms, cluster_ms, train_ms;
    for (int s = 0; s < samples + kWarmup; ++s) {
        const SequenceExample& ex = sequences[static_cast<size_t>(s) % sequences.size()];
        double clustering = 0.0;
        MipModel::EncodeOptions opts;
        opts.clustering_ms = &clustering;
        const auto t0 = Clock::now();
        EncodeCache cache = model.encode(ex.items, ex.times, opts);
        WeightCache wc = model.compute_weights(cache, mode);
        std::vector<int> candidates = ex.positives;
        candidates.insert(candidates.end(), ex.negatives.begin(), ex.negatives.end());
        double sum = 0.0;
        for (const auto& sp : model.score_candidates(cache, wc.w, candidates)) sum += sp.y;
        volatile double sink = sum; // keep the scoring work observable
        (void)sink;
        const auto t1 = Clock::now();
        if (s >= kWarmup) {
            infer_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            cluster_ms.push_back(clustering);
        }
    }

    // One optimizer-driven step per sample at batch size 1, on a scratch
    // copy so profiling does not disturb the model.
    const auto snapshot = model.params().snapshot_values();
    Adam adam;
    for (int s = 0; s < samples + kWarmup; ++s) {
        const SequenceExample& ex = sequences[static_cast<size_t>(s) % sequences.size()];
        const auto t0 = Clock::now();
        model.params().zero_grads();
        model.train_batch({&ex}, mode, Rng::mix(0xbe9c4, static_cast<uint64_t>(s)));
        adam.step(model.params());
        const auto t1 = Clock::now();
        if (s >= kWarmup)
            train_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    model.params().restore_values(snapshot);
    model.params().zero_grads();

    return {summarize("train_step", train_ms), summarize("inference", infer_ms),
            summarize("clustering", cluster_ms)};
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

std::string eval_report_json(const EvalReport& report, bool stable) {
    json j;
    j["auc"] = report.auc;
    j["nll"] = report.nll;
    for (const auto& [k, v] : report.recall) j["recall"][std::to_string(k)] = v;
    for (const auto& [k, v] : report.ndcg) j["ndcg"][std::to_string(k)] = v;
    for (const auto& [k, v] : report.precision) j["precision"][std::to_string(k)] = v;
    j["cluster_method"] = report.cluster_method;
    j["inference_clusters"] = report.inference_clusters;
    j["weight_mode"] = report.weight_mode;
    j["sequences"] = report.sequences;
    if (!stable) {
        j["total_ms"] = report.total_ms;
        j["clustering_ms"] = report.clustering_ms;
    }
    return j.dump(2);
}

std::string eval_report_markdown(const EvalReport& report) {
    std::ostringstream out;
    out << "| method | clusters | weights | AUC | NLL";
    for (const auto& [k, v] : report.recall) {
        (void)v;
        out << " | recall@" << k << " | nDCG@" << k << " | precision@" << k;
    }
    out << " |\n|";
    int cols = 5 + 3 * static_cast<int>(report.recall.size());
    for (int i = 0; i < cols; ++i) out << "---|";
    out << "\n| " << report.cluster_method << " | "
        << (report.inference_clusters > 0 ? std::to_string(report.inference_clusters) : "-")
        << " | " << report.weight_mode << " | " << report.auc << " | " << report.nll;
    for (const auto& [k, v] : report.recall)
        out << " | " << v << " | " << report.ndcg.at(k) << " | " << report.precision.at(k);
    out << " |\n";
    return out.str();
}

} // namespace mip
