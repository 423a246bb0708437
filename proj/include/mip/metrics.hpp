#pragma once

#include <map>
#include <string>
#include <vector>

#include "mip/data.hpp"
#include "mip/model.hpp"

namespace mip {

/// Pairwise-concordance AUC with 0.5 credit for ties, computed by rank sums
/// in O((m+n) log(m+n)). Matches the O(mn) pair loop exactly.
double auc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

/// ranked: candidate ids best-first. positives: the relevant set.
double recall_at_k(const std::vector<int>& ranked, const std::vector<int>& positives, int k);
double precision_at_k(const std::vector<int>& ranked, const std::vector<int>& positives, int k);
/// Binary-relevance nDCG: DCG = sum 1/log2(rank+1), normalized at k.
double ndcg_at_k(const std::vector<int>& ranked, const std::vector<int>& positives, int k);

struct EvalReport {
    double auc = 0.0;
    double nll = 0.0;
    std::map<int, double> recall;    // k -> mean recall
    std::map<int, double> ndcg;      // k -> mean ndcg
    std::map<int, double> precision; // k -> mean precision
    std::string cluster_method;
    int inference_clusters = 0;
    std::string weight_mode;
    int sequences = 0;
    double total_ms = 0.0;
    double clustering_ms = 0.0;
};

struct EvalOptions {
    const ClusteringConfig* clusterer = nullptr; // override; null = training clusterer
    WeightMode mode = WeightMode::learned;
    std::vector<int> k_values = {50};
};

/// Encode every test sequence (dropout off), re-cluster with the inference
/// clusterer, score all candidates, pool AUC/NLL over users and average the
/// top-k metrics per sequence. Deterministic; parallel across sequences.
EvalReport evaluate(const MipModel& model, const std::vector<SequenceExample>& sequences,
                    const EvalOptions& options);

struct LatencyProbe {
    std::string phase; // train_step | inference | clustering
    int samples = 0;
    double mean_ms = 0.0;
    double std_ms = 0.0;
};

/// Wall-clock per phase at batch size 1; the first 5 warm-up calls are
/// discarded. Clustering is timed inside inference and reported standalone.
std::vector<LatencyProbe> profile_latency(MipModel& model,
                                          const std::vector<SequenceExample>& sequences,
                                          int samples, WeightMode mode);

std::string eval_report_json(const EvalReport& report, bool stable);
std::string eval_report_markdown(const EvalReport& report);

} // namespace mip
