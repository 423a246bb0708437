#pragma once

#include <string>
#include <vector>

#include "mip/clustering.hpp"
#include "mip/matrix.hpp"

namespace mip {

enum class WeightMode { learned, equal, exp_decay };
WeightMode weight_mode_from_string(const std::string& s);
std::string to_string(WeightMode m);

struct WeightConfig {
    WeightMode mode = WeightMode::learned;
    double epsilon = 0.01; // exp_decay rate
};

enum class LossKind { nll, triplet };
LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);

struct LossConfig {
    LossKind kind = LossKind::nll;
    double alpha = 0.5;       // triplet margin
    bool learned_beta = true; // triplet similarity rescale
};

/// Forward state of the learned cluster-weight FFN, kept for backward.
struct WeightCache {
    std::vector<std::vector<double>> input;  // per cluster: [z_lambda ; masked tau]
    std::vector<std::vector<double>> hidden; // tanh outputs
    std::vector<double> w;
};

/// w_lambda = w2 . tanh(w1 [z_lambda; masked tau] + b1) + b2, with the
/// timestamp block zero-padded to l_max rows of the temporal encoding.
WeightCache learned_weights(const Matrix& z, const ClusterAssignment& clusters, const Matrix& tau,
                            int l_max, const Matrix& w1, const Matrix& b1, const Matrix& w2,
                            const Matrix& b2);

/// PinnerSage-style heuristic: w_lambda = sum_{i in cluster} exp(-eps (t_now - t_i))
/// with t_now the last engagement time of the sequence.
std::vector<double> exp_decay_weights(const ClusterAssignment& clusters,
                                      const std::vector<double>& times, double epsilon);

std::vector<double> equal_weights(int num_clusters);

struct ScoredPair {
    double y = 0.0;           // raw max-aggregated score
    double probability = 0.5; // sigmoid(y)
    int argmax = 0;           // cluster that attains the max (lowest index on ties)
};

/// y = max_lambda scale * w_lambda * (z_lambda . p). Ties route to the lowest
/// cluster index so gradients are deterministic.
ScoredPair score(const Matrix& z, const std::vector<double>& w, const double* p, double scale = 1.0);

double sigmoid(double y);

/// Mean binary NLL over the given probabilities/labels; probabilities are
/// clamped away from {0,1} by 1e-12 inside the log only.
double nll_loss(const std::vector<double>& probabilities, const std::vector<int>& labels);

/// Mean hinge max(0, alpha + y_neg - y_pos) over index-paired triplets.
double triplet_loss(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                    double alpha);

} // namespace mip
