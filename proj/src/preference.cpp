#include "mip/preference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mip/error.hpp"

namespace mip {

WeightMode weight_mode_from_string(const std::string& s) {
    if (s == "learned") return WeightMode::learned;
    if (s == "equal") return WeightMode::equal;
    if (s == "exp_decay") return WeightMode::exp_decay;
    fail("config_invalid", "unknown weight mode: " + s);
}

std::string to_string(WeightMode m) {
    switch (m) {
        case WeightMode::learned: return "learned";
        case WeightMode::equal: return "equal";
        case WeightMode::exp_decay: return "exp_decay";
    }
    return "?";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "nll") return LossKind::nll;
    if (s == "triplet") return LossKind::triplet;
    fail("config_invalid", "unknown loss kind: " + s);
}

std::string to_string(LossKind k) {
    return k == LossKind::nll ? "nll" : "triplet";
}

WeightCache learned_weights(const Matrix& z, const ClusterAssignment& clusters, const Matrix& tau,
                            int l_max, const Matrix& w1, const Matrix& b1, const Matrix& w2,
                            const Matrix& b2) {
    const int lambda_count = z.rows;
    const int d = z.cols;
    const int dt = tau.cols;
    const int in_dim = d + l_max * dt;
    const int hidden = w1.rows;
    const int l = static_cast<int>(clusters.labels.size());

    WeightCache cache;
    cache.input.resize(static_cast<size_t>(lambda_count));
    cache.hidden.resize(static_cast<size_t>(lambda_count));
    cache.w.resize(static_cast<size_t>(lambda_count));

    for (int lam = 0; lam < lambda_count; ++lam) {
        auto& u = cache.input[static_cast<size_t>(lam)];
        u.assign(static_cast<size_t>(in_dim), 0.0);
        for (int c = 0; c < d; ++c) u[static_cast<size_t>(c)] = z(lam, c);
        for (int j = 0; j < l && j < l_max; ++j) {
            if (clusters.labels[static_cast<size_t>(j)] != lam) continue;
            for (int c = 0; c < dt; ++c) u[static_cast<size_t>(d + j * dt + c)] = tau(j, c);
        }
        auto& h = cache.hidden[static_cast<size_t>(lam)];
        h.assign(static_cast<size_t>(hidden), 0.0);
        for (int r = 0; r < hidden; ++r) {
            double acc = b1(0, r);
            const double* w1r = w1.row(r);
            for (int c = 0; c < in_dim; ++c) acc += w1r[c] * u[static_cast<size_t>(c)];
            h[static_cast<size_t>(r)] = std::tanh(acc);
        }
        double out = b2(0, 0);
        for (int r = 0; r < hidden; ++r) out += w2(0, r) * h[static_cast<size_t>(r)];
        cache.w[static_cast<size_t>(lam)] = out;
    }
    return cache;
}

std::vector<double> exp_decay_weights(const ClusterAssignment& clusters,
                                      const std::vector<double>& times, double epsilon) {
    if (epsilon <= 0.0) fail("config_invalid", "exp_decay epsilon must be > 0");
    double t_now = 0.0;
    for (double t : times) t_now = std::max(t_now, t);
    std::vector<double> w(static_cast<size_t>(clusters.num_clusters), 0.0);
    for (size_t i = 0; i < clusters.labels.size(); ++i)
        w[static_cast<size_t>(clusters.labels[i])] += std::exp(-epsilon * (t_now - times[i]));
    return w;
}

std::vector<double> equal_weights(int num_clusters) {
    return std::vector<double>(static_cast<size_t>(num_clusters), 1.0);
}

ScoredPair score(const Matrix& z, const std::vector<double>& w, const double* p, double scale) {
    ScoredPair out;
    double best = -std::numeric_limits<double>::infinity();
    for (int lam = 0; lam < z.rows; ++lam) {
        const double g = dot(z.row(lam), p, z.cols);
        const double v = scale * w[static_cast<size_t>(lam)] * g;
        if (v > best) {
            best = v;
            out.argmax = lam;
        }
    }
    out.y = best;
    out.probability = sigmoid(best);
    return out;
}

double sigmoid(double y) { return 1.0 / (1.0 + std::exp(-y)); }

double nll_loss(const std::vector<double>& probabilities, const std::vector<int>& labels) {
    double total = 0.0;
    for (size_t i = 0; i < probabilities.size(); ++i) {
        const double p = std::clamp(probabilities[i], 1e-12, 1.0 - 1e-12);
        total += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return probabilities.empty() ? 0.0 : total / static_cast<double>(probabilities.size());
}

double triplet_loss(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                    double alpha) {
    const size_t pairs = std::min(pos_scores.size(), neg_scores.size());
    if (pairs == 0) return 0.0;
    double total = 0.0;
    for (size_t i = 0; i < pairs; ++i)
        total += std::max(0.0, alpha + neg_scores[i] - pos_scores[i]);
    return total / static_cast<double>(pairs);
}

} // namespace mip
