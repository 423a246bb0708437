#pragma once

#include <string>
#include <vector>

#include "mip/matrix.hpp"
#include "mip/rng.hpp"

namespace mip {

/// Per-point cluster labels, dense ids 0..num_clusters-1 in first-occurrence
/// order; every cluster is nonempty.
struct ClusterAssignment {
    std::vector<int> labels;
    int num_clusters = 0;
};

/// l x l binary co-cluster mask; symmetric with all-ones diagonal.
struct Mask {
    Matrix m;
};

ClusterAssignment ward(const Matrix& points, int k);
ClusterAssignment kmeans(const Matrix& points, int k, int max_iters, Rng& rng,
                         std::vector<double>* wcss_history = nullptr);
ClusterAssignment spectral(const Matrix& points, int k, double gamma = -1.0);
ClusterAssignment birch(const Matrix& points, double threshold, int branching, int k);
ClusterAssignment dbscan(const Matrix& points, double eps, int min_pts);

Mask assignment_to_mask(const ClusterAssignment& c);
/// mu[lambda] = highest position carrying label lambda.
std::vector<int> last_indices(const ClusterAssignment& c);
std::vector<std::vector<int>> member_lists(const ClusterAssignment& c);

/// Remap arbitrary nonnegative labels to dense ids in first-occurrence order.
ClusterAssignment compact_labels(const std::vector<int>& raw);

double wcss(const Matrix& points, const ClusterAssignment& c);

enum class ClusterMethod { none, ward, kmeans, spectral, birch, dbscan };
ClusterMethod cluster_method_from_string(const std::string& s);
std::string to_string(ClusterMethod m);

struct ClusteringConfig {
    ClusterMethod method = ClusterMethod::ward;
    int k = 5;
    double eps = 0.5;       // dbscan
    int min_pts = 5;        // dbscan
    double threshold = 0.5; // birch
    int branching = 50;     // birch
    double gamma = -1.0;    // spectral; <0 means 1/dim
    uint64_t seed = 1;      // kmeans seeding

    void validate() const;
};

/// Dispatch on method. method=none gives every point its own cluster.
/// k is clamped to the point count with a warning.
ClusterAssignment run_clustering(const Matrix& points, const ClusteringConfig& cfg);

} // namespace mip
