#include "mip/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>

#include "mip/eigen.hpp"
#include "mip/error.hpp"
#include "mip/log.hpp"

namespace mip {

ClusterAssignment compact_labels(const std::vector<int>& raw) {
    ClusterAssignment out;
    out.labels.resize(raw.size(), -1);
    std::vector<int> remap;
    for (size_t i = 0; i < raw.size(); ++i) {
        const int r = raw[i];
        int id = -1;
        for (size_t j = 0; j < remap.size(); ++j)
            if (remap[j] == r) {
                id = static_cast<int>(j);
                break;
            }
        if (id < 0) {
            id = static_cast<int>(remap.size());
            remap.push_back(r);
        }
        out.labels[i] = id;
    }
    out.num_clusters = static_cast<int>(remap.size());
    return out;
}

Mask assignment_to_mask(const ClusterAssignment& c) {
    const int l = static_cast<int>(c.labels.size());
    Mask mask;
    mask.m = Matrix(l, l);
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j)
            mask.m(i, j) = (c.labels[static_cast<size_t>(i)] == c.labels[static_cast<size_t>(j)]) ? 1.0 : 0.0;
    return mask;
}

std::vector<int> last_indices(const ClusterAssignment& c) {
    std::vector<int> mu(static_cast<size_t>(c.num_clusters), -1);
    for (size_t j = 0; j < c.labels.size(); ++j)
        mu[static_cast<size_t>(c.labels[j])] = static_cast<int>(j);
    return mu;
}

std::vector<std::vector<int>> member_lists(const ClusterAssignment& c) {
    std::vector<std::vector<int>> lists(static_cast<size_t>(c.num_clusters));
    for (size_t j = 0; j < c.labels.size(); ++j)
        lists[static_cast<size_t>(c.labels[j])].push_back(static_cast<int>(j));
    return lists;
}

double wcss(const Matrix& points, const ClusterAssignment& c) {
    std::vector<std::vector<double>> centroids(
        static_cast<size_t>(c.num_clusters),
        std::vector<double>(static_cast<size_t>(points.cols), 0.0));
    std::vector<int> counts(static_cast<size_t>(c.num_clusters), 0);
    for (int i = 0; i < points.rows; ++i) {
        auto& cen = centroids[static_cast<size_t>(c.labels[static_cast<size_t>(i)])];
        ++counts[static_cast<size_t>(c.labels[static_cast<size_t>(i)])];
        for (int d = 0; d < points.cols; ++d) cen[static_cast<size_t>(d)] += points(i, d);
    }
    for (int g = 0; g < c.num_clusters; ++g)
        for (int d = 0; d < points.cols; ++d)
            centroids[static_cast<size_t>(g)][static_cast<size_t>(d)] /= counts[static_cast<size_t>(g)];
    double total = 0.0;
    for (int i = 0; i < points.rows; ++i) {
        const auto& cen = centroids[static_cast<size_t>(c.labels[static_cast<size_t>(i)])];
        for (int d = 0; d < points.cols; ++d) {
            const double diff = points(i, d) - cen[static_cast<size_t>(d)];
            total += diff * diff;
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Ward (agglomerative, Lance-Williams update on squared distances)
// ---------------------------------------------------------------------------

ClusterAssignment ward(const Matrix& points, int k) {
    const int n = points.rows;
    if (k < 1 || k > n)
        fail("invalid_k", "ward: k=" + std::to_string(k) + " out of range for " +
                              std::to_string(n) + " points");
    Matrix d = pairwise_sq_dists(points);
    std::vector<bool> active(static_cast<size_t>(n), true);
    std::vector<int> size(static_cast<size_t>(n), 1);
    std::vector<int> rep(static_cast<size_t>(n)); // point -> representative index
    for (int i = 0; i < n; ++i) rep[static_cast<size_t>(i)] = i;

    int clusters = n;
    while (clusters > k) {
        // Smallest Ward distance; ties broken by smallest (i, j).
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!active[static_cast<size_t>(i)]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!active[static_cast<size_t>(j)]) continue;
                if (d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        const double dij = d(bi, bj);
        const int ni = size[static_cast<size_t>(bi)];
        const int nj = size[static_cast<size_t>(bj)];
        for (int r = 0; r < n; ++r) {
            if (!active[static_cast<size_t>(r)] || r == bi || r == bj) continue;
            const int nr = size[static_cast<size_t>(r)];
            const double merged = ((ni + nr) * d(bi, r) + (nj + nr) * d(bj, r) - nr * dij) /
                                  static_cast<double>(ni + nj + nr);
            d(bi, r) = merged;
            d(r, bi) = merged;
        }
        size[static_cast<size_t>(bi)] = ni + nj;
        active[static_cast<size_t>(bj)] = false;
        for (int p = 0; p < n; ++p)
            if (rep[static_cast<size_t>(p)] == bj) rep[static_cast<size_t>(p)] = bi;
        --clusters;
    }
    return compact_labels(rep);
}

// ---------------------------------------------------------------------------
// K-Means (k-means++ seeding, Lloyd iterations)
// ---------------------------------------------------------------------------

static int nearest_centroid(const Matrix& points, int i, const Matrix& centroids) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int c = 0; c < centroids.rows; ++c) {
        double s = 0.0;
        for (int d = 0; d < points.cols; ++d) {
            const double diff = points(i, d) - centroids(c, d);
            s += diff * diff;
        }
        if (s < bd) {
            bd = s;
            best = c;
        }
    }
    return best;
}

ClusterAssignment kmeans(const Matrix& points, int k, int max_iters, Rng& rng,
                         std::vector<double>* wcss_history) {
    const int n = points.rows;
    if (k < 1 || k > n)
        fail("invalid_k", "kmeans: k=" + std::to_string(k) + " out of range for " +
                              std::to_string(n) + " points");

    // k-means++ seeding
    Matrix centroids(k, points.cols);
    std::vector<double> d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
    int first = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
    for (int d = 0; d < points.cols; ++d) centroids(0, d) = points(first, d);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int d = 0; d < points.cols; ++d) {
                const double diff = points(i, d) - centroids(c - 1, d);
                s += diff * diff;
            }
            d2[static_cast<size_t>(i)] = std::min(d2[static_cast<size_t>(i)], s);
            total += d2[static_cast<size_t>(i)];
        }
        int chosen;
        if (total <= 0.0) {
            chosen = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
        } else {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2[static_cast<size_t>(i)];
                if (u < acc) {
                    chosen = i;
                    break;
                }
            }
        }
        for (int d = 0; d < points.cols; ++d) centroids(c, d) = points(chosen, d);
    }

    std::vector<int> labels(static_cast<size_t>(n), -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            const int c = nearest_centroid(points, i, centroids);
            if (c != labels[static_cast<size_t>(i)]) {
                labels[static_cast<size_t>(i)] = c;
                changed = true;
            }
        }
        // Update step; an empty cluster is reseeded to the point farthest
        // from its current centroid.
        Matrix sums(k, points.cols);
        std::vector<int> counts(static_cast<size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            ++counts[static_cast<size_t>(labels[static_cast<size_t>(i)])];
            for (int d = 0; d < points.cols; ++d) sums(labels[static_cast<size_t>(i)], d) += points(i, d);
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                for (int d = 0; d < points.cols; ++d)
                    centroids(c, d) = sums(c, d) / counts[static_cast<size_t>(c)];
            } else {
                int far = 0;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (int d = 0; d < points.cols; ++d) {
                        const double diff = points(i, d) - centroids(labels[static_cast<size_t>(i)], d);
                        s += diff * diff;
                    }
                    if (s > fd) {
                        fd = s;
                        far = i;
                    }
                }
                for (int d = 0; d < points.cols; ++d) centroids(c, d) = points(far, d);
            }
        }
        if (wcss_history != nullptr) {
            ClusterAssignment tmp;
            tmp.labels = labels;
            tmp.num_clusters = k;
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int d = 0; d < points.cols; ++d) {
                    const double diff = points(i, d) - centroids(labels[static_cast<size_t>(i)], d);
                    total += diff * diff;
                }
            }
            wcss_history->push_back(total);
        }
        if (!changed && iter > 0) break;
    }
    return compact_labels(labels);
}

// ---------------------------------------------------------------------------
// Spectral (RBF affinity, symmetric normalized Laplacian, k-means on rows)
// ---------------------------------------------------------------------------

ClusterAssignment spectral(const Matrix& points, int k, double gamma) {
    const int n = points.rows;
    if (k < 1 || k > n)
        fail("invalid_k", "spectral: k=" + std::to_string(k) + " out of range for " +
                              std::to_string(n) + " points");
    if (gamma <= 0.0) gamma = 1.0 / points.cols;

    Matrix d2 = pairwise_sq_dists(points);
    double max_d2 = 0.0;
    for (double v : d2.data) max_d2 = std::max(max_d2, v);
    if (max_d2 < 1e-24) {
        MIP_WARN("spectral: all points identical; collapsing %d requested clusters to 1", k);
        ClusterAssignment out;
        out.labels.assign(static_cast<size_t>(n), 0);
        out.num_clusters = 1;
        return out;
    }

    Matrix lap(n, n);
    std::vector<double> deg(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) deg[static_cast<size_t>(i)] += std::exp(-gamma * d2(i, j));
    for (int i = 0; i < n; ++i) {
        const double di = 1.0 / std::sqrt(deg[static_cast<size_t>(i)]);
        for (int j = 0; j < n; ++j) {
            const double dj = 1.0 / std::sqrt(deg[static_cast<size_t>(j)]);
            const double norm_aff = std::exp(-gamma * d2(i, j)) * di * dj;
            lap(i, j) = (i == j ? 1.0 : 0.0) - norm_aff;
        }
    }

    const EigenResult eig = jacobi_eigen_symmetric(lap);
    Matrix embed(n, k);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < k; ++c) embed(i, c) = eig.vectors(i, c);
    for (int i = 0; i < n; ++i) {
        double norm = std::sqrt(dot(embed.row(i), embed.row(i), k));
        if (norm > 1e-12)
            for (int c = 0; c < k; ++c) embed(i, c) /= norm;
    }

    // Fixed internal seed keeps spectral(points, k) a pure function.
    Rng rng(0x5eedf00dULL);
    return kmeans(embed, k, 100, rng, nullptr);
}

// ---------------------------------------------------------------------------
// BIRCH (CF tree + Ward refinement of leaf subcluster centroids)
// ---------------------------------------------------------------------------

namespace {

struct CF {
    double n = 0.0;
    std::vector<double> ls; // linear sum
    double ss = 0.0;        // sum of squared norms

    void add_point(const double* p, int dim) {
        if (ls.empty()) ls.assign(static_cast<size_t>(dim), 0.0);
        n += 1.0;
        for (int d = 0; d < dim; ++d) {
            ls[static_cast<size_t>(d)] += p[d];
            ss += p[d] * p[d];
        }
    }

    void merge(const CF& o) {
        if (ls.empty()) ls.assign(o.ls.size(), 0.0);
        n += o.n;
        for (size_t d = 0; d < ls.size(); ++d) ls[d] += o.ls[d];
        ss += o.ss;
    }

    double radius_sq() const {
        double c2 = 0.0;
        for (double v : ls) c2 += v * v;
        c2 /= n * n;
        const double r2 = ss / n - c2;
        return r2 > 0.0 ? r2 : 0.0;
    }

    double centroid_dist_sq(const double* p, int dim) const {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double diff = ls[static_cast<size_t>(d)] / n - p[d];
            s += diff * diff;
        }
        return s;
    }

    double centroid_dist_sq(const CF& o) const {
        double s = 0.0;
        for (size_t d = 0; d < ls.size(); ++d) {
            const double diff = ls[d] / n - o.ls[d] / o.n;
            s += diff * diff;
        }
        return s;
    }
};

struct BirchNode {
    bool leaf = true;
    std::vector<CF> entries;
    std::vector<std::unique_ptr<BirchNode>> children; // internal nodes only
};

struct SplitResult {
    std::unique_ptr<BirchNode> sibling; // null when no split happened
    CF sibling_cf;
};

CF node_cf(const BirchNode& node) {
    CF total;
    for (const auto& e : node.entries) total.merge(e);
    return total;
}

// Split entries across two nodes seeded by the farthest entry pair.
std::unique_ptr<BirchNode> split_node(BirchNode& node) {
    int si = 0, sj = 1;
    double far = -1.0;
    for (size_t i = 0; i < node.entries.size(); ++i)
        for (size_t j = i + 1; j < node.entries.size(); ++j) {
            const double dist = node.entries[i].centroid_dist_sq(node.entries[j]);
            if (dist > far) {
                far = dist;
                si = static_cast<int>(i);
                sj = static_cast<int>(j);
            }
        }
    auto sibling = std::make_unique<BirchNode>();
    sibling->leaf = node.leaf;
    std::vector<CF> old_entries = std::move(node.entries);
    std::vector<std::unique_ptr<BirchNode>> old_children = std::move(node.children);
    node.entries.clear();
    node.children.clear();
    const CF seed_a = old_entries[static_cast<size_t>(si)];
    const CF seed_b = old_entries[static_cast<size_t>(sj)];
    for (size_t i = 0; i < old_entries.size(); ++i) {
        const double da = old_entries[i].centroid_dist_sq(seed_a);
        const double db = old_entries[i].centroid_dist_sq(seed_b);
        BirchNode& target = (da <= db) ? node : *sibling;
        target.entries.push_back(std::move(old_entries[i]));
        if (!old_children.empty()) target.children.push_back(std::move(old_children[i]));
    }
    // Both halves must be nonempty; the seeds guarantee that.
    return sibling;
}

SplitResult birch_insert(BirchNode& node, const double* p, int dim, double threshold,
                         int branching) {
    SplitResult result;
    if (node.leaf) {
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (size_t e = 0; e < node.entries.size(); ++e) {
            const double dist = node.entries[e].centroid_dist_sq(p, dim);
            if (dist < bd) {
                bd = dist;
                best = static_cast<int>(e);
            }
        }
        bool absorbed = false;
        if (best >= 0) {
            CF trial = node.entries[static_cast<size_t>(best)];
            trial.add_point(p, dim);
            if (trial.radius_sq() <= threshold * threshold) {
                node.entries[static_cast<size_t>(best)] = trial;
                absorbed = true;
            }
        }
        if (!absorbed) {
            CF fresh;
            fresh.add_point(p, dim);
            node.entries.push_back(fresh);
        }
    } else {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (size_t e = 0; e < node.entries.size(); ++e) {
            const double dist = node.entries[e].centroid_dist_sq(p, dim);
            if (dist < bd) {
                bd = dist;
                best = static_cast<int>(e);
            }
        }
        SplitResult child_split =
            birch_insert(*node.children[static_cast<size_t>(best)], p, dim, threshold, branching);
        node.entries[static_cast<size_t>(best)] = node_cf(*node.children[static_cast<size_t>(best)]);
        if (child_split.sibling != nullptr) {
            node.entries.push_back(child_split.sibling_cf);
            node.children.push_back(std::move(child_split.sibling));
        }
    }
    if (static_cast<int>(node.entries.size()) > branching) {
        result.sibling = split_node(node);
        result.sibling_cf = node_cf(*result.sibling);
    }
    return result;
}

void collect_leaf_entries(const BirchNode& node, std::vector<CF>& out) {
    if (node.leaf) {
        for (const auto& e : node.entries) out.push_back(e);
        return;
    }
    for (const auto& c : node.children) collect_leaf_entries(*c, out);
}

} // namespace

ClusterAssignment birch(const Matrix& points, double threshold, int branching, int k) {
    const int n = points.rows;
    if (threshold <= 0.0) fail("invalid_threshold", "birch: threshold must be > 0");
    if (branching < 2) fail("invalid_branching", "birch: branching must be >= 2");
    if (k < 1 || k > n)
        fail("invalid_k", "birch: k=" + std::to_string(k) + " out of range for " +
                              std::to_string(n) + " points");

    auto root = std::make_unique<BirchNode>();
    for (int i = 0; i < n; ++i) {
        SplitResult split = birch_insert(*root, points.row(i), points.cols, threshold, branching);
        if (split.sibling != nullptr) {
            auto new_root = std::make_unique<BirchNode>();
            new_root->leaf = false;
            new_root->entries.push_back(node_cf(*root));
            new_root->children.push_back(std::move(root));
            new_root->entries.push_back(split.sibling_cf);
            new_root->children.push_back(std::move(split.sibling));
            root = std::move(new_root);
        }
    }

    std::vector<CF> subclusters;
    collect_leaf_entries(*root, subclusters);
    const int s = static_cast<int>(subclusters.size());

    std::vector<int> sub_to_global(static_cast<size_t>(s));
    int actual_k = k;
    if (s <= k) {
        if (s < k)
            MIP_WARN("birch: only %d leaf subclusters for k=%d; returning %d clusters", s, k, s);
        actual_k = s;
        for (int i = 0; i < s; ++i) sub_to_global[static_cast<size_t>(i)] = i;
    } else {
        Matrix centroids(s, points.cols);
        for (int i = 0; i < s; ++i)
            for (int d = 0; d < points.cols; ++d)
                centroids(i, d) = subclusters[static_cast<size_t>(i)].ls[static_cast<size_t>(d)] /
                                  subclusters[static_cast<size_t>(i)].n;
        const ClusterAssignment refined = ward(centroids, k);
        sub_to_global = refined.labels;
    }
    (void)actual_k;

    std::vector<int> labels(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < s; ++c) {
            const double dist = subclusters[static_cast<size_t>(c)].centroid_dist_sq(points.row(i), points.cols);
            if (dist < bd) {
                bd = dist;
                best = c;
            }
        }
        labels[static_cast<size_t>(i)] = sub_to_global[static_cast<size_t>(best)];
    }
    return compact_labels(labels);
}

// ---------------------------------------------------------------------------
// DBSCAN (noise points become singleton clusters)
// ---------------------------------------------------------------------------

ClusterAssignment dbscan(const Matrix& points, double eps, int min_pts) {
    const int n = points.rows;
    if (eps <= 0.0) fail("invalid_eps", "dbscan: eps must be > 0");
    if (min_pts < 1) fail("invalid_min_pts", "dbscan: min_pts must be >= 1");

    const Matrix d2 = pairwise_sq_dists(points);
    const double eps2 = eps * eps;
    std::vector<std::vector<int>> neighbors(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (d2(i, j) <= eps2) neighbors[static_cast<size_t>(i)].push_back(j);

    std::vector<bool> core(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        core[static_cast<size_t>(i)] = static_cast<int>(neighbors[static_cast<size_t>(i)].size()) >= min_pts;

    constexpr int kUnvisited = -1;
    std::vector<int> labels(static_cast<size_t>(n), kUnvisited);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (labels[static_cast<size_t>(i)] != kUnvisited || !core[static_cast<size_t>(i)]) continue;
        const int cluster = next++;
        std::queue<int> frontier;
        labels[static_cast<size_t>(i)] = cluster;
        frontier.push(i);
        while (!frontier.empty()) {
            const int p = frontier.front();
            frontier.pop();
            if (!core[static_cast<size_t>(p)]) continue; // border point: claimed but not expanded
            for (int q : neighbors[static_cast<size_t>(p)]) {
                if (labels[static_cast<size_t>(q)] == kUnvisited) {
                    labels[static_cast<size_t>(q)] = cluster;
                    frontier.push(q);
                }
            }
        }
    }
    // Noise points become singleton clusters so assignment stays total.
    for (int i = 0; i < n; ++i)
        if (labels[static_cast<size_t>(i)] == kUnvisited) labels[static_cast<size_t>(i)] = next++;
    return compact_labels(labels);
}

// ---------------------------------------------------------------------------

ClusterMethod cluster_method_from_string(const std::string& s) {
    if (s == "none") return ClusterMethod::none;
    if (s == "ward") return ClusterMethod::ward;
    if (s == "kmeans") return ClusterMethod::kmeans;
    if (s == "spectral") return ClusterMethod::spectral;
    if (s == "birch") return ClusterMethod::birch;
    if (s == "dbscan") return ClusterMethod::dbscan;
    fail("config_invalid", "unknown clustering method: " + s);
}

std::string to_string(ClusterMethod m) {
    switch (m) {
        case ClusterMethod::none: return "none";
        case ClusterMethod::ward: return "ward";
        case ClusterMethod::kmeans: return "kmeans";
        case ClusterMethod::spectral: return "spectral";
        case ClusterMethod::birch: return "birch";
        case ClusterMethod::dbscan: return "dbscan";
    }
    return "?";
}

void ClusteringConfig::validate() const {
    if (k < 1) fail("config_invalid", "clustering.k must be >= 1");
    if (eps <= 0.0) fail("config_invalid", "clustering.eps must be > 0");
    if (min_pts < 1) fail("config_invalid", "clustering.min_pts must be >= 1");
    if (threshold <= 0.0) fail("config_invalid", "clustering.threshold must be > 0");
    if (branching < 2) fail("config_invalid", "clustering.branching must be >= 2");
}

ClusterAssignment run_clustering(const Matrix& points, const ClusteringConfig& cfg) {
    const int n = points.rows;
    if (n < 1) fail("empty_input", "run_clustering: no points");
    if (cfg.method == ClusterMethod::none) {
        ClusterAssignment out;
        out.labels.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) out.labels[static_cast<size_t>(i)] = i;
        out.num_clusters = n;
        return out;
    }
    int k = cfg.k;
    if (k > n) {
        MIP_DEBUG("clustering: k=%d clamped to %d points", k, n);
        k = n;
    }
    switch (cfg.method) {
        case ClusterMethod::ward: return ward(points, k);
        case ClusterMethod::kmeans: {
            Rng rng(cfg.seed);
            return kmeans(points, k, 100, rng, nullptr);
        }
        case ClusterMethod::spectral: return spectral(points, k, cfg.gamma);
        case ClusterMethod::birch: return birch(points, cfg.threshold, cfg.branching, k);
        case ClusterMethod::dbscan: return dbscan(points, cfg.eps, cfg.min_pts);
        default: break;
    }
    fail("config_invalid", "unhandled clustering method");
}

} // namespace mip
