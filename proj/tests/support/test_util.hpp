#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mip/matrix.hpp"
#include "mip/rng.hpp"

namespace mip::test {

// O(n^3) reference matmul, independent of the library kernels.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

// O(m*n) pairwise-concordance AUC with 0.5 for ties.
inline double brute_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    double count = 0.0;
    for (double p : pos)
        for (double n : neg) count += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return count / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

inline Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

struct Blobs {
    Matrix points;
    std::vector<int> labels;
};

// Gaussian blobs with centers separated by at least `separation`.
inline Blobs make_blobs(int per_blob, int num_blobs, int dim, double sigma, double separation,
                        Rng& rng) {
    Blobs out;
    out.points = Matrix(per_blob * num_blobs, dim);
    Matrix centers(num_blobs, dim);
    for (int b = 0; b < num_blobs; ++b) {
        // Orthogonal-ish directions scaled to the requested separation.
        for (int c = 0; c < dim; ++c) centers(b, c) = rng.normal();
        double norm = std::sqrt(dot(centers.row(b), centers.row(b), dim));
        for (int c = 0; c < dim; ++c) centers(b, c) *= separation / norm;
    }
    // Enforce the pairwise floor by pushing blobs onto distinct axes.
    for (int b = 0; b < num_blobs; ++b)
        centers(b, b % dim) += separation * (1.0 + b);
    int row = 0;
    for (int b = 0; b < num_blobs; ++b)
        for (int i = 0; i < per_blob; ++i, ++row) {
            for (int c = 0; c < dim; ++c) out.points(row, c) = centers(b, c) + sigma * rng.normal();
            out.labels.push_back(b);
        }
    return out;
}

// Adjusted Rand index between two labelings.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    const int n = static_cast<int>(a.size());
    int ka = 0, kb = 0;
    for (int v : a) ka = std::max(ka, v + 1);
    for (int v : b) kb = std::max(kb, v + 1);
    std::vector<std::vector<long>> table(static_cast<size_t>(ka),
                                         std::vector<long>(static_cast<size_t>(kb), 0));
    for (int i = 0; i < n; ++i) ++table[static_cast<size_t>(a[static_cast<size_t>(i)])][static_cast<size_t>(b[static_cast<size_t>(i)])];
    auto choose2 = [](long x) { return x * (x - 1) / 2; };
    long sum_ij = 0, sum_a = 0, sum_b = 0;
    for (int i = 0; i < ka; ++i) {
        long row = 0;
        for (int j = 0; j < kb; ++j) {
            sum_ij += choose2(table[static_cast<size_t>(i)][static_cast<size_t>(j)]);
            row += table[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        sum_a += choose2(row);
    }
    for (int j = 0; j < kb; ++j) {
        long col = 0;
        for (int i = 0; i < ka; ++i) col += table[static_cast<size_t>(i)][static_cast<size_t>(j)];
        sum_b += choose2(col);
    }
    const double total = choose2(n);
    const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / total;
    const double max_index = 0.5 * (static_cast<double>(sum_a) + static_cast<double>(sum_b));
    if (max_index == expected) return 1.0;
    return (static_cast<double>(sum_ij) - expected) / (max_index - expected);
}

} // namespace mip::test
