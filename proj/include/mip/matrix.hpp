#pragma once

#include <string>
#include <vector>

namespace mip {

/// Dense row-major float64 matrix. Vectors are 1xN or Nx1 as convenient.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
    const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

    size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::string shape_str() const;
    bool all_finite() const;
};

// Serial reference kernel, kept alongside the parallel one for tests and
// the kernel benchmark.
Matrix matmul_serial(const Matrix& a, const Matrix& b);

/// a x b. Parallelized over output rows for large products; bit-identical
/// to matmul_serial for any thread count.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

void add_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& a, double s);

/// Numerically stable softmax (max subtraction). Empty input -> empty output.
std::vector<double> softmax_row(const std::vector<double>& v);

/// Pairwise squared Euclidean distances between rows of `points` (n x n).
/// Parallel over rows; matches the serial reference bitwise.
Matrix pairwise_sq_dists(const Matrix& points);
Matrix pairwise_sq_dists_serial(const Matrix& points);

double dot(const double* a, const double* b, int n);

} // namespace mip
