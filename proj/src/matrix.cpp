#include "mip/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "mip/error.hpp"

namespace mip {

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

bool Matrix::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

static void check_mul_shapes(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        fail("shape_mismatch",
             "matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
}

static inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int k = 0; k < a.cols; ++k) {
        const double aik = ai[k];
        if (aik == 0.0) continue;
        const double* bk = b.row(k);
        for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_mul_shapes(a, b);
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
    return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_mul_shapes(a, b);
    Matrix c(a.rows, b.cols);
    // Each output row is produced by exactly one thread, so the result is
    // bit-identical to the serial kernel. Small products stay serial.
    const long long work =
        static_cast<long long>(a.rows) * a.cols * b.cols;
#pragma omp parallel for schedule(static) if (work > 262144)
    for (int i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

void add_inplace(Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        fail("shape_mismatch", "add: " + a.shape_str() + " vs " + b.shape_str());
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void scale_inplace(Matrix& a, double s) {
    for (double& v : a.data) v *= s;
}

std::vector<double> softmax_row(const std::vector<double>& v) {
    if (v.empty()) return {};
    double mx = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

static inline void pairwise_row(const Matrix& p, Matrix& d, int i) {
    const double* pi = p.row(i);
    for (int j = 0; j < p.rows; ++j) {
        if (j == i) {
            d(i, j) = 0.0;
            continue;
        }
        const double* pj = p.row(j);
        double s = 0.0;
        for (int c = 0; c < p.cols; ++c) {
            double diff = pi[c] - pj[c];
            s += diff * diff;
        }
        d(i, j) = s;
    }
}

Matrix pairwise_sq_dists_serial(const Matrix& points) {
    Matrix d(points.rows, points.rows);
    for (int i = 0; i < points.rows; ++i) pairwise_row(points, d, i);
    return d;
}

Matrix pairwise_sq_dists(const Matrix& points) {
    Matrix d(points.rows, points.rows);
    const long long work =
        static_cast<long long>(points.rows) * points.rows * points.cols;
#pragma omp parallel for schedule(static) if (work > 262144)
    for (int i = 0; i < points.rows; ++i) pairwise_row(points, d, i);
    return d;
}

} // namespace mip
