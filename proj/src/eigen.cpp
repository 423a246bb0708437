#include "mip/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mip/error.hpp"

namespace mip {

EigenResult jacobi_eigen_symmetric(const Matrix& input) {
    if (input.rows != input.cols)
        fail("not_square", "jacobi: matrix is " + input.shape_str());
    const int n = input.rows;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(input(i, j) - input(j, i)) > 1e-10)
                fail("not_symmetric", "jacobi: matrix not symmetric at (" +
                                          std::to_string(i) + "," + std::to_string(j) + ")");

    Matrix a = input;
    Matrix v = Matrix::identity(n);

    auto off_diag_sq = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return s;
    };

    double scale = 0.0;
    for (double x : a.data) scale = std::max(scale, std::abs(x));
    const double tol = std::max(1e-300, 1e-24 * scale * scale * n * n);

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && off_diag_sq() > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                     : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return a(x, x) < a(y, y); });

    EigenResult res;
    res.values.resize(static_cast<size_t>(n));
    res.vectors = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        res.values[static_cast<size_t>(i)] = a(order[static_cast<size_t>(i)], order[static_cast<size_t>(i)]);
        for (int k = 0; k < n; ++k) res.vectors(k, i) = v(k, order[static_cast<size_t>(i)]);
    }
    return res;
}

} // namespace mip
