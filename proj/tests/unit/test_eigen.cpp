#include <doctest.h>

#include <cmath>

#include "mip/eigen.hpp"
#include "mip/error.hpp"
#include "support/test_util.hpp"

using namespace mip;

TEST_CASE("jacobi diagonal matrix") {
    Matrix a(3, 3);
    a(0, 0) = 3; a(1, 1) = 1; a(2, 2) = 2;
    auto res = jacobi_eigen_symmetric(a);
    CHECK(res.values[0] == doctest::Approx(1.0));
    CHECK(res.values[1] == doctest::Approx(2.0));
    CHECK(res.values[2] == doctest::Approx(3.0));
}

TEST_CASE("jacobi analytic 2x2") {
    Matrix a(2, 2);
    a(0, 0) = 2; a(0, 1) = 1; a(1, 0) = 1; a(1, 1) = 2;
    auto res = jacobi_eigen_symmetric(a);
    CHECK(res.values[0] == doctest::Approx(1.0));
    CHECK(res.values[1] == doctest::Approx(3.0));
}

TEST_CASE("jacobi rejects non-symmetric input") {
    Matrix a(2, 2);
    a(0, 1) = 1e-3;
    CHECK_THROWS_AS(jacobi_eigen_symmetric(a), MipError);
}

static void check_residuals(int n, Rng& rng) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = rng.uniform(-1.0, 1.0);
            a(i, j) = v;
            a(j, i) = v;
        }
    auto res = jacobi_eigen_symmetric(a);
    // Residual oracle: ||A v_i - lambda_i v_i||_inf < 1e-8
    for (int i = 0; i < n; ++i) {
        for (int r = 0; r < n; ++r) {
            double av = 0.0;
            for (int c = 0; c < n; ++c) av += a(r, c) * res.vectors(c, i);
            CHECK(std::abs(av - res.values[static_cast<size_t>(i)] * res.vectors(r, i)) < 1e-8);
        }
    }
    // Orthonormal columns within 1e-8.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double g = 0.0;
            for (int r = 0; r < n; ++r) g += res.vectors(r, i) * res.vectors(r, j);
            CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-8);
        }
    // Ascending order.
    for (size_t i = 1; i < res.values.size(); ++i) CHECK(res.values[i] >= res.values[i - 1]);
}

TEST_CASE("jacobi residual oracle on random symmetric matrices") {
    Rng rng(11);
    check_residuals(8, rng);
    check_residuals(17, rng);
    check_residuals(64, rng);
}
