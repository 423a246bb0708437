#pragma once

#include <vector>

#include "mip/matrix.hpp"

namespace mip {

struct EigenResult {
    std::vector<double> values; // ascending
    Matrix vectors;             // column i pairs with values[i]; orthonormal
};

/// Cyclic Jacobi eigendecomposition for symmetric matrices.
/// Input must be symmetric within 1e-10 (validated).
EigenResult jacobi_eigen_symmetric(const Matrix& a);

} // namespace mip
