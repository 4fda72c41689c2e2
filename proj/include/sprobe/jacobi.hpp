#pragma once

#include <vector>

#include "sprobe/matrix.hpp"

namespace sprobe {

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k pairs with values[k]
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
// tolerance * ||A||_F. Input must be square and symmetric.
EigenDecomposition symmetric_eigen(const Matrix& a, double tolerance = 1e-12, int max_sweeps = 100);

// Ratio of extreme singular values; infinity for singular input.
double condition_number(const Matrix& a);

}  // namespace sprobe
