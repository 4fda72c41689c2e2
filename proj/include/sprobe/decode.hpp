#pragma once

#include <cstddef>
#include <span>

#include "sprobe/matrix.hpp"
#include "sprobe/treebank.hpp"

namespace sprobe {

// Minimum spanning tree of the complete graph weighted by `pred`, via dense
// Prim from node 0. Equal weights resolve toward the lexicographically
// smaller (min, max) pair. Throws ConfigError when pred is not square,
// asymmetric beyond 1e-9, or non-finite.
EdgeSet mst(const Matrix& pred);

// 0-based index of the smallest entry; ties go to the lowest index.
std::size_t predicted_root(std::span<const double> depths);

}  // namespace sprobe
