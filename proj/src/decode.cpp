#include "sprobe/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sprobe/errors.hpp"

namespace sprobe {

namespace {

constexpr double kSymmetryTolerance = 1e-9;

}  // namespace

EdgeSet mst(const Matrix& pred) {
  const std::size_t n = pred.rows();
  if (pred.cols() != n) throw ConfigError("mst: weight matrix is not square");
  if (n == 0) throw ConfigError("mst: empty weight matrix");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = pred(i, j);
      const double b = pred(j, i);
      if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("mst: non-finite weight");
      if (std::abs(a - b) > kSymmetryTolerance * std::max({1.0, std::abs(a), std::abs(b)})) {
        throw ConfigError("mst: weight matrix is not symmetric at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
    }
  }

  // Upper-triangle entry is the canonical weight of each pair.
  auto weight = [&](std::size_t u, std::size_t v) { return u < v ? pred(u, v) : pred(v, u); };
  auto pair_less = [](Edge a, Edge b) { return a < b; };

  std::vector<bool> in_tree(n, false);
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  EdgeSet edges;

  in_tree[0] = true;
  for (std::size_t v = 1; v < n; ++v) {
    key[v] = weight(0, v);
    parent[v] = 0;
  }
  for (std::size_t step = 1; step < n; ++step) {
    int best = -1;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      if (best < 0 || key[v] < key[best] ||
          (key[v] == key[best] && pair_less(make_edge(parent[v], static_cast<int>(v)),
                                            make_edge(parent[best], best)))) {
        best = static_cast<int>(v);
      }
    }
    in_tree[best] = true;
    edges.insert(make_edge(parent[best], best));
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = weight(static_cast<std::size_t>(best), v);
      if (w < key[v] || (w == key[v] && pair_less(make_edge(best, static_cast<int>(v)),
                                                   make_edge(parent[v], static_cast<int>(v))))) {
        key[v] = w;
        parent[v] = best;
      }
    }
  }
  return edges;
}

std::size_t predicted_root(std::span<const double> depths) {
  if (depths.empty()) throw ConfigError("predicted_root: empty depth vector");
  std::size_t best = 0;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (!std::isfinite(depths[i])) throw ConfigError("predicted_root: non-finite depth");
    if (depths[i] < depths[best]) best = i;
  }
  return best;
}

}  // namespace sprobe
