#pragma once

// Independent reference implementations used only by the tests. None of
// these call into the code path they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "sprobe/matrix.hpp"
#include "sprobe/probe.hpp"
#include "sprobe/treebank.hpp"

namespace oracle {

// All-pairs shortest paths on the undirected head relation.
inline std::vector<std::vector<int>> floyd_warshall(const sprobe::SentenceTree& tree) {
  const int n = static_cast<int>(tree.size());
  const int inf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& t : tree.tokens) {
    if (t.head == 0) continue;
    d[t.index - 1][t.head - 1] = 1;
    d[t.head - 1][t.index - 1] = 1;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

// Rank by counting: rank_i = #{x_j < x_i} + (#{x_j == x_i} + 1) / 2.
inline std::vector<double> counting_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) ++less;
      if (v == x[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(counting_ranks(x), counting_ranks(y));
}

// Decodes a Pruefer sequence into n-1 edges.
inline std::vector<std::pair<int, int>> prufer_edges(const std::vector<int>& seq, int n) {
  std::vector<int> degree(n, 1);
  for (int x : seq) ++degree[x];
  std::vector<std::pair<int, int>> edges;
  for (int x : seq) {
    for (int leaf = 0; leaf < n; ++leaf) {
      if (degree[leaf] == 1) {
        edges.emplace_back(leaf, x);
        --degree[leaf];
        --degree[x];
        break;
      }
    }
  }
  int u = -1, v = -1;
  for (int i = 0; i < n; ++i)
    if (degree[i] == 1) (u < 0 ? u : v) = i;
  edges.emplace_back(u, v);
  return edges;
}

// Minimum total weight over all n^(n-2) labeled spanning trees.
inline double brute_force_mst_weight(const sprobe::Matrix& w) {
  const int n = static_cast<int>(w.rows());
  if (n == 1) return 0.0;
  if (n == 2) return w(0, 1);
  std::vector<int> seq(n - 2, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    double total = 0.0;
    for (auto [a, b] : prufer_edges(seq, n)) total += w(a, b);
    best = std::min(best, total);
    int pos = 0;
    while (pos < n - 2 && ++seq[pos] == n) seq[pos++] = 0;
    if (pos == n - 2) break;
  }
  return best;
}

inline bool spans_acyclic(const sprobe::EdgeSet& edges, int n) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto [a, b] : edges) {
    const int ra = find(a), rb = find(b);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return static_cast<int>(edges.size()) == n - 1;
}

inline double naive_distance(const sprobe::Matrix& B, const sprobe::Matrix& H, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t r = 0; r < B.rows(); ++r) {
    double bi = 0.0, bj = 0.0;
    for (std::size_t c = 0; c < B.cols(); ++c) {
      bi += B(r, c) * H(i, c);
      bj += B(r, c) * H(j, c);
    }
    s += (bi - bj) * (bi - bj);
  }
  return s;
}

inline double naive_depth(const sprobe::Matrix& B, const sprobe::Matrix& H, std::size_t i) {
  double s = 0.0;
  for (std::size_t r = 0; r < B.rows(); ++r) {
    double bi = 0.0;
    for (std::size_t c = 0; c < B.cols(); ++c) bi += B(r, c) * H(i, c);
    s += bi * bi;
  }
  return s;
}

inline double resum_distance_loss(const sprobe::Matrix& B, const sprobe::Matrix& H,
                                  const sprobe::DistanceMatrix& gold) {
  const std::size_t n = H.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += std::fabs(gold(i, j) - naive_distance(B, H, i, j));
  return s / static_cast<double>(n * n);
}

inline double resum_depth_loss(const sprobe::Matrix& B, const sprobe::Matrix& H, const sprobe::DepthVector& gold) {
  double s = 0.0;
  for (std::size_t i = 0; i < H.rows(); ++i) s += std::fabs(gold[i] - naive_depth(B, H, i));
  return s / static_cast<double>(H.rows());
}

// Central differences of `loss` with respect to every entry of B.
inline sprobe::Matrix finite_difference(const sprobe::Matrix& B, const std::function<double(const sprobe::Matrix&)>& loss,
                                        double step = 1e-5) {
  sprobe::Matrix g(B.rows(), B.cols());
  sprobe::Matrix probe = B;
  for (std::size_t r = 0; r < B.rows(); ++r) {
    for (std::size_t c = 0; c < B.cols(); ++c) {
      const double orig = probe(r, c);
      probe(r, c) = orig + step;
      const double up = loss(probe);
      probe(r, c) = orig - step;
      const double down = loss(probe);
      probe(r, c) = orig;
      g(r, c) = (up - down) / (2 * step);
    }
  }
  return g;
}

inline sprobe::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  sprobe::Matrix m(r, c);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace oracle
