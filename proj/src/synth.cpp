#include "sprobe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>

#include "sprobe/errors.hpp"
#include "sprobe/jacobi.hpp"
#include "sprobe/rng.hpp"

namespace sprobe {

namespace {

constexpr double kClampBelow = 1e-9;
constexpr double kNegativeEigenLimit = -1e-6;
constexpr double kMaxCondition = 1e6;

// Gram-Schmidt on a Gaussian matrix; columns are orthonormal.
Matrix random_orthogonal(int d, Rng& rng) {
  Matrix q(d, d);
  for (double& v : q.data()) v = rng.gaussian();
  for (int c = 0; c < d; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int prev = 0; prev < c; ++prev) {
        double dot = 0.0;
        for (int r = 0; r < d; ++r) dot += q(r, c) * q(r, prev);
        for (int r = 0; r < d; ++r) q(r, c) -= dot * q(r, prev);
      }
    }
    double norm = 0.0;
    for (int r = 0; r < d; ++r) norm += q(r, c) * q(r, c);
    norm = std::sqrt(norm);
    for (int r = 0; r < d; ++r) q(r, c) /= norm;
  }
  return q;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
}

}  // namespace

SentenceTree random_tree(int n, std::uint64_t seed, std::string id) {
  if (n < 1) throw ConfigError("random_tree: n must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<int>> adj(n);
  if (n == 2) {
    adj[0].push_back(1);
    adj[1].push_back(0);
  } else if (n > 2) {
    std::vector<int> prufer(n - 2);
    for (int& x : prufer) x = static_cast<int>(rng.below(n));
    std::vector<int> degree(n, 1);
    for (int x : prufer) ++degree[x];
    for (int x : prufer) {
      int leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      adj[leaf].push_back(x);
      adj[x].push_back(leaf);
      --degree[leaf];
      --degree[x];
    }
    int u = -1, v = -1;
    for (int i = 0; i < n; ++i) {
      if (degree[i] == 1) (u < 0 ? u : v) = i;
    }
    adj[u].push_back(v);
    adj[v].push_back(u);
  }

  const int root = static_cast<int>(rng.below(n));
  SentenceTree tree{std::move(id), std::vector<Token>(n)};
  std::vector<bool> seen(n, false);
  std::queue<int> queue;
  queue.push(root);
  seen[root] = true;
  tree.tokens[root].head = 0;
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop();
    for (int next : adj[cur]) {
      if (seen[next]) continue;
      seen[next] = true;
      tree.tokens[next].head = cur + 1;
      queue.push(next);
    }
  }
  for (int i = 0; i < n; ++i) {
    tree.tokens[i].index = i + 1;
    tree.tokens[i].form = "w" + std::to_string(i + 1);
    tree.tokens[i].upos = "X";
  }
  return tree;
}

Matrix mds_embedding(const Matrix& target, int d, const std::string& id) {
  const auto n = static_cast<int>(target.rows());
  if (target.cols() != target.rows()) throw DimensionError("mds_embedding: target is not square");
  if (d < n) throw ConfigError("mds_embedding: d must be >= n");

  // G = -1/2 J D J, written out with row, column, and grand means.
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) row_mean[i] += target(i, j);
    grand += row_mean[i];
    row_mean[i] /= n;
  }
  grand /= static_cast<double>(n) * n;
  Matrix gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      gram(i, j) = -0.5 * (target(i, j) - row_mean[i] - row_mean[j] + grand);
    }
  }

  const auto eig = symmetric_eigen(gram);
  Matrix h(n, d);
  for (int k = 0; k < n; ++k) {
    double lambda = eig.values[k];
    if (lambda < kNegativeEigenLimit) {
      throw NumericalError("sentence '" + id + "': Gram eigenvalue " + std::to_string(lambda) +
                           " is negative; input is not a tree metric");
    }
    if (lambda < kClampBelow) lambda = 0.0;
    const double scale = std::sqrt(lambda);
    for (int i = 0; i < n; ++i) h(i, k) = eig.vectors(i, k) * scale;
  }
  return h;
}

SentenceEmbedding exact_distance_embedding(const SentenceTree& tree, int d) {
  const auto n = static_cast<int>(tree.size());
  if (d < n) throw ConfigError("exact_distance_embedding: d must be >= n");
  const DistanceMatrix dist = gold_distances(tree);
  Matrix target(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) target(i, j) = dist(i, j);
  return {tree.id, mds_embedding(target, d, tree.id)};
}

SentenceEmbedding exact_depth_embedding(const SentenceTree& tree, int d) {
  const auto n = static_cast<int>(tree.size());
  if (d < n) throw ConfigError("exact_depth_embedding: d must be >= n");
  const DepthVector depth = gold_depths(tree);
  Matrix h(n, d);
  for (int i = 0; i < n; ++i) h(i, i) = std::sqrt(static_cast<double>(depth[i]));
  return {tree.id, std::move(h)};
}

SentenceEmbedding exact_joint_embedding(const SentenceTree& tree, int d) {
  const int half = d / 2;
  const auto n = static_cast<int>(tree.size());
  if (half < n) throw ConfigError("exact_joint_embedding: d/2 must be >= n");
  const auto dist = exact_distance_embedding(tree, half);
  const auto depth = exact_depth_embedding(tree, d - half);
  Matrix h(n, d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < half; ++c) h(i, c) = dist.vectors(i, c);
    for (int c = 0; c < d - half; ++c) h(i, half + c) = depth.vectors(i, c);
  }
  return {tree.id, std::move(h)};
}

namespace {

void check_transform(const Matrix& transform, std::size_t d) {
  if (transform.rows() != d || transform.cols() != d) {
    throw DimensionError("mix: transform must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (const double cond = condition_number(transform); !(cond <= kMaxCondition)) {
    throw NumericalError("mix: transform condition number " + std::to_string(cond) +
                         " exceeds 1e6");
  }
}

SentenceEmbedding blend(const SentenceEmbedding& exact, std::uint64_t noise_seed, double alpha,
                        const Matrix* transform) {
  const std::size_t n = exact.tokens();
  const std::size_t d = exact.dim();
  const std::uint64_t key = hash_combine(noise_seed, hash_string(exact.id));
  Matrix blended(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      blended(i, j) = (1.0 - alpha) * exact.vectors(i, j);
      if (alpha != 0.0) blended(i, j) += alpha * counter_gaussian(key, i * d + j);
    }
  }
  if (transform == nullptr) return {exact.id, std::move(blended)};
  return {exact.id, multiply_transposed(blended, *transform)};
}

}  // namespace

SentenceEmbedding mix(const SentenceEmbedding& exact, std::uint64_t noise_seed, double alpha,
                      const std::optional<Matrix>& transform) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("mix: alpha must lie in [0, 1]");
  if (transform) check_transform(*transform, exact.dim());
  return blend(exact, noise_seed, alpha, transform ? &*transform : nullptr);
}

Matrix random_transform(int d, std::uint64_t seed, double condition) {
  if (d < 1) throw ConfigError("random_transform: d must be >= 1");
  if (!(condition >= 1.0)) throw ConfigError("random_transform: condition must be >= 1");
  Rng rng(seed);
  const Matrix left = random_orthogonal(d, rng);
  const Matrix right = random_orthogonal(d, rng);
  Matrix scaled = left;
  for (int c = 0; c < d; ++c) {
    const double s = d == 1 ? 1.0 : 1.0 + (condition - 1.0) * c / (d - 1);
    for (int r = 0; r < d; ++r) scaled(r, c) *= s;
  }
  return multiply(scaled, transpose(right));
}

CheckpointManifest generate_series(const SeriesConfig& config) {
  if (config.sentences < 3) throw ConfigError("generate_series: need at least 3 sentences");
  if (config.alphas.empty()) throw ConfigError("generate_series: no checkpoint alphas");
  if (config.seeds < 1) throw ConfigError("generate_series: seeds must be >= 1");
  if (config.min_length < 1 || config.max_length < config.min_length) {
    throw ConfigError("generate_series: bad sentence length range");
  }
  if (config.dim / 2 < config.max_length) {
    throw ConfigError("generate_series: dim must be at least twice max_length");
  }
  for (double a : config.alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("generate_series: alphas must lie in [0, 1]");
  }

  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir / "emb");

  Rng length_rng(hash_combine(config.seed, 0x1e4));
  std::vector<SentenceTree> trees;
  std::vector<SentenceEmbedding> exact;
  for (int s = 0; s < config.sentences; ++s) {
    const int span = config.max_length - config.min_length + 1;
    const int n = config.min_length + static_cast<int>(length_rng.below(span));
    char id[32];
    std::snprintf(id, sizeof id, "synth-%05d", s);
    trees.push_back(random_tree(n, hash_combine(config.seed, 0x7000 + s), id));
    exact.push_back(exact_joint_embedding(trees.back(), config.dim));
  }

  // 80/10/10 split in generation order.
  const int n_test = std::max(1, config.sentences / 10);
  const int n_dev = std::max(1, config.sentences / 10);
  const int n_train = config.sentences - n_dev - n_test;
  const auto begin = trees.begin();
  write_text(config.out_dir / "all.conllu", write_conllu(trees));
  write_text(config.out_dir / "train.conllu", write_conllu({begin, begin + n_train}));
  write_text(config.out_dir / "dev.conllu", write_conllu({begin + n_train, begin + n_train + n_dev}));
  write_text(config.out_dir / "test.conllu", write_conllu({begin + n_train + n_dev, trees.end()}));

  std::optional<Matrix> transform;
  if (config.transform_condition > 1.0) {
    transform = random_transform(config.dim, hash_combine(config.seed, 0xa11), config.transform_condition);
    check_transform(*transform, static_cast<std::size_t>(config.dim));
  }

  CheckpointManifest manifest;
  manifest.base_dir = config.out_dir;
  const auto count = static_cast<double>(config.alphas.size());
  for (std::size_t idx = 0; idx < config.alphas.size(); ++idx) {
    for (int seed = 0; seed < config.seeds; ++seed) {
      const std::uint64_t noise_seed =
          hash_combine(hash_combine(config.seed, static_cast<std::uint64_t>(seed)), idx);
      std::vector<SentenceEmbedding> mixed;
      mixed.reserve(exact.size());
      for (const auto& e : exact) mixed.push_back(blend(e, noise_seed, config.alphas[idx], transform ? &*transform : nullptr));
      const std::string rel = "emb/" + config.task + "_seed" + std::to_string(seed) + "_ckpt" +
                              std::to_string(idx) + ".emb";
      write_embeddings_file(mixed, config.out_dir / rel);
      manifest.entries.push_back({config.task, seed, static_cast<int>(idx),
                                  static_cast<double>(idx) / count, config.layer, rel, std::nullopt});
    }
  }
  save_manifest(manifest, config.out_dir / "manifest.json");
  return manifest;
}

}  // namespace sprobe
