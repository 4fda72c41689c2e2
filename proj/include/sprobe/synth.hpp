#pragma once

// Synthetic embeddings with known ground truth. Tree metrics embed exactly
// under squared Euclidean distance, so a probe with B = I (or any orthogonal
// map) reproduces gold distances and depths without error.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sprobe/embstore.hpp"
#include "sprobe/matrix.hpp"
#include "sprobe/treebank.hpp"

namespace sprobe {

// Uniform labeled tree from a random Pruefer sequence, rooted at a uniformly
// chosen token.
SentenceTree random_tree(int n, std::uint64_t seed, std::string id = "synth");

// Classical MDS: rows h_i with ||h_i - h_j||^2 = target(i, j), zero-padded to
// d columns. Throws NumericalError if the Gram matrix has an eigenvalue below
// -1e-6 (target is not a squared Euclidean distance matrix).
Matrix mds_embedding(const Matrix& target, int d, const std::string& id = "");

// Classical MDS of the gold distance matrix: ||h_i - h_j||^2 = d_T(i, j).
// Requires d >= n. Throws NumericalError if the Gram matrix has an
// eigenvalue below -1e-6.
SentenceEmbedding exact_distance_embedding(const SentenceTree& tree, int d);

// h_i = sqrt(depth_i) e_i, so ||h_i||^2 = depth_i. Requires d >= n.
SentenceEmbedding exact_depth_embedding(const SentenceTree& tree, int d);

// Distance embedding in columns [0, d/2), depth embedding in [d/2, d), so a
// single vector set supports both probes exactly. Requires d/2 >= n.
SentenceEmbedding exact_joint_embedding(const SentenceTree& tree, int d);

// h'_i = A ((1 - alpha) h_i + alpha g_i) with g seeded N(0, 1) noise keyed on
// (noise_seed, sentence id). Throws ConfigError for alpha outside [0, 1] and
// NumericalError when A has condition number above 1e6.
SentenceEmbedding mix(const SentenceEmbedding& exact, std::uint64_t noise_seed, double alpha,
                      const std::optional<Matrix>& transform = std::nullopt);

// Q1 diag(s) Q2 with random orthogonal Q1, Q2 and singular values spread
// over [1, condition].
Matrix random_transform(int d, std::uint64_t seed, double condition);

struct SeriesConfig {
  int sentences = 100;
  std::vector<double> alphas;
  int dim = 64;
  std::uint64_t seed = 0;
  int seeds = 1;  // model seeds per checkpoint
  std::string task = "synthetic";
  int min_length = 5;
  int max_length = 30;
  int layer = 7;
  // Condition number of the hidden transform; 1 means identity.
  double transform_condition = 10.0;
  std::filesystem::path out_dir;
};

// Writes train/dev/test/all CoNLL-U files, one EMB1 file per
// (checkpoint, seed), and manifest.json under out_dir.
CheckpointManifest generate_series(const SeriesConfig& config);

}  // namespace sprobe
