#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sprobe/decode.hpp"
#include "sprobe/errors.hpp"
#include "sprobe/jacobi.hpp"
#include "sprobe/synth.hpp"

using namespace sprobe;
namespace fs = std::filesystem;

namespace {

double max_distance_error(const SentenceEmbedding& emb, const DistanceMatrix& gold) {
  double worst = 0.0;
  for (std::size_t i = 0; i < emb.tokens(); ++i) {
    for (std::size_t j = 0; j < emb.tokens(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < emb.dim(); ++c) {
        const double diff = emb.vectors(i, c) - emb.vectors(j, c);
        s += diff * diff;
      }
      worst = std::max(worst, std::abs(s - gold(i, j)));
    }
  }
  return worst;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream b;
  b << in.rdbuf();
  return b.str();
}

}  // namespace

TEST_CASE("random_tree basics") {
  const auto one = random_tree(1, 5);
  REQUIRE(one.size() == 1);
  CHECK(one.tokens[0].head == 0);
  CHECK_THROWS_AS(random_tree(0, 1), ConfigError);
  for (int trial = 0; trial < 300; ++trial) {
    const auto t = random_tree(1 + trial % 40, trial);
    CHECK_NOTHROW(validate_tree(t));
  }
  const auto a = random_tree(12, 77), b = random_tree(12, 77);
  for (int i = 0; i < 12; ++i) CHECK(a.tokens[i].head == b.tokens[i].head);
}

TEST_CASE("n = 3 trees are uniform over the 3 labeled trees") {
  std::map<EdgeSet, int> counts;
  const int draws = 10000;
  for (int seed = 0; seed < draws; ++seed) ++counts[gold_edges(random_tree(3, seed))];
  REQUIRE(counts.size() == 3);  // Cayley: 3^(3-2)
  for (const auto& [edges, c] : counts) CHECK(std::abs(c / double(draws) - 1.0 / 3.0) < 0.02);
}

TEST_CASE("Jacobi eigensolver reconstructs and is orthonormal") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 30;
    Matrix a = oracle::random_matrix(n, n, rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
    const auto eig = symmetric_eigen(a);
    Matrix recon(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) recon(i, j) += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
    Matrix diff = recon;
    for (std::size_t k = 0; k < diff.data().size(); ++k) diff.data()[k] -= a.data()[k];
    CHECK(frobenius_norm(diff) <= 1e-10 * frobenius_norm(a));
    const Matrix vtv = multiply(transpose(eig.vectors), eig.vectors);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(vtv(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
    for (std::size_t k = 1; k < n; ++k) CHECK(eig.values[k - 1] >= eig.values[k]);
  }
}

TEST_CASE("exact_distance_embedding reproduces tree distances") {
  SentenceTree path{"p", {{1, "a", "X", 2}, {2, "b", "X", 3}, {3, "c", "X", 0}}};
  CHECK(max_distance_error(exact_distance_embedding(path, 3), gold_distances(path)) < 1e-9);

  const auto single = exact_distance_embedding(random_tree(1, 1), 4);
  REQUIRE(single.tokens() == 1);
  for (double v : single.vectors.data()) CHECK(v == 0.0);

  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto tree = random_tree(1 + trial % 30, 3000 + trial);
    const auto emb = exact_distance_embedding(tree, 32);
    CHECK(emb.dim() == 32);
    worst = std::max(worst, max_distance_error(emb, gold_distances(tree)));
  }
  CHECK(worst < 1e-8);
  CHECK_THROWS_AS(exact_distance_embedding(random_tree(5, 1), 4), ConfigError);
}

TEST_CASE("non-Euclidean targets raise a numerical error") {
  // Squared side lengths 1, 1, 10 violate the triangle inequality.
  Matrix target(3, 3, 0.0);
  target(0, 1) = target(1, 0) = 1.0;
  target(0, 2) = target(2, 0) = 1.0;
  target(1, 2) = target(2, 1) = 10.0;
  CHECK_THROWS_AS(mds_embedding(target, 3), NumericalError);
}

TEST_CASE("exact_depth_embedding") {
  SentenceTree path{"p", {{1, "a", "X", 2}, {2, "b", "X", 3}, {3, "c", "X", 0}}};
  const auto emb = exact_depth_embedding(path, 4);
  const double expected[] = {2, 1, 0};
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (double v : emb.vectors.row(i)) s += v * v;
    CHECK(s == doctest::Approx(expected[i]).epsilon(1e-15));
  }
  for (double v : emb.vectors.row(2)) CHECK(v == 0.0);

  for (int trial = 0; trial < 200; ++trial) {
    const auto tree = random_tree(1 + trial % 30, 10 + trial);
    const auto e = exact_depth_embedding(tree, 30);
    std::vector<double> norms(tree.size());
    for (std::size_t i = 0; i < tree.size(); ++i)
      for (double v : e.vectors.row(i)) norms[i] += v * v;
    CHECK(predicted_root(norms) == tree.root());
  }
}

TEST_CASE("mix") {
  const auto tree = random_tree(6, 2, "m");
  const auto exact = exact_joint_embedding(tree, 12);
  CHECK(mix(exact, 1, 0.0).vectors == exact.vectors);
  CHECK(mix(exact, 1, 0.0, Matrix::identity(12)).vectors == exact.vectors);
  CHECK(mix(exact, 1, 0.5).vectors == mix(exact, 1, 0.5).vectors);
  CHECK_FALSE(mix(exact, 1, 0.5).vectors == mix(exact, 2, 0.5).vectors);

  // Pure noise does not depend on the tree.
  SentenceEmbedding other{"m", Matrix(6, 12, 3.0)};
  CHECK(mix(exact, 4, 1.0).vectors == mix(other, 4, 1.0).vectors);

  CHECK_THROWS_AS(mix(exact, 1, 1.5), ConfigError);
  Matrix singular = Matrix::identity(12);
  singular(11, 11) = 1e-9;
  CHECK_THROWS_AS(mix(exact, 1, 0.2, singular), NumericalError);
}

TEST_CASE("random_transform honours the condition bound") {
  for (double cond : {1.0, 3.0, 10.0}) {
    const Matrix a = random_transform(16, 5, cond);
    CHECK(condition_number(a) == doctest::Approx(cond).epsilon(1e-8));
  }
}

TEST_CASE("generate_series writes a consistent, deterministic series") {
  const fs::path base = fs::temp_directory_path() / "sprobe_test_synth";
  fs::remove_all(base);
  SeriesConfig cfg{.sentences = 20, .alphas = {0.9, 0.5, 0.1}, .dim = 24, .seed = 3, .seeds = 2,
                   .min_length = 2, .max_length = 12, .out_dir = base / "a"};
  const auto m = generate_series(cfg);
  REQUIRE(m.entries.size() == 6);
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    CHECK(m.entries[i].checkpoint_index >= m.entries[i - 1].checkpoint_index);
  }
  CHECK(m.entries.back().epoch_fraction == doctest::Approx(2.0 / 3.0));
  const auto loaded = load_manifest(base / "a" / "manifest.json");
  CHECK(loaded.entries.size() == 6);

  const auto all = read_conllu_file((base / "a" / "all.conllu").string()).sentences;
  CHECK(all.size() == 20);
  std::size_t split_total = 0;
  for (const char* split : {"train", "dev", "test"}) {
    split_total += read_conllu_file((base / "a" / (std::string(split) + ".conllu")).string()).sentences.size();
  }
  CHECK(split_total == 20);
  const auto emb = read_embeddings_file(loaded.resolve(loaded.entries[0]));
  const auto aligned = align(emb, all);
  CHECK(aligned.examples.size() == 20);
  CHECK(aligned.unmatched_embedding_ids.empty());

  cfg.out_dir = base / "b";
  generate_series(cfg);
  for (const auto& e : m.entries) CHECK(slurp(base / "a" / e.path) == slurp(base / "b" / e.path));
  CHECK(slurp(base / "a" / "manifest.json") == slurp(base / "b" / "manifest.json"));

  cfg.dim = 20;
  CHECK_THROWS_AS(generate_series(cfg), ConfigError);
  fs::remove_all(base);
}
