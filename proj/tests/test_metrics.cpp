#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sprobe/errors.hpp"
#include "sprobe/metrics.hpp"
#include "sprobe/synth.hpp"

using namespace sprobe;

namespace {

Matrix as_real(const DistanceMatrix& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j) m(i, j) = d(i, j);
  return m;
}

std::vector<double> as_real(const DepthVector& d) { return {d.begin(), d.end()}; }

std::vector<Example> corpus(int count, int min_n, int max_n, std::uint64_t seed) {
  std::vector<Example> out;
  std::mt19937_64 rng(seed);
  for (int s = 0; s < count; ++s) {
    const int n = min_n + static_cast<int>(rng() % (max_n - min_n + 1));
    auto tree = random_tree(n, rng(), "s" + std::to_string(s));
    out.push_back(make_example(std::move(tree), {"s" + std::to_string(s), Matrix(n, 1)}));
  }
  return out;
}

}  // namespace

TEST_CASE("spearman basics") {
  const std::vector<double> a{1, 2, 3}, b{3, 2, 1};
  CHECK(spearman(a, a).value() == doctest::Approx(1.0));
  CHECK(spearman(a, b).value() == doctest::Approx(-1.0));
  CHECK_FALSE(spearman(a, std::vector<double>{2, 2, 2}).has_value());
  CHECK_THROWS_AS(spearman(a, std::vector<double>{1, 2}), ConfigError);
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), ConfigError);
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("spearman matches the counting-rank oracle on tied data") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    const int levels = 1 + static_cast<int>(rng() % 6);
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng() % levels);
    for (auto& v : y) v = trial % 2 ? static_cast<double>(rng() % 5) : std::ldexp(static_cast<double>(rng() % 1000), -7);
    const auto got = spearman(x, y);
    const auto want = oracle::spearman(x, y);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(std::abs(*got - *want) <= 1e-12);
      CHECK(*got >= -1.0);
      CHECK(*got <= 1.0);
    }
  }
}

TEST_CASE("uuas examples") {
  const EdgeSet gold{{0, 1}, {1, 2}, {2, 3}};
  const std::vector<bool> none(4, false);
  CHECK(uuas(gold, gold, none).value() == 1.0);
  CHECK(uuas(EdgeSet{{0, 2}, {0, 3}, {1, 3}}, gold, none).value() == 0.0);
  // Token 4 is punctuation: (2,3) and (0,3) drop out of both sets.
  const std::vector<bool> punct{false, false, false, true};
  CHECK(uuas(EdgeSet{{0, 1}, {1, 2}, {0, 3}}, gold, punct).value() == 1.0);
  CHECK_FALSE(uuas(gold, gold, std::vector<bool>(4, true)).has_value());
  CHECK_FALSE(uuas({}, {}, {false}).has_value());
}

TEST_CASE("uuas_corpus macro-averages and skips empty sentences") {
  std::vector<UuasInput> inputs{
      {EdgeSet{{0, 1}}, EdgeSet{{0, 1}}, {false, false}},
      {EdgeSet{{0, 2}, {1, 2}}, EdgeSet{{0, 1}, {1, 2}}, {false, false, false}},
      {EdgeSet{{0, 1}}, EdgeSet{{0, 1}}, {true, true}},
  };
  const auto agg = uuas_corpus(inputs);
  CHECK(agg.counted == 2);
  CHECK(agg.value.value() == doctest::Approx(0.75));
  CHECK(uuas_corpus(inputs, LengthFilter{3, 50}).counted == 1);
}

TEST_CASE("dspr") {
  const auto examples = corpus(20, 3, 12, 1);
  std::vector<DistanceMatrix> gold;
  std::vector<Matrix> pred, squared;
  for (const auto& ex : examples) {
    gold.push_back(ex.distances);
    pred.push_back(as_real(ex.distances));
    Matrix sq = pred.back();
    for (double& v : sq.data()) v = v * v;
    squared.push_back(sq);
  }
  const auto exact = dspr(gold, pred);
  CHECK(exact.value.value() == doctest::Approx(1.0));
  CHECK(dspr(gold, squared).value == exact.value);

  std::size_t in_range = 0;
  for (const auto& ex : examples) in_range += ex.tree.size() >= 5 ? 1 : 0;
  // Star rows are constant; a sentence can drop out entirely only if every row is.
  CHECK(exact.counted <= in_range);
  CHECK(exact.counted > 0);

  std::vector<DistanceMatrix> short_only{gold_distances(random_tree(4, 1))};
  std::vector<Matrix> short_pred{as_real(short_only[0])};
  const auto none = dspr(short_only, short_pred);
  CHECK(none.counted == 0);
  CHECK_FALSE(none.value.has_value());
}

TEST_CASE("root_accuracy") {
  std::vector<RootPrediction> all_right, none_right, mixed;
  for (int i = 0; i < 8; ++i) {
    all_right.push_back({10, 2, 2});
    none_right.push_back({10, 2, 3});
    mixed.push_back({10, 1, i < 6 ? 1u : 0u});
  }
  CHECK(root_accuracy(all_right).value.value() == 1.0);
  CHECK(root_accuracy(none_right).value.value() == 0.0);
  CHECK(root_accuracy(mixed).value.value() == 0.75);
  mixed.push_back({4, 0, 1});   // too short
  mixed.push_back({51, 0, 1});  // too long
  CHECK(root_accuracy(mixed).value.value() == 0.75);
  CHECK(root_accuracy(mixed).counted == 8);
}

TEST_CASE("nspr") {
  const auto examples = corpus(20, 5, 20, 2);
  std::vector<DepthVector> gold;
  std::vector<std::vector<double>> same, neg, distorted;
  for (const auto& ex : examples) {
    gold.push_back(ex.depths);
    same.push_back(as_real(ex.depths));
    neg.push_back(same.back());
    for (double& v : neg.back()) v = -v;
    distorted.push_back(same.back());
    for (double& v : distorted.back()) v = std::exp(v) + v * v * v;
  }
  CHECK(nspr(gold, same).value.value() == doctest::Approx(1.0));
  CHECK(nspr(gold, neg).value.value() == doctest::Approx(-1.0));
  CHECK(nspr(gold, distorted).value == nspr(gold, same).value);
}

TEST_CASE("evaluate_predictions on gold-derived predictions") {
  const auto examples = corpus(40, 2, 40, 3);
  std::vector<Matrix> pd;
  std::vector<std::vector<double>> pdep;
  for (const auto& ex : examples) {
    pd.push_back(as_real(ex.distances));
    pdep.push_back(as_real(ex.depths));
  }
  const auto r = evaluate_predictions(examples, pd, pdep);
  CHECK(r.uuas.value() == 1.0);
  CHECK(r.dspr.value() == doctest::Approx(1.0));
  CHECK(r.root_acc.value() == 1.0);
  CHECK(r.nspr.value() == doctest::Approx(1.0));
  CHECK(r.counted_uuas == 40);  // UUAS is not length-filtered by default
  CHECK(r.counted_root_acc < 40);

  MetricConfig all{.scope = FilterScope::kAll};
  CHECK(evaluate_predictions(examples, pd, pdep, all).counted_uuas == r.counted_root_acc);

  CHECK_THROWS_AS(evaluate_predictions({}, {}, {}), ConfigError);
}

TEST_CASE("MetricReport JSON uses the fixed field names") {
  MetricReport r{0.5, std::nullopt, 1.0, -0.25, 3, 0, 2, 2};
  const std::string j = report_to_json(r);
  for (const char* f : {"\"uuas\"", "\"dspr\"", "\"root_acc\"", "\"nspr\"", "\"counted_uuas\"", "\"counted_dspr\"",
                        "\"counted_root_acc\"", "\"counted_nspr\""}) {
    CHECK(j.find(f) != std::string::npos);
  }
  CHECK(j.find("\"dspr\":null") != std::string::npos);
  CHECK(report_from_json(j) == r);
}

TEST_CASE("filter scope names") {
  CHECK(filter_scope_from_string("all") == FilterScope::kAll);
  CHECK(filter_scope_from_string("spearman-only") == FilterScope::kSpearmanOnly);
  CHECK_THROWS_AS(filter_scope_from_string("some"), ConfigError);
}
