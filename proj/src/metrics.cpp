#include "sprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "sprobe/decode.hpp"
#include "sprobe/errors.hpp"

namespace sprobe {

namespace {

Aggregate mean_of(const std::vector<double>& values) {
  if (values.empty()) return {};
  double s = 0.0;
  for (double v : values) s += v;
  return {s / static_cast<double>(values.size()), values.size()};
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

const char* to_string(FilterScope scope) {
  return scope == FilterScope::kAll ? "all" : "spearman-only";
}

FilterScope filter_scope_from_string(const std::string& s) {
  if (s == "spearman-only") return FilterScope::kSpearmanOnly;
  if (s == "all") return FilterScope::kAll;
  throw ConfigError("unknown filter scope '" + s + "' (expected spearman-only or all)");
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ConfigError("spearman: length mismatch (" + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw ConfigError("spearman: need at least 2 values");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;

  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  // Both rank vectors have mean (n + 1) / 2.
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean;
    const double b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> uuas(const EdgeSet& pred, const EdgeSet& gold, const std::vector<bool>& punct) {
  auto keep = [&](const Edge& e) {
    auto is_punct = [&](int i) { return static_cast<std::size_t>(i) < punct.size() && punct[i]; };
    return !is_punct(e.first) && !is_punct(e.second);
  };
  std::size_t total = 0;
  std::size_t hit = 0;
  for (const Edge& e : gold) {
    if (!keep(e)) continue;
    ++total;
    if (pred.contains(e)) ++hit;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(total);
}

Aggregate uuas_corpus(std::span<const UuasInput> sentences, const std::optional<LengthFilter>& filter) {
  std::vector<double> values;
  for (const auto& s : sentences) {
    if (filter && !filter->accepts(s.punct.size())) continue;
    if (auto v = uuas(s.pred, s.gold, s.punct)) values.push_back(*v);
  }
  return mean_of(values);
}

Aggregate dspr(std::span<const DistanceMatrix> gold, std::span<const Matrix> pred,
               const LengthFilter& filter) {
  if (gold.size() != pred.size()) throw ConfigError("dspr: sentence count mismatch");
  std::vector<double> per_sentence;
  std::vector<double> g, p;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const std::size_t n = gold[s].size();
    if (pred[s].rows() != n || pred[s].cols() != n) throw DimensionError("dspr: shape mismatch");
    if (!filter.accepts(n)) continue;
    std::vector<double> per_word;
    for (std::size_t i = 0; i < n; ++i) {
      g.clear();
      p.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        g.push_back(gold[s](i, j));
        p.push_back(pred[s](i, j));
      }
      if (g.size() < 2) continue;
      if (auto rho = spearman(g, p)) per_word.push_back(*rho);
    }
    if (auto m = mean_of(per_word); m.value) per_sentence.push_back(*m.value);
  }
  return mean_of(per_sentence);
}

Aggregate root_accuracy(std::span<const RootPrediction> sentences, const LengthFilter& filter) {
  std::vector<double> hits;
  for (const auto& s : sentences) {
    if (!filter.accepts(s.length)) continue;
    hits.push_back(s.gold_root == s.predicted_root ? 1.0 : 0.0);
  }
  return mean_of(hits);
}

Aggregate nspr(std::span<const DepthVector> gold, std::span<const std::vector<double>> pred,
               const LengthFilter& filter) {
  if (gold.size() != pred.size()) throw ConfigError("nspr: sentence count mismatch");
  std::vector<double> values;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const std::size_t n = gold[s].size();
    if (pred[s].size() != n) throw DimensionError("nspr: length mismatch");
    if (!filter.accepts(n) || n < 2) continue;
    const std::vector<double> g(gold[s].begin(), gold[s].end());
    if (auto rho = spearman(g, pred[s])) values.push_back(*rho);
  }
  return mean_of(values);
}

MetricReport evaluate_predictions(std::span<const Example> examples,
                                  std::span<const Matrix> pred_distances,
                                  std::span<const std::vector<double>> pred_depths,
                                  const MetricConfig& config) {
  if (examples.empty()) throw ConfigError("evaluate: empty test set");
  if (pred_distances.size() != examples.size() || pred_depths.size() != examples.size()) {
    throw ConfigError("evaluate: prediction count does not match example count");
  }
  std::vector<UuasInput> uuas_inputs;
  std::vector<DistanceMatrix> gold_d;
  std::vector<DepthVector> gold_depth;
  std::vector<RootPrediction> roots;
  uuas_inputs.reserve(examples.size());
  for (std::size_t s = 0; s < examples.size(); ++s) {
    const Example& ex = examples[s];
    uuas_inputs.push_back({mst(pred_distances[s]), ex.edges, ex.punct});
    gold_d.push_back(ex.distances);
    gold_depth.push_back(ex.depths);
    roots.push_back({ex.tree.size(), ex.tree.root(), predicted_root(pred_depths[s])});
  }

  const auto u = uuas_corpus(uuas_inputs, config.scope == FilterScope::kAll
                                              ? std::optional<LengthFilter>(config.length)
                                              : std::nullopt);
  const auto ds = dspr(gold_d, pred_distances, config.length);
  const auto r = root_accuracy(roots, config.length);
  const auto ns = nspr(gold_depth, pred_depths, config.length);
  return {u.value, ds.value, r.value, ns.value, u.counted, ds.counted, r.counted, ns.counted};
}

MetricReport evaluate(const ProbeParams& distance_probe, const ProbeParams& depth_probe,
                      std::span<const Example> test, const MetricConfig& config) {
  if (test.empty()) throw ConfigError("evaluate: empty test set");
  std::vector<Matrix> pred_d;
  std::vector<std::vector<double>> pred_depth;
  pred_d.reserve(test.size());
  pred_depth.reserve(test.size());
  for (const Example& ex : test) {
    pred_d.push_back(predict_distances(distance_probe, ex.embedding.vectors));
    pred_depth.push_back(predict_depths(depth_probe, ex.embedding.vectors));
  }
  return evaluate_predictions(test, pred_d, pred_depth, config);
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::ordered_json doc = {{"uuas", optional_json(report.uuas)},
                                {"dspr", optional_json(report.dspr)},
                                {"root_acc", optional_json(report.root_acc)},
                                {"nspr", optional_json(report.nspr)},
                                {"counted_uuas", report.counted_uuas},
                                {"counted_dspr", report.counted_dspr},
                                {"counted_root_acc", report.counted_root_acc},
                                {"counted_nspr", report.counted_nspr}};
  return doc.dump();
}

MetricReport report_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    MetricReport r;
    r.uuas = optional_from(doc.at("uuas"));
    r.dspr = optional_from(doc.at("dspr"));
    r.root_acc = optional_from(doc.at("root_acc"));
    r.nspr = optional_from(doc.at("nspr"));
    r.counted_uuas = doc.at("counted_uuas").get<std::size_t>();
    r.counted_dspr = doc.at("counted_dspr").get<std::size_t>();
    r.counted_root_acc = doc.at("counted_root_acc").get<std::size_t>();
    r.counted_nspr = doc.at("counted_nspr").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad metric report: ") + e.what());
  }
}

}  // namespace sprobe
