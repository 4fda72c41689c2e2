#pragma once

// UUAS, DSpr, Root% and NSpr.
//
// All corpus-level values are macro-averages over sentences. A value is
// std::nullopt when no sentence (or word) contributes to it.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sprobe/embstore.hpp"
#include "sprobe/matrix.hpp"
#include "sprobe/probe.hpp"
#include "sprobe/treebank.hpp"

namespace sprobe {

struct LengthFilter {
  std::size_t min_length = 5;
  std::size_t max_length = 50;

  bool accepts(std::size_t n) const { return n >= min_length && n <= max_length; }
};

// Which metrics the length filter applies to. DSpr, NSpr and Root% are always
// filtered; kAll extends the filter to UUAS.
enum class FilterScope { kSpearmanOnly, kAll };

const char* to_string(FilterScope scope);
FilterScope filter_scope_from_string(const std::string& s);

struct MetricConfig {
  LengthFilter length;
  FilterScope scope = FilterScope::kSpearmanOnly;
};

struct Aggregate {
  std::optional<double> value;
  std::size_t counted = 0;
};

// Pearson correlation of average-tied ranks. nullopt when either input is
// constant. Throws ConfigError on length mismatch or fewer than 2 values.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// Average (1-based) ranks with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Sentence UUAS after dropping every edge that touches a punctuation token.
// nullopt when no gold edge survives the filter.
std::optional<double> uuas(const EdgeSet& pred, const EdgeSet& gold, const std::vector<bool>& punct);

struct UuasInput {
  EdgeSet pred;
  EdgeSet gold;
  std::vector<bool> punct;
};

// Macro-average of sentence UUAS; a filter, when given, drops sentences by length.
Aggregate uuas_corpus(std::span<const UuasInput> sentences,
                      const std::optional<LengthFilter>& filter = std::nullopt);

// Per word: spearman of the gold and predicted rows without the diagonal;
// averaged over words, then over sentences in the length range.
Aggregate dspr(std::span<const DistanceMatrix> gold, std::span<const Matrix> pred,
               const LengthFilter& filter = {});

struct RootPrediction {
  std::size_t length = 0;
  std::size_t gold_root = 0;
  std::size_t predicted_root = 0;
};

Aggregate root_accuracy(std::span<const RootPrediction> sentences, const LengthFilter& filter = {});

Aggregate nspr(std::span<const DepthVector> gold, std::span<const std::vector<double>> pred,
               const LengthFilter& filter = {});

struct MetricReport {
  std::optional<double> uuas;
  std::optional<double> dspr;
  std::optional<double> root_acc;
  std::optional<double> nspr;
  std::size_t counted_uuas = 0;
  std::size_t counted_dspr = 0;
  std::size_t counted_root_acc = 0;
  std::size_t counted_nspr = 0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

// Decodes and scores precomputed predictions for each example.
MetricReport evaluate_predictions(std::span<const Example> examples,
                                  std::span<const Matrix> pred_distances,
                                  std::span<const std::vector<double>> pred_depths,
                                  const MetricConfig& config = {});

// Predict, decode, and score a test split. Throws ConfigError on an empty set.
MetricReport evaluate(const ProbeParams& distance_probe, const ProbeParams& depth_probe,
                      std::span<const Example> test, const MetricConfig& config = {});

std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);

}  // namespace sprobe
