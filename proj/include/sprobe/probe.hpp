#pragma once

// Structural probes: a linear map B (k x d) under which squared L2 distance
// between token vectors approximates tree distance (distance probe) and
// squared L2 norm approximates tree depth (depth probe).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sprobe/embstore.hpp"
#include "sprobe/matrix.hpp"
#include "sprobe/treebank.hpp"

namespace sprobe {

enum class ProbeKind { kDistance, kDepth };

const char* to_string(ProbeKind kind);
ProbeKind probe_kind_from_string(const std::string& s);

struct ProbeParams {
  ProbeKind kind = ProbeKind::kDistance;
  int layer = 0;
  std::uint64_t seed = 0;
  Matrix B;  // rank x dim

  std::size_t rank() const { return B.rows(); }
  std::size_t dim() const { return B.cols(); }
};

struct TrainConfig {
  int rank = 128;
  double learning_rate = 1e-3;
  int max_epochs = 40;
  // Epochs without dev improvement before stopping; 0 disables early stopping.
  int patience = 5;
  std::uint64_t seed = 0;
  double init_scale = 0.05;
};

void validate(const TrainConfig& config);

// Entry (i, j) = ||B (h_i - h_j)||^2.
Matrix predict_distances(const ProbeParams& probe, const Matrix& vectors);
// Entry i = ||B h_i||^2.
std::vector<double> predict_depths(const ProbeParams& probe, const Matrix& vectors);

// (1/n^2) * sum over ordered pairs i != j of |gold - pred|. Needs n >= 2.
double distance_loss(const Matrix& pred, const DistanceMatrix& gold);
// (1/n) * sum_i |gold_i - pred_i|.
double depth_loss(std::span<const double> pred, const DepthVector& gold);

// L1 subgradients with respect to B, using sign(0) = 0.
Matrix distance_gradient(const ProbeParams& probe, const Matrix& vectors, const DistanceMatrix& gold);
Matrix depth_gradient(const ProbeParams& probe, const Matrix& vectors, const DepthVector& gold);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 0 when the initialization is returned
};

struct TrainResult {
  ProbeParams probe;
  TrainingLog log;
};

// Per-sentence Adam steps, seeded shuffling, dev-loss early stopping, and
// best-dev snapshot selection. Distance probes ignore sentences with fewer
// than two tokens. Throws ConfigError on empty splits and DivergenceError on
// non-finite loss.
TrainResult train_probe(std::span<const Example> train, std::span<const Example> dev,
                        ProbeKind kind, const TrainConfig& config, int layer = 0);

// Mean per-sentence loss over the usable sentences of a split.
double mean_loss(const ProbeParams& probe, std::span<const Example> split);

// {"kind","layer","rank","d","seed","weights"} with weights the base64 of
// row-major little-endian binary64 B.
std::string probe_to_json(const ProbeParams& probe);
ProbeParams probe_from_json(const std::string& text);

// "epoch,train_loss,dev_loss" rows.
std::string training_log_csv(const TrainingLog& log);

}  // namespace sprobe
