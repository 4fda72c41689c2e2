#include "sprobe/probe.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sprobe/errors.hpp"
#include "sprobe/rng.hpp"

namespace sprobe {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_dims(const ProbeParams& probe, const Matrix& vectors, ProbeKind expected) {
  if (probe.kind != expected) {
    throw ConfigError(std::string("expected a ") + to_string(expected) + " probe, got " +
                      to_string(probe.kind));
  }
  if (probe.dim() != vectors.cols()) {
    throw DimensionError("probe expects dimension " + std::to_string(probe.dim()) +
                         ", embedding has " + std::to_string(vectors.cols()));
  }
}

// Projected token vectors, n x k.
Matrix project(const ProbeParams& probe, const Matrix& vectors) {
  return multiply_transposed(vectors, probe.B);
}

Matrix pairwise_sq_distances(const Matrix& t) {
  const std::size_t n = t.rows();
  Matrix pred(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto ti = t.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      auto tj = t.row(j);
      double s = 0.0;
      for (std::size_t p = 0; p < t.cols(); ++p) {
        const double diff = ti[p] - tj[p];
        s += diff * diff;
      }
      pred(i, j) = s;
      pred(j, i) = s;
    }
  }
  return pred;
}

std::vector<double> sq_norms(const Matrix& t) {
  std::vector<double> out(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double s = 0.0;
    for (double v : t.row(i)) s += v * v;
    out[i] = s;
  }
  return out;
}

// factor * T^T * W * H for an n x n weight matrix W.
Matrix weighted_outer(const Matrix& t, const Matrix& w, const Matrix& h, double factor) {
  const Matrix wh = multiply(w, h);  // n x d
  Matrix grad(t.cols(), h.cols());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    auto whi = wh.row(i);
    for (std::size_t a = 0; a < t.cols(); ++a) {
      const double tia = factor * t(i, a);
      if (tia == 0.0) continue;
      auto grow = grad.row(a);
      for (std::size_t b = 0; b < h.cols(); ++b) grow[b] += tia * whi[b];
    }
  }
  return grad;
}

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;
};

// The gradient of sum_{i!=j} c_ij ||t_i - t_j||^2 with symmetric c is
// 4 T^T (diag(rowsum c) - c) H.
LossAndGradient distance_objective(const ProbeParams& probe, const Matrix& vectors,
                                   const DistanceMatrix& gold) {
  const std::size_t n = vectors.rows();
  const Matrix t = project(probe, vectors);
  const Matrix pred = pairwise_sq_distances(t);
  const double inv = 1.0 / static_cast<double>(n * n);
  Matrix laplacian(n, n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double residual = gold(i, j) - pred(i, j);
      loss += std::abs(residual);
      const double c = -sign(residual) * inv;
      laplacian(i, j) -= c;
      laplacian(i, i) += c;
    }
  }
  return {loss * inv, weighted_outer(t, laplacian, vectors, 4.0)};
}

LossAndGradient depth_objective(const ProbeParams& probe, const Matrix& vectors,
                                const DepthVector& gold) {
  const std::size_t n = vectors.rows();
  const Matrix t = project(probe, vectors);
  const std::vector<double> pred = sq_norms(t);
  const double inv = 1.0 / static_cast<double>(n);
  Matrix weights(n, n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double residual = gold[i] - pred[i];
    loss += std::abs(residual);
    weights(i, i) = -sign(residual) * inv;
  }
  return {loss * inv, weighted_outer(t, weights, vectors, 2.0)};
}

bool usable(const Example& ex, ProbeKind kind) {
  return kind == ProbeKind::kDistance ? ex.tree.size() >= 2 : ex.tree.size() >= 1;
}

double example_loss(const ProbeParams& probe, const Example& ex) {
  if (probe.kind == ProbeKind::kDistance) {
    return distance_loss(predict_distances(probe, ex.embedding.vectors), ex.distances);
  }
  return depth_loss(predict_depths(probe, ex.embedding.vectors), ex.depths);
}

class Adam {
 public:
  Adam(std::size_t rows, std::size_t cols, double learning_rate)
      : m_(rows, cols), v_(rows, cols), lr_(learning_rate) {}

  void step(Matrix& params, const Matrix& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kAdamBeta1, t_);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t_);
    auto p = params.data();
    auto g = grad.data();
    auto m = m_.data();
    auto v = v_.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEpsilon);
    }
  }

 private:
  Matrix m_;
  Matrix v_;
  double lr_;
  long t_ = 0;
};

const char kBase64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::string& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                            static_cast<unsigned char>(bytes[i + 2]);
    out += kBase64[(v >> 18) & 63];
    out += kBase64[(v >> 12) & 63];
    out += kBase64[(v >> 6) & 63];
    out += kBase64[v & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kBase64[(v >> 18) & 63];
    out += kBase64[(v >> 12) & 63];
    out += rest == 2 ? kBase64[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw ConfigError("base64 length is not a multiple of 4");
  std::string out;
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int x = value(c);
      if (x < 0 || pad > 0) throw ConfigError("invalid base64 payload");
      v = (v << 6) | static_cast<std::uint32_t>(x);
    }
    out += static_cast<char>((v >> 16) & 0xff);
    if (pad < 2) out += static_cast<char>((v >> 8) & 0xff);
    if (pad < 1) out += static_cast<char>(v & 0xff);
  }
  return out;
}

}  // namespace

const char* to_string(ProbeKind kind) {
  return kind == ProbeKind::kDistance ? "distance" : "depth";
}

ProbeKind probe_kind_from_string(const std::string& s) {
  if (s == "distance") return ProbeKind::kDistance;
  if (s == "depth") return ProbeKind::kDepth;
  throw ConfigError("unknown probe kind '" + s + "'");
}

void validate(const TrainConfig& config) {
  if (config.rank < 1) throw ConfigError("rank must be >= 1");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (config.max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (config.patience < 0 || config.patience > config.max_epochs) {
    throw ConfigError("patience must lie in [0, max_epochs]");
  }
  if (!(config.init_scale > 0.0) || !std::isfinite(config.init_scale)) {
    throw ConfigError("init_scale must be positive");
  }
}

Matrix predict_distances(const ProbeParams& probe, const Matrix& vectors) {
  check_dims(probe, vectors, ProbeKind::kDistance);
  return pairwise_sq_distances(project(probe, vectors));
}

std::vector<double> predict_depths(const ProbeParams& probe, const Matrix& vectors) {
  check_dims(probe, vectors, ProbeKind::kDepth);
  return sq_norms(project(probe, vectors));
}

double distance_loss(const Matrix& pred, const DistanceMatrix& gold) {
  const std::size_t n = gold.size();
  if (pred.rows() != n || pred.cols() != n) throw DimensionError("distance_loss: shape mismatch");
  if (n < 2) throw ConfigError("distance loss is undefined for sentences shorter than 2 tokens");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) s += std::abs(gold(i, j) - pred(i, j));
    }
  }
  return s / static_cast<double>(n * n);
}

double depth_loss(std::span<const double> pred, const DepthVector& gold) {
  if (pred.size() != gold.size()) throw DimensionError("depth_loss: length mismatch");
  if (gold.empty()) throw ConfigError("depth loss is undefined for empty sentences");
  double s = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) s += std::abs(gold[i] - pred[i]);
  return s / static_cast<double>(gold.size());
}

Matrix distance_gradient(const ProbeParams& probe, const Matrix& vectors, const DistanceMatrix& gold) {
  check_dims(probe, vectors, ProbeKind::kDistance);
  if (gold.size() != vectors.rows()) throw DimensionError("distance_gradient: shape mismatch");
  return distance_objective(probe, vectors, gold).gradient;
}

Matrix depth_gradient(const ProbeParams& probe, const Matrix& vectors, const DepthVector& gold) {
  check_dims(probe, vectors, ProbeKind::kDepth);
  if (gold.size() != vectors.rows()) throw DimensionError("depth_gradient: length mismatch");
  return depth_objective(probe, vectors, gold).gradient;
}

double mean_loss(const ProbeParams& probe, std::span<const Example> split) {
  double total = 0.0;
  std::size_t count = 0;
  for (const Example& ex : split) {
    if (!usable(ex, probe.kind)) continue;
    total += example_loss(probe, ex);
    ++count;
  }
  if (count == 0) throw ConfigError("split has no usable sentences");
  return total / static_cast<double>(count);
}

TrainResult train_probe(std::span<const Example> train, std::span<const Example> dev,
                        ProbeKind kind, const TrainConfig& config, int layer) {
  validate(config);
  std::vector<const Example*> train_set;
  for (const Example& ex : train) {
    if (usable(ex, kind)) train_set.push_back(&ex);
  }
  std::size_t dev_count = 0;
  for (const Example& ex : dev) dev_count += usable(ex, kind) ? 1 : 0;
  if (train_set.empty()) throw ConfigError("training split has no usable sentences");
  if (dev_count == 0) throw ConfigError("dev split has no usable sentences");

  const std::size_t d = train_set.front()->embedding.dim();
  for (const Example* ex : train_set) {
    if (ex->embedding.dim() != d) throw DimensionError("inconsistent embedding dimension in training split");
  }
  for (const Example& ex : dev) {
    if (ex.embedding.dim() != d) throw DimensionError("dev embedding dimension differs from training split");
  }
  const auto rank = static_cast<std::size_t>(config.rank);
  if (rank > d) {
    throw ConfigError("probe rank " + std::to_string(rank) + " exceeds embedding dimension " +
                      std::to_string(d));
  }

  ProbeParams probe{kind, layer, config.seed, Matrix(rank, d)};
  Rng init_rng(hash_combine(config.seed, 0x1417));
  for (double& v : probe.B.data()) v = init_rng.uniform(-config.init_scale, config.init_scale);

  TrainResult result{probe, {}};
  Rng order_rng(hash_combine(config.seed, 0x5eed));
  Adam adam(rank, d, config.learning_rate);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  double best_dev = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.below(i)]);
    }
    double train_total = 0.0;
    for (std::size_t idx : order) {
      const Example& ex = *train_set[idx];
      const LossAndGradient lg = kind == ProbeKind::kDistance
                                     ? distance_objective(probe, ex.embedding.vectors, ex.distances)
                                     : depth_objective(probe, ex.embedding.vectors, ex.depths);
      if (!std::isfinite(lg.loss) || !lg.gradient.all_finite()) {
        throw DivergenceError(epoch, config.learning_rate);
      }
      train_total += lg.loss;
      adam.step(probe.B, lg.gradient);
    }
    const double dev_loss = mean_loss(probe, dev);
    if (!std::isfinite(dev_loss)) throw DivergenceError(epoch, config.learning_rate);
    result.log.epochs.push_back({epoch, train_total / static_cast<double>(order.size()), dev_loss});

    if (dev_loss < best_dev) {
      best_dev = dev_loss;
      result.probe.B = probe.B;
      result.log.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience && config.patience > 0) {
      break;
    }
  }
  return result;
}

std::string probe_to_json(const ProbeParams& probe) {
  std::string raw;
  raw.reserve(probe.B.data().size() * 8);
  for (double v : probe.B.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) raw.push_back(static_cast<char>((bits >> s) & 0xff));
  }
  nlohmann::ordered_json doc = {{"kind", to_string(probe.kind)},
                                {"layer", probe.layer},
                                {"rank", probe.rank()},
                                {"d", probe.dim()},
                                {"seed", probe.seed},
                                {"weights", base64_encode(raw)}};
  return doc.dump() + "\n";
}

ProbeParams probe_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    ProbeParams probe;
    probe.kind = probe_kind_from_string(doc.at("kind").get<std::string>());
    probe.layer = doc.at("layer").get<int>();
    probe.seed = doc.at("seed").get<std::uint64_t>();
    const auto rank = doc.at("rank").get<std::size_t>();
    const auto d = doc.at("d").get<std::size_t>();
    const std::string raw = base64_decode(doc.at("weights").get<std::string>());
    if (raw.size() != rank * d * 8) throw ConfigError("probe weights do not match rank x d");
    std::vector<double> values(rank * d);
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i * 8 + b])) << (8 * b);
      }
      values[i] = std::bit_cast<double>(bits);
    }
    probe.B = Matrix(rank, d, std::move(values));
    if (!probe.B.all_finite()) throw ConfigError("probe weights contain non-finite values");
    return probe;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad probe document: ") + e.what());
  }
}

std::string training_log_csv(const TrainingLog& log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,dev_loss\n";
  for (const auto& r : log.epochs) out << r.epoch << ',' << r.train_loss << ',' << r.dev_loss << '\n';
  return out.str();
}

}  // namespace sprobe
