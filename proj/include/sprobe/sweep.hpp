#pragma once

// Checkpoint x seed experiment driver and its report formats.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sprobe/metrics.hpp"
#include "sprobe/probe.hpp"

namespace sprobe {

struct SweepConfig {
  std::filesystem::path manifest;
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path test;
  // Per-cell probes and training logs go here; empty disables them.
  std::filesystem::path out_dir;
  // Manifest task to run; may be empty when the manifest holds one task.
  std::string task;
  TrainConfig train_config;
  MetricConfig metric;
  bool skip_invalid = false;
  // Worker threads; 0 = hardware concurrency.
  int threads = 0;
};

// Inputs recorded in the report (paths exactly as given).
struct ConfigSnapshot {
  std::string manifest;
  std::string train;
  std::string dev;
  std::string test;
  TrainConfig train_config;
  MetricConfig metric;
};

struct MetricStat {
  std::optional<double> mean;
  std::optional<double> min;
  std::optional<double> max;
};

struct SeedResult {
  std::int64_t seed = 0;
  MetricReport report;
  std::optional<double> task_metric;
};

struct CurvePoint {
  int checkpoint_index = 0;
  double epoch_fraction = 0.0;
  MetricStat uuas;
  MetricStat dspr;
  MetricStat root_acc;
  MetricStat nspr;
  std::optional<double> task_metric;  // mean over seeds that report one
  std::vector<SeedResult> seeds;      // ascending seed order
};

struct SweepReport {
  std::string task;
  std::vector<CurvePoint> points;  // strictly increasing checkpoint_index
  ConfigSnapshot config;
};

// Metric names in CSV row order.
inline constexpr const char* kMetricNames[] = {"dspr", "nspr", "root_acc", "uuas"};

const MetricStat& stat(const CurvePoint& point, std::string_view metric);

// Mean/min/max over the seeds where each metric is defined.
CurvePoint aggregate_checkpoint(int checkpoint_index, double epoch_fraction,
                                std::vector<SeedResult> seeds);

// Trains distance and depth probes per (checkpoint, seed) cell, evaluates on
// the test split, and aggregates across seeds. Progress lines go to `log`
// when given.
SweepReport run_sweep(const SweepConfig& config, std::ostream* log = nullptr);

// Seed of the probes trained for one manifest cell.
std::uint64_t probe_seed(std::uint64_t base_seed, std::int64_t manifest_seed, int checkpoint_index);

std::string sweep_report_to_json(const SweepReport& report);
SweepReport sweep_report_from_json(const std::string& text);
void save_sweep_report(const SweepReport& report, const std::filesystem::path& path);
SweepReport load_sweep_report(const std::filesystem::path& path);

// Header `checkpoint,epoch_fraction,metric,mean,min,max,task_metric`, then one
// row per (checkpoint, metric); reals with 6 decimals, undefined values empty.
std::size_t emit_csv(const SweepReport& report, std::ostream& sink);

// Per metric: arrays x (epoch_fraction), y (mean), y_lo (min), y_hi (max);
// plus a task_metric series when any checkpoint carries one.
std::string emit_plot_data(const SweepReport& report);

// report.json, curves.csv and plot_data.json under dir.
void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir);

}  // namespace sprobe
