#include "sprobe/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sprobe/embstore.hpp"
#include "sprobe/errors.hpp"
#include "sprobe/treebank.hpp"

namespace sprobe {

namespace {

using ordered_json = nlohmann::ordered_json;

struct Cell {
  const ManifestEntry* entry = nullptr;
  SeedResult result;
  std::exception_ptr error;
};

std::string cell_name(const ManifestEntry& e) {
  return e.task + "_seed" + std::to_string(e.seed) + "_ckpt" + std::to_string(e.checkpoint_index);
}

std::string describe(const ManifestEntry& e) {
  return "manifest entry (task '" + e.task + "', seed " + std::to_string(e.seed) + ", checkpoint " +
         std::to_string(e.checkpoint_index) + ", path '" + e.path + "')";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
}

std::vector<Example> align_split(const std::vector<SentenceEmbedding>& embeddings,
                                 const std::vector<SentenceTree>& trees, const char* split) {
  AlignedDataset aligned = align(embeddings, trees);
  if (!aligned.unmatched_tree_ids.empty()) {
    throw AlignmentError(aligned.unmatched_tree_ids.front(),
                         std::string("no embedding for ") + split + " sentence (" +
                             std::to_string(aligned.unmatched_tree_ids.size()) + " missing)");
  }
  return std::move(aligned.examples);
}

std::vector<SentenceTree> load_split(const std::filesystem::path& path, bool skip_invalid,
                                     std::ostream* log) {
  ParseResult parsed;
  try {
    parsed = read_conllu_file(path.string(), {skip_invalid});
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  if (log) {
    for (const auto& msg : parsed.skipped) *log << "skipped invalid sentence in " << path.string() << ": " << msg << '\n';
  }
  if (parsed.sentences.empty()) throw ConfigError("treebank '" + path.string() + "' has no sentences");
  return std::move(parsed.sentences);
}

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

ordered_json stat_json(const MetricStat& s) {
  return {{"mean", optional_json(s.mean)}, {"min", optional_json(s.min)}, {"max", optional_json(s.max)}};
}

MetricStat stat_from(const nlohmann::json& j) {
  return {optional_from(j.at("mean")), optional_from(j.at("min")), optional_from(j.at("max"))};
}

ordered_json metric_report_json(const MetricReport& r) {
  return {{"uuas", optional_json(r.uuas)},
          {"dspr", optional_json(r.dspr)},
          {"root_acc", optional_json(r.root_acc)},
          {"nspr", optional_json(r.nspr)},
          {"counted_uuas", r.counted_uuas},
          {"counted_dspr", r.counted_dspr},
          {"counted_root_acc", r.counted_root_acc},
          {"counted_nspr", r.counted_nspr}};
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fixed6(const std::optional<double>& v) { return v ? fixed6(*v) : std::string(); }

}  // namespace

const MetricStat& stat(const CurvePoint& point, std::string_view metric) {
  if (metric == "uuas") return point.uuas;
  if (metric == "dspr") return point.dspr;
  if (metric == "root_acc") return point.root_acc;
  if (metric == "nspr") return point.nspr;
  throw ConfigError("unknown metric '" + std::string(metric) + "'");
}

std::uint64_t probe_seed(std::uint64_t base_seed, std::int64_t manifest_seed, int checkpoint_index) {
  return base_seed ^ static_cast<std::uint64_t>(manifest_seed) ^ static_cast<std::uint64_t>(checkpoint_index);
}

CurvePoint aggregate_checkpoint(int checkpoint_index, double epoch_fraction, std::vector<SeedResult> seeds) {
  std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  auto summarize = [&](auto field) {
    MetricStat s;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& seed : seeds) {
      const std::optional<double>& v = seed.report.*field;
      if (!v) continue;
      sum += *v;
      ++count;
      s.min = s.min ? std::min(*s.min, *v) : *v;
      s.max = s.max ? std::max(*s.max, *v) : *v;
    }
    if (count > 0) {
      // Guard the band against last-ulp rounding of the mean.
      s.mean = std::clamp(sum / static_cast<double>(count), *s.min, *s.max);
    }
    return s;
  };
  CurvePoint p;
  p.checkpoint_index = checkpoint_index;
  p.epoch_fraction = epoch_fraction;
  p.uuas = summarize(&MetricReport::uuas);
  p.dspr = summarize(&MetricReport::dspr);
  p.root_acc = summarize(&MetricReport::root_acc);
  p.nspr = summarize(&MetricReport::nspr);
  double task_sum = 0.0;
  std::size_t task_count = 0;
  for (const auto& seed : seeds) {
    if (seed.task_metric) {
      task_sum += *seed.task_metric;
      ++task_count;
    }
  }
  if (task_count > 0) p.task_metric = task_sum / static_cast<double>(task_count);
  p.seeds = std::move(seeds);
  return p;
}

SweepReport run_sweep(const SweepConfig& config, std::ostream* log) {
  validate(config.train_config);
  const CheckpointManifest manifest = load_manifest(config.manifest);

  std::string task = config.task;
  if (task.empty()) {
    std::set<std::string> tasks;
    for (const auto& e : manifest.entries) tasks.insert(e.task);
    if (tasks.size() != 1) {
      throw ConfigError("manifest holds " + std::to_string(tasks.size()) +
                        " tasks; choose one explicitly");
    }
    task = *tasks.begin();
  }

  std::vector<Cell> cells;
  for (const auto& e : manifest.entries) {
    if (e.task == task) cells.push_back({&e, {}, nullptr});
  }
  if (cells.empty()) throw ConfigError("manifest has no entries for task '" + task + "'");
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::pair(a.entry->checkpoint_index, a.entry->seed) <
           std::pair(b.entry->checkpoint_index, b.entry->seed);
  });

  const auto train_trees = load_split(config.train, config.skip_invalid, log);
  const auto dev_trees = load_split(config.dev, config.skip_invalid, log);
  const auto test_trees = load_split(config.test, config.skip_invalid, log);
  {
    std::set<std::string> ids;
    for (const auto* split : {&train_trees, &dev_trees, &test_trees}) {
      for (const auto& t : *split) {
        if (!ids.insert(t.id).second) {
          throw ConfigError("sentence id '" + t.id + "' appears in more than one split");
        }
      }
    }
  }
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir / "cells");

  std::mutex log_mutex;
  auto run_cell = [&](Cell& cell) {
    const ManifestEntry& entry = *cell.entry;
    try {
      const auto path = manifest.resolve(entry);
      if (!std::filesystem::exists(path)) throw Error("embedding file '" + path.string() + "' not found");
      const auto embeddings = read_embeddings_file(path);
      const auto train = align_split(embeddings, train_trees, "train");
      const auto dev = align_split(embeddings, dev_trees, "dev");
      const auto test = align_split(embeddings, test_trees, "test");

      TrainConfig tc = config.train_config;
      tc.seed = probe_seed(config.train_config.seed, entry.seed, entry.checkpoint_index);
      const auto distance = train_probe(train, dev, ProbeKind::kDistance, tc, entry.layer);
      const auto depth = train_probe(train, dev, ProbeKind::kDepth, tc, entry.layer);
      cell.result = {entry.seed, evaluate(distance.probe, depth.probe, test, config.metric),
                     entry.task_metric};

      if (!config.out_dir.empty()) {
        const auto base = config.out_dir / "cells" / cell_name(entry);
        write_text(base.string() + "_distance.json", probe_to_json(distance.probe));
        write_text(base.string() + "_depth.json", probe_to_json(depth.probe));
        write_text(base.string() + "_distance_log.csv", training_log_csv(distance.log));
        write_text(base.string() + "_depth_log.csv", training_log_csv(depth.log));
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << cell_name(entry) << ": uuas=" << fixed6(cell.result.report.uuas)
             << " dspr=" << fixed6(cell.result.report.dspr)
             << " root_acc=" << fixed6(cell.result.report.root_acc)
             << " nspr=" << fixed6(cell.result.report.nspr) << '\n';
      }
    } catch (const std::exception& e) {
      cell.error = std::make_exception_ptr(Error(describe(entry) + ": " + e.what()));
    }
  };

  int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(cells.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(cells[i]);
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const Cell& c : cells) {
    if (c.error) std::rethrow_exception(c.error);
  }

  SweepReport report;
  report.task = task;
  report.config = {config.manifest.string(), config.train.string(), config.dev.string(),
                   config.test.string(), config.train_config, config.metric};
  std::size_t i = 0;
  while (i < cells.size()) {
    const ManifestEntry& first = *cells[i].entry;
    std::vector<SeedResult> seeds;
    for (; i < cells.size() && cells[i].entry->checkpoint_index == first.checkpoint_index; ++i) {
      if (std::abs(cells[i].entry->epoch_fraction - first.epoch_fraction) > 1e-12) {
        throw ConfigError(describe(*cells[i].entry) + ": epoch_fraction differs across seeds");
      }
      seeds.push_back(cells[i].result);
    }
    report.points.push_back(aggregate_checkpoint(first.checkpoint_index, first.epoch_fraction, std::move(seeds)));
  }
  return report;
}

std::string sweep_report_to_json(const SweepReport& report) {
  const auto& c = report.config;
  ordered_json config = {{"manifest", c.manifest},
                         {"train", c.train},
                         {"dev", c.dev},
                         {"test", c.test},
                         {"rank", c.train_config.rank},
                         {"learning_rate", c.train_config.learning_rate},
                         {"max_epochs", c.train_config.max_epochs},
                         {"patience", c.train_config.patience},
                         {"seed", c.train_config.seed},
                         {"init_scale", c.train_config.init_scale},
                         {"filter_scope", to_string(c.metric.scope)},
                         {"min_length", c.metric.length.min_length},
                         {"max_length", c.metric.length.max_length}};
  ordered_json points = ordered_json::array();
  for (const auto& p : report.points) {
    ordered_json metrics = ordered_json::object();
    for (const char* name : kMetricNames) metrics[name] = stat_json(stat(p, name));
    ordered_json seeds = ordered_json::array();
    for (const auto& s : p.seeds) {
      seeds.push_back({{"seed", s.seed},
                       {"report", metric_report_json(s.report)},
                       {"task_metric", optional_json(s.task_metric)}});
    }
    points.push_back({{"checkpoint_index", p.checkpoint_index},
                      {"epoch_fraction", p.epoch_fraction},
                      {"metrics", std::move(metrics)},
                      {"task_metric", optional_json(p.task_metric)},
                      {"seeds", std::move(seeds)}});
  }
  ordered_json doc = {{"task", report.task}, {"config", std::move(config)}, {"points", std::move(points)}};
  return doc.dump(2) + "\n";
}

SweepReport sweep_report_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    SweepReport report;
    report.task = doc.at("task").get<std::string>();
    const auto& c = doc.at("config");
    report.config.manifest = c.at("manifest").get<std::string>();
    report.config.train = c.at("train").get<std::string>();
    report.config.dev = c.at("dev").get<std::string>();
    report.config.test = c.at("test").get<std::string>();
    report.config.train_config.rank = c.at("rank").get<int>();
    report.config.train_config.learning_rate = c.at("learning_rate").get<double>();
    report.config.train_config.max_epochs = c.at("max_epochs").get<int>();
    report.config.train_config.patience = c.at("patience").get<int>();
    report.config.train_config.seed = c.at("seed").get<std::uint64_t>();
    report.config.train_config.init_scale = c.at("init_scale").get<double>();
    report.config.metric.scope = filter_scope_from_string(c.at("filter_scope").get<std::string>());
    report.config.metric.length.min_length = c.at("min_length").get<std::size_t>();
    report.config.metric.length.max_length = c.at("max_length").get<std::size_t>();

    int previous = -1;
    for (const auto& pj : doc.at("points")) {
      CurvePoint p;
      p.checkpoint_index = pj.at("checkpoint_index").get<int>();
      if (p.checkpoint_index <= previous) throw ConfigError("checkpoint indices must strictly increase");
      previous = p.checkpoint_index;
      p.epoch_fraction = pj.at("epoch_fraction").get<double>();
      const auto& m = pj.at("metrics");
      p.uuas = stat_from(m.at("uuas"));
      p.dspr = stat_from(m.at("dspr"));
      p.root_acc = stat_from(m.at("root_acc"));
      p.nspr = stat_from(m.at("nspr"));
      p.task_metric = optional_from(pj.at("task_metric"));
      for (const auto& sj : pj.at("seeds")) {
        SeedResult s;
        s.seed = sj.at("seed").get<std::int64_t>();
        s.report = report_from_json(sj.at("report").dump());
        s.task_metric = optional_from(sj.at("task_metric"));
        p.seeds.push_back(std::move(s));
      }
      report.points.push_back(std::move(p));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad sweep report: ") + e.what());
  }
}

void save_sweep_report(const SweepReport& report, const std::filesystem::path& path) {
  write_text(path, sweep_report_to_json(report));
}

SweepReport load_sweep_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open sweep report '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sweep_report_from_json(buf.str());
}

std::size_t emit_csv(const SweepReport& report, std::ostream& sink) {
  std::string out = "checkpoint,epoch_fraction,metric,mean,min,max,task_metric\n";
  for (const auto& p : report.points) {
    for (const char* name : kMetricNames) {
      const MetricStat& s = stat(p, name);
      out += std::to_string(p.checkpoint_index) + ',' + fixed6(p.epoch_fraction) + ',' + name + ',' +
             fixed6(s.mean) + ',' + fixed6(s.min) + ',' + fixed6(s.max) + ',' + fixed6(p.task_metric) + '\n';
    }
  }
  sink.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!sink) throw Error("failed writing CSV");
  return out.size();
}

std::string emit_plot_data(const SweepReport& report) {
  ordered_json metrics = ordered_json::object();
  for (const char* name : kMetricNames) {
    ordered_json x = ordered_json::array(), y = ordered_json::array(), lo = ordered_json::array(),
                 hi = ordered_json::array();
    for (const auto& p : report.points) {
      const MetricStat& s = stat(p, name);
      x.push_back(p.epoch_fraction);
      y.push_back(optional_json(s.mean));
      lo.push_back(optional_json(s.min));
      hi.push_back(optional_json(s.max));
    }
    metrics[name] = {{"x", std::move(x)}, {"y", std::move(y)}, {"y_lo", std::move(lo)}, {"y_hi", std::move(hi)}};
  }
  ordered_json checkpoints = ordered_json::array();
  for (const auto& p : report.points) checkpoints.push_back(p.checkpoint_index);
  ordered_json doc = {{"task", report.task},
                      {"checkpoints", std::move(checkpoints)},
                      {"metrics", std::move(metrics)}};

  const bool has_task_metric = std::any_of(report.points.begin(), report.points.end(),
                                           [](const CurvePoint& p) { return p.task_metric.has_value(); });
  if (has_task_metric) {
    ordered_json x = ordered_json::array(), y = ordered_json::array();
    for (const auto& p : report.points) {
      x.push_back(p.epoch_fraction);
      y.push_back(optional_json(p.task_metric));
    }
    doc["task_metric"] = {{"x", std::move(x)}, {"y", std::move(y)}};
  }
  return doc.dump(2) + "\n";
}

void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_sweep_report(report, dir / "report.json");
  {
    std::ofstream csv(dir / "curves.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw Error("cannot open '" + (dir / "curves.csv").string() + "' for writing");
    emit_csv(report, csv);
  }
  write_text(dir / "plot_data.json", emit_plot_data(report));
}

}  // namespace sprobe
