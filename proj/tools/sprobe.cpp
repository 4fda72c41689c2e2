// sprobe: structural-probe sweeps over checkpoint embedding dumps.
//
//   sprobe sweep run --manifest M --train T --dev D --test E --out DIR
//                    [--rank K] [--filter-scope spearman-only|all] [--seed N]
//   sprobe report csv REPORT [--out FILE]
//   sprobe report plot-data REPORT [--out FILE]
//   sprobe synth generate --sentences N --alphas a1,a2,... --dim D --seed S --out DIR

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sprobe/errors.hpp"
#include "sprobe/sweep.hpp"
#include "sprobe/synth.hpp"

namespace {

void write_or_print(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw sprobe::Error("cannot open '" + out + "' for writing");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural probe training, evaluation, and checkpoint sweeps"};
  app.require_subcommand(1);

  // sweep run
  auto* sweep = app.add_subcommand("sweep", "Checkpoint x seed probe sweeps");
  sweep->require_subcommand(1);
  auto* run = sweep->add_subcommand("run", "Train and evaluate probes for every manifest cell");
  sprobe::SweepConfig cfg;
  std::string manifest, train, dev, test, out_dir, scope = "spearman-only";
  run->add_option("--manifest", manifest, "Checkpoint manifest (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--train", train, "Probe training split (CoNLL-U)")->required()->check(CLI::ExistingFile);
  run->add_option("--dev", dev, "Probe dev split (CoNLL-U)")->required()->check(CLI::ExistingFile);
  run->add_option("--test", test, "Probe test split (CoNLL-U)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--rank", cfg.train_config.rank, "Probe rank k")->capture_default_str();
  run->add_option("--filter-scope", scope, "Length filter scope")
      ->check(CLI::IsMember({"spearman-only", "all"}))
      ->capture_default_str();
  run->add_option("--seed", cfg.train_config.seed, "Base probe seed")->capture_default_str();
  run->add_option("--task", cfg.task, "Manifest task (required if the manifest holds several)");
  run->add_option("--epochs", cfg.train_config.max_epochs, "Maximum training epochs")->capture_default_str();
  run->add_option("--patience", cfg.train_config.patience, "Early-stopping patience")->capture_default_str();
  run->add_option("--lr", cfg.train_config.learning_rate, "Adam learning rate")->capture_default_str();
  run->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  run->add_flag("--skip-invalid", cfg.skip_invalid, "Drop (and log) sentences that fail tree validation");

  // report csv / plot-data
  auto* report = app.add_subcommand("report", "Render a saved sweep report");
  report->require_subcommand(1);
  std::string report_path, report_out;
  auto* csv = report->add_subcommand("csv", "Curve table as CSV");
  csv->add_option("report", report_path, "report.json from sweep run")->required()->check(CLI::ExistingFile);
  csv->add_option("--out", report_out, "Output file (default stdout)");
  auto* plot = report->add_subcommand("plot-data", "Curve arrays as JSON");
  plot->add_option("report", report_path, "report.json from sweep run")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", report_out, "Output file (default stdout)");

  // synth generate
  auto* synth = app.add_subcommand("synth", "Synthetic checkpoint series with known trees");
  synth->require_subcommand(1);
  auto* generate = synth->add_subcommand("generate", "Write treebank splits, EMB1 files, and a manifest");
  sprobe::SeriesConfig series;
  std::string series_out;
  generate->add_option("--sentences", series.sentences, "Number of sentences")->required();
  generate->add_option("--alphas", series.alphas, "Noise level per checkpoint")->required()->delimiter(',');
  generate->add_option("--dim", series.dim, "Embedding dimension")->required();
  generate->add_option("--seed", series.seed, "Series seed")->required();
  generate->add_option("--out", series_out, "Output directory")->required();
  generate->add_option("--seeds", series.seeds, "Model seeds per checkpoint")->capture_default_str();
  generate->add_option("--task", series.task, "Task name in the manifest")->capture_default_str();
  generate->add_option("--min-length", series.min_length, "Shortest sentence")->capture_default_str();
  generate->add_option("--max-length", series.max_length, "Longest sentence")->capture_default_str();
  generate->add_option("--condition", series.transform_condition,
                       "Condition number of the hidden transform (1 = none)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.manifest = manifest;
      cfg.train = train;
      cfg.dev = dev;
      cfg.test = test;
      cfg.out_dir = out_dir;
      cfg.metric.scope = sprobe::filter_scope_from_string(scope);
      const auto result = sprobe::run_sweep(cfg, &std::cerr);
      sprobe::write_sweep_outputs(result, out_dir);
      std::cerr << "wrote " << result.points.size() << " curve points to " << out_dir << '\n';
    } else if (*csv) {
      std::ostringstream buf;
      sprobe::emit_csv(sprobe::load_sweep_report(report_path), buf);
      write_or_print(buf.str(), report_out);
    } else if (*plot) {
      write_or_print(sprobe::emit_plot_data(sprobe::load_sweep_report(report_path)), report_out);
    } else if (*generate) {
      series.out_dir = series_out;
      const auto m = sprobe::generate_series(series);
      std::cerr << "wrote " << m.entries.size() << " embedding files and manifest.json to " << series_out
                << '\n';
    }
  } catch (const sprobe::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
