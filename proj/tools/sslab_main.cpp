// Command-line front end: run experiments, sweep parameter grids, render
// decision boundaries, and bin confidence histograms.
//
// Exit codes: 0 success, 1 runtime/O failure, 2 configuration error,
// 3 training aborted on a non-finite loss.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sslab/boundary.hpp"
#include "sslab/runner.hpp"

namespace fs = std::filesystem;
using namespace sslab;

namespace {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::string item;
  std::istringstream stream(csv);
  while (std::getline(stream, item, ',')) {
    if (item.empty()) continue;
    try {
      size_t pos = 0;
      seeds.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("--seeds entry '" + item + "' is not an integer");
    }
  }
  return seeds;
}

SweepAxis parse_axis(const std::string& spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
    throw ConfigError("axis '" + spec + "' is not of the form key=v1,v2,...");
  }
  SweepAxis axis;
  axis.key = spec.substr(0, eq);
  std::istringstream stream(spec.substr(eq + 1));
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) axis.values.push_back(item);
  }
  if (axis.values.empty()) throw ConfigError("axis '" + spec + "' has no values");
  return axis;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& overrides, bool full_metrics) {
  auto effective = overrides;
  if (full_metrics) effective.push_back("full_metrics=true");
  const TrainConfig cfg = load_config_file(config_path, effective);
  const RunArtifacts artifacts = run_to_directory(cfg, out_dir, iso_timestamp());
  std::cout << "run " << artifacts.run_id << " done: eval_error="
            << artifacts.final_eval_error << " quantity=" << artifacts.final_quantity
            << " out=" << artifacts.out_dir << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& seeds_csv, const std::vector<std::string>& axis_specs,
              int jobs) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file: " + config_path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto base_pairs = parse_flat_config(buffer.str());

  std::vector<SweepAxis> axes;
  for (const auto& spec : axis_specs) axes.push_back(parse_axis(spec));
  const auto seeds = parse_seeds(seeds_csv);

  const SweepResult result = run_sweep(base_pairs, axes, seeds, out_dir, jobs);
  std::cout << "sweep done: " << result.cells.size() << " cells, " << result.failures
            << " failed; summary at " << (fs::path(out_dir) / "summary.csv").string()
            << "\n";
  for (const auto& cell : result.cells) {
    if (cell.status != "ok") {
      std::cout << "  [" << cell.status << "] " << cell.dir_name << ": " << cell.message
                << "\n";
    }
  }
  return 0;
}

int cmd_boundary(const std::string& checkpoint, const std::string& dataset_csv,
                 int resolution, const std::string& out_dir) {
  const MlpModel model = load_model(checkpoint);
  const PointDataset dataset = load_dataset_csv(dataset_csv);
  const GridEval grid = evaluate_grid(model, dataset, resolution);
  fs::create_directories(out_dir);
  write_grid_csv((fs::path(out_dir) / "boundary_grid.csv").string(), grid);
  write_boundary_svg((fs::path(out_dir) / "boundary.svg").string(), grid, dataset);
  std::cout << "boundary written to " << out_dir << "\n";
  return 0;
}

int cmd_hist(const std::string& outcomes_path, int bins, const std::string& out_path,
             const std::string& manifest_path) {
  const auto outcomes = read_outcomes_csv(outcomes_path);
  if (!manifest_path.empty()) {
    const RunManifest manifest = read_manifest(manifest_path);
    const TrainConfig cfg = config_from_pairs(parse_flat_config(manifest.config_text));
    GaussianStats stats;
    stats.mu_hat = manifest.final_mu_hat;
    stats.var_hat = manifest.final_var_hat;
    write_histogram_csv(out_path, outcomes, bins, &cfg.scheme, &stats, cfg.total_steps);
  } else {
    write_histogram_csv(out_path, outcomes, bins, nullptr, nullptr);
  }
  std::cout << "histogram written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised sample-weighting laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run_out", seeds_csv, checkpoint, dataset_csv;
  std::string outcomes_path, hist_out = "hist.csv", manifest_path;
  std::vector<std::string> overrides, axis_specs;
  bool full_metrics = false;
  int resolution = 100, bins = 20, jobs = 1;

  auto* run = app.add_subcommand("run", "execute one training run");
  run->add_option("--config", config_path, "config file path")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--set", overrides, "override key=value (repeatable)");
  run->add_flag("--full-metrics", full_metrics,
                "recompute trace metrics on the full unlabeled set");

  auto* sweep = app.add_subcommand("sweep", "run a grid of configurations");
  sweep->add_option("--config", config_path, "base config file path")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--seeds", seeds_csv, "comma-separated seeds");
  sweep->add_option("--axis", axis_specs, "axis key=v1,v2,... (repeatable)");
  sweep->add_option("--jobs", jobs, "parallel cells");

  auto* boundary = app.add_subcommand("boundary", "render a decision boundary");
  boundary->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  boundary->add_option("--dataset", dataset_csv, "dataset csv")->required();
  boundary->add_option("--resolution", resolution, "grid resolution (>= 16)");
  boundary->add_option("--out", out_dir, "output directory");

  auto* hist = app.add_subcommand("hist", "bin an outcomes dump");
  hist->add_option("--outcomes", outcomes_path, "outcomes csv")->required();
  hist->add_option("--bins", bins, "number of bins");
  hist->add_option("--out", hist_out, "output csv path");
  hist->add_option("--manifest", manifest_path,
                   "run manifest for the exact weighting curve");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, overrides, full_metrics);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir, seeds_csv, axis_specs, jobs);
    if (boundary->parsed()) return cmd_boundary(checkpoint, dataset_csv, resolution, out_dir);
    if (hist->parsed()) return cmd_hist(outcomes_path, bins, hist_out, manifest_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NanLossError& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
