#include "sslab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <thread>

#include "sslab/format.hpp"

namespace fs = std::filesystem;

namespace sslab {

RunArtifacts run_to_directory(const TrainConfig& cfg, const std::string& out_dir,
                              const std::string& timestamp) {
  fs::create_directories(out_dir);

  const PointDataset train_ds = build_dataset(cfg, cfg.seed, true);
  const PointDataset eval_ds = build_dataset(cfg, cfg.seed + kEvalSeedOffset, false);
  const RunResult result = run_training(cfg, train_ds, eval_ds);

  const fs::path dir(out_dir);
  write_metrics_csv((dir / "metrics.csv").string(), result.trace,
                    train_ds.num_classes());
  write_outcomes_csv((dir / "outcomes_final.csv").string(), result.final_outcomes);
  save_dataset_csv((dir / "dataset.csv").string(), train_ds);
  save_model((dir / "model_final.txt").string(), result.model);
  save_model((dir / "model_ema.txt").string(), result.ema_model);

  RunManifest manifest;
  manifest.run_id = run_id_string(cfg);
  manifest.seed = cfg.seed;
  manifest.created = timestamp;
  manifest.config_text = canonical_config_text(cfg);
  manifest.final_mu_hat = result.final_stats.mu_hat;
  manifest.final_var_hat = result.final_stats.var_hat;
  write_manifest((dir / "manifest").string(), manifest);

  RunArtifacts artifacts;
  artifacts.out_dir = out_dir;
  artifacts.run_id = manifest.run_id;
  artifacts.final_eval_error = result.final_eval_error;
  if (!result.final_outcomes.empty()) {
    artifacts.final_quantity = quantity(result.final_outcomes);
    artifacts.final_quality = quality(result.final_outcomes);
  }
  return artifacts;
}

namespace {

std::string sanitize(const std::string& value) {
  std::string out = value;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
  }
  return out;
}

void run_cell(SweepCell& cell,
              const std::vector<std::pair<std::string, std::string>>& base_pairs,
              const std::string& out_dir) {
  auto pairs = base_pairs;
  try {
    for (const auto& [key, value] : cell.assignments) {
      apply_override(pairs, key + "=" + value);
    }
    const TrainConfig cfg = config_from_pairs(pairs);
    const RunArtifacts artifacts =
        run_to_directory(cfg, (fs::path(out_dir) / cell.dir_name).string());
    cell.status = "ok";
    cell.final_eval_error = artifacts.final_eval_error;
    cell.final_quantity = artifacts.final_quantity;
    cell.final_quality = artifacts.final_quality;
  } catch (const ConfigError& e) {
    cell.status = "config_error";
    cell.message = e.what();
  } catch (const NanLossError& e) {
    cell.status = "nan_abort";
    cell.message = e.what();
  } catch (const std::exception& e) {
    cell.status = "error";
    cell.message = e.what();
  }
}

}  // namespace

SweepResult run_sweep(std::vector<std::pair<std::string, std::string>> base_pairs,
                      const std::vector<SweepAxis>& axes,
                      const std::vector<std::uint64_t>& seeds,
                      const std::string& out_dir, int jobs) {
  if (jobs < 1) jobs = 1;
  std::vector<SweepAxis> all_axes = axes;
  if (!seeds.empty()) {
    SweepAxis seed_axis;
    seed_axis.key = "seed";
    for (auto s : seeds) seed_axis.values.push_back(std::to_string(s));
    all_axes.push_back(seed_axis);
  }

  // cartesian product
  SweepResult result;
  std::vector<size_t> index(all_axes.size(), 0);
  while (true) {
    SweepCell cell;
    std::string name;
    for (size_t a = 0; a < all_axes.size(); ++a) {
      const auto& axis = all_axes[a];
      cell.assignments.emplace_back(axis.key, axis.values[index[a]]);
      if (!name.empty()) name += "__";
      name += axis.key + "-" + sanitize(axis.values[index[a]]);
    }
    cell.dir_name = name.empty() ? "cell_0" : name;
    result.cells.push_back(std::move(cell));

    size_t a = 0;
    for (; a < all_axes.size(); ++a) {
      if (++index[a] < all_axes[a].values.size()) break;
      index[a] = 0;
    }
    if (a == all_axes.size()) break;
  }

  fs::create_directories(out_dir);
  std::atomic<size_t> next{0};
  const auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= result.cells.size()) return;
      run_cell(result.cells[i], base_pairs, out_dir);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(result.cells.size()));
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // one row per cell
  std::ofstream summary(fs::path(out_dir) / "summary.csv");
  summary << "cell";
  for (const auto& axis : all_axes) summary << ',' << axis.key;
  summary << ",status,final_eval_error,final_quantity,final_quality\n";
  for (const auto& cell : result.cells) {
    summary << cell.dir_name;
    for (const auto& [_, value] : cell.assignments) summary << ',' << value;
    summary << ',' << cell.status << ',' << format_double(cell.final_eval_error) << ','
            << format_double(cell.final_quantity) << ','
            << (cell.final_quality ? format_double(*cell.final_quality) : "nan") << '\n';
    if (cell.status != "ok") ++result.failures;
  }
  summary.close();

  // aggregate across seeds: median and spread of final eval error
  std::ofstream agg(fs::path(out_dir) / "summary_agg.csv");
  agg << "group,median_eval_error,min_eval_error,max_eval_error,n_seeds\n";
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  for (const auto& cell : result.cells) {
    if (cell.status != "ok") continue;
    std::string group;
    for (const auto& [key, value] : cell.assignments) {
      if (key == "seed") continue;
      if (!group.empty()) group += "__";
      group += key + "-" + sanitize(value);
    }
    if (group.empty()) group = "all";
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == group; });
    if (it == groups.end()) {
      groups.push_back({group, {cell.final_eval_error}});
    } else {
      it->second.push_back(cell.final_eval_error);
    }
  }
  for (auto& [group, errors] : groups) {
    std::sort(errors.begin(), errors.end());
    const size_t n = errors.size();
    const double median =
        n % 2 == 1 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
    agg << group << ',' << format_double(median) << ',' << format_double(errors.front())
        << ',' << format_double(errors.back()) << ',' << n << '\n';
  }
  return result;
}

}  // namespace sslab
