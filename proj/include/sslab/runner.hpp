#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sslab/config.hpp"
#include "sslab/io.hpp"
#include "sslab/trainer.hpp"

namespace sslab {

/// Artifacts of one completed run directory.
struct RunArtifacts {
  std::string out_dir;
  std::string run_id;
  double final_eval_error = 0.0;
  double final_quantity = 0.0;
  std::optional<double> final_quality;
};

/// Executes a full training run and writes metrics.csv, outcomes_final.csv,
/// dataset.csv, model_final.txt, model_ema.txt, and manifest into `out_dir`
/// (created if missing). `timestamp` lands in the manifest only.
RunArtifacts run_to_directory(const TrainConfig& cfg, const std::string& out_dir,
                              const std::string& timestamp = "");

/// One sweep axis: a config key and its values.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct SweepCell {
  std::vector<std::pair<std::string, std::string>> assignments;
  std::string dir_name;
  std::string status;  // ok | config_error | nan_abort | error
  double final_eval_error = 0.0;
  double final_quantity = 0.0;
  std::optional<double> final_quality;
  std::string message;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  int failures = 0;
};

/// Runs the cartesian product of the axes (and seeds) on top of the base
/// config pairs, one run directory per cell. Failed cells are recorded and
/// the sweep continues. Writes summary.csv (one row per cell) and
/// summary_agg.csv (final eval error median/min/max across seeds).
SweepResult run_sweep(std::vector<std::pair<std::string, std::string>> base_pairs,
                      const std::vector<SweepAxis>& axes,
                      const std::vector<std::uint64_t>& seeds,
                      const std::string& out_dir, int jobs = 1);

}  // namespace sslab
