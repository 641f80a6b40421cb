#pragma once

#include <string>
#include <vector>

#include "sslab/config.hpp"
#include "sslab/metrics.hpp"

namespace sslab {

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& records, int num_classes);

/// Outcome dump with header confidence,pseudo_label,weight,true_label;
/// a missing true label serializes as -1.
void write_outcomes_csv(const std::string& path,
                        const std::vector<BatchOutcome>& outcomes);
std::vector<BatchOutcome> read_outcomes_csv(const std::string& path);

struct RunManifest {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string created;  // ISO-8601, informational only
  std::string config_text;
  double final_mu_hat = 0.0;
  double final_var_hat = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

/// Histogram CSV: bin_lo,bin_hi,count_all,count_wrong,weight_curve. The
/// curve column holds the scheme's weight at the bin center when a scheme
/// and stats are supplied (at schedule step `step`; the class-wise scheme
/// falls back to its base threshold), otherwise the empirical mean weight
/// in the bin.
void write_histogram_csv(const std::string& path,
                         const std::vector<BatchOutcome>& outcomes, int bins,
                         const WeightingScheme* scheme, const GaussianStats* stats,
                         long step = 0);

}  // namespace sslab
