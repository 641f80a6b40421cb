#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sslab/types.hpp"
#include "sslab/weighting.hpp"

namespace sslab {

/// One unlabeled sample's pseudo-labeling outcome at some training step.
/// `confidence` is the raw max(p) of the weak prediction; `true_label` is the
/// hidden ground truth, threaded in for analysis only.
struct BatchOutcome {
  double confidence = 0.0;
  int pseudo_label = 0;
  double weight = 0.0;
  std::optional<int> true_label;
};

/// Mean sample weight over the batch — the pseudo-label utilization ratio.
double quantity(const std::vector<BatchOutcome>& outcomes);

/// Weight-normalized fraction of correct pseudo-labels. Requires every
/// outcome to carry a true label. Zero total weight yields nullopt (the
/// quantity is undefined, not zero).
std::optional<double> quality(const std::vector<BatchOutcome>& outcomes);

/// Weights normalized to sum to one. Throws on zero total weight.
VectorXd pmf(const std::vector<BatchOutcome>& outcomes);

/// Quality restricted to outcomes pseudo-labeled as each class; classes with
/// no weighted mass report nullopt.
std::vector<std::optional<double>> per_class_quality(
    const std::vector<BatchOutcome>& outcomes, int num_classes);

/// Confidence histogram over [0,1] with right-closed equal-width bins,
/// counting all predictions and the wrong ones separately.
struct ConfidenceHistogram {
  int bins = 0;
  std::vector<long> all;
  std::vector<long> wrong;
};

ConfidenceHistogram confidence_histogram(const std::vector<BatchOutcome>& outcomes,
                                         int bins);

/// Bin index for a confidence under the right-closed convention (bin i covers
/// (i/B, (i+1)/B], first bin additionally contains 0).
int histogram_bin(double confidence, int bins);

/// Checks the literally-testable parts of the truncated-Gaussian quantity
/// bound: (a) every above-mean outcome carries exactly lambda_max, (b) the
/// quantity is at least lambda_max times the above-mean fraction, (c) when
/// mu_hat matches the batch mean and the confidences are symmetric about it,
/// the quantity is at least lambda_max / 2.
struct BoundCheckReport {
  bool above_mean_all_lambda_max = false;
  bool quantity_ge_above_mean_fraction = false;
  bool symmetric_case_applicable = false;
  bool symmetric_case_holds = true;  // vacuously true when not applicable
  bool ok = false;

  double quantity_value = 0.0;
  double above_mean_fraction = 0.0;
  // Closed-form lower bound lambda_max/2 * (1 + exp(-(1/C - mu)^2 / (2 var)))
  // reported for diagnostics.
  double closed_form_lower_bound = 0.0;
};

BoundCheckReport quantity_lower_bound_check(const std::vector<BatchOutcome>& outcomes,
                                            const GaussianStats& stats, int num_classes,
                                            double lambda_max);

/// Per-evaluation trace row. `quality` and the per-class entries may be
/// undefined when no weight was assigned.
struct MetricsRecord {
  long step = 0;
  double sup_loss = 0.0;
  double unsup_loss = 0.0;
  double quantity = 0.0;
  std::optional<double> quality;
  std::vector<std::optional<double>> per_class_quality;
  double eval_error = 0.0;
  double mu_hat = 0.0;
  double var_hat = 0.0;
  VectorXd marginal;
};

/// Fixed CSV schema: step,sup_loss,unsup_loss,quantity,quality,eval_error,
/// mu_hat,var_hat,qc_0..qc_{C-1}. Undefined qualities serialize as nan.
std::string metrics_csv_header(int num_classes);
std::string metrics_csv_row(const MetricsRecord& record);

}  // namespace sslab
