#pragma once

#include <variant>
#include <vector>

#include "sslab/types.hpp"

namespace sslab {

/// Floor applied to the effective variance of the truncated Gaussian so the
/// sub-mean branch stays well-defined when the running variance collapses.
inline constexpr double kVarianceFloor = 1e-12;

/// Running EMA estimate of the confidence distribution: mean, unbiased
/// variance, and the shared momentum. Starts at mu_hat = 1/C, var_hat = 1.
struct GaussianStats {
  double mu_hat = 0.0;
  double var_hat = 1.0;
  double momentum = 0.999;
  long step = 0;

  static GaussianStats initial(int num_classes, double momentum);
};

/// EMA update from one batch of confidences (length >= 2, entries in [0,1]).
/// The batch variance is the population variance; the EMA applies the
/// B/(B-1) unbiased correction before mixing.
GaussianStats update_gaussian_stats(const Eigen::Ref<const VectorXd>& confidences,
                                    const GaussianStats& stats);

/// Soft confidence weight: lambda_max at or above the running mean, Gaussian
/// decay exp(-(c - mu)^2 / (2 sigma_eff^2)) below it, with
/// sigma_eff^2 = var_hat / n_sigma^2 (floored at kVarianceFloor).
double truncated_gaussian_weight(double confidence, const GaussianStats& stats,
                                 double lambda_max, int n_sigma);

/// Hard confidence threshold: lambda_max iff confidence >= tau, else 0.
double step_weight(double confidence, double tau, double lambda_max);

/// Linear warm-up over `warmup_steps`, clamped at lambda_max.
double rampup_weight(long step, long warmup_steps, double lambda_max);

double fixed_weight(double lambda_max);

double linear_weight(double confidence, double lambda_max);
double quadratic_weight(double confidence, double lambda_max);
double laplacian_weight(double confidence, double mu, double b, double lambda_max);

/// Laplacian analogue of the truncated Gaussian: lambda_max at or above the
/// running mean, exp(-|c - mu| / b) below it with b = sqrt(var_hat) / n_sigma.
double truncated_laplacian_weight(double confidence, const GaussianStats& stats,
                                  double lambda_max, int n_sigma);

// ---------------------------------------------------------------------------
// Scheme configuration

struct Fixed {
  double lambda_max = 1.0;
};
struct RampUp {
  double lambda_max = 1.0;
  long warmup_steps = 1;
};
struct Threshold {
  double lambda_max = 1.0;
  double tau = 0.95;
};
struct ClasswiseThreshold {
  double lambda_max = 1.0;
  double tau_base = 0.95;
  std::vector<long> per_class_counts;  // confident predictions seen per class
};
struct Linear {
  double lambda_max = 1.0;
};
struct Quadratic {
  double lambda_max = 1.0;
};
struct Laplacian {
  double lambda_max = 1.0;
  double mu = 1.0;
  double b = 0.3;
};
struct TruncatedLaplacian {
  double lambda_max = 1.0;
  int n_sigma = 2;
};
struct TruncatedGaussian {
  double lambda_max = 1.0;
  int n_sigma = 2;
};

using WeightingScheme =
    std::variant<Fixed, RampUp, Threshold, ClasswiseThreshold, Linear, Quadratic,
                 Laplacian, TruncatedLaplacian, TruncatedGaussian>;

/// Throws std::invalid_argument on an out-of-range parameter.
/// tau accepts the closed interval [0,1]: tau = 0 makes the threshold scheme
/// coincide with the fixed scheme.
void validate_scheme(const WeightingScheme& scheme);

double scheme_lambda_max(const WeightingScheme& scheme);

/// True for schemes whose weight depends on the running GaussianStats.
bool scheme_uses_stats(const WeightingScheme& scheme);

/// Per-class threshold tau_c = tau_base * count_c / max_c' count_c'
/// (tau_base when every count is zero); lambda_max iff confidence >= tau_c.
double classwise_threshold_weight(double confidence, int pseudo_class,
                                  const ClasswiseThreshold& scheme);

/// Accumulates confident predictions (confidence >= tau_base) into the
/// per-class counts of a copy of `scheme`.
ClasswiseThreshold update_class_counts(const Eigen::Ref<const VectorXd>& confidences,
                                       const Eigen::Ref<const VectorXi>& pseudo_labels,
                                       const ClasswiseThreshold& scheme);

/// Evaluates any scheme for a single sample. `step` feeds the ramp-up
/// schedule, `stats` the truncated variants, `pseudo_class` the class-wise
/// threshold.
double scheme_weight(const WeightingScheme& scheme, double confidence, int pseudo_class,
                     long step, const GaussianStats& stats);

}  // namespace sslab
