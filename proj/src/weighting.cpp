#include "sslab/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sslab {

namespace {

void check_confidence(double confidence) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw std::invalid_argument("confidence must lie in [0, 1]");
  }
}

void check_lambda_max(double lambda_max) {
  if (!(lambda_max > 0.0)) {
    throw std::invalid_argument("lambda_max must be positive");
  }
}

void check_n_sigma(int n_sigma) {
  if (n_sigma < 1 || n_sigma > 3) {
    throw std::invalid_argument("n_sigma must be 1, 2, or 3");
  }
}

}  // namespace

GaussianStats GaussianStats::initial(int num_classes, double momentum) {
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  // momentum 1 is admitted so tests can freeze the EMA
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1]");
  }
  GaussianStats stats;
  stats.mu_hat = 1.0 / static_cast<double>(num_classes);
  stats.var_hat = 1.0;
  stats.momentum = momentum;
  stats.step = 0;
  return stats;
}

GaussianStats update_gaussian_stats(const Eigen::Ref<const VectorXd>& confidences,
                                    const GaussianStats& stats) {
  const Eigen::Index batch = confidences.size();
  if (batch < 2) {
    throw std::invalid_argument("batch must contain at least 2 confidences");
  }
  for (Eigen::Index i = 0; i < batch; ++i) check_confidence(confidences[i]);

  const double batch_mean = confidences.mean();
  const double batch_var = (confidences.array() - batch_mean).square().mean();
  const double unbiased =
      batch_var * static_cast<double>(batch) / static_cast<double>(batch - 1);

  const double m = stats.momentum;
  GaussianStats next = stats;
  next.mu_hat = m * stats.mu_hat + (1.0 - m) * batch_mean;
  next.var_hat = m * stats.var_hat + (1.0 - m) * unbiased;
  next.step = stats.step + 1;
  return next;
}

double truncated_gaussian_weight(double confidence, const GaussianStats& stats,
                                 double lambda_max, int n_sigma) {
  check_confidence(confidence);
  check_lambda_max(lambda_max);
  check_n_sigma(n_sigma);
  if (confidence >= stats.mu_hat) return lambda_max;
  const double sigma_eff_sq =
      std::max(stats.var_hat / (static_cast<double>(n_sigma) * n_sigma), kVarianceFloor);
  const double dev = confidence - stats.mu_hat;
  return lambda_max * std::exp(-(dev * dev) / (2.0 * sigma_eff_sq));
}

double step_weight(double confidence, double tau, double lambda_max) {
  check_confidence(confidence);
  check_lambda_max(lambda_max);
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("tau must lie in [0, 1]");
  }
  return confidence >= tau ? lambda_max : 0.0;
}

double rampup_weight(long step, long warmup_steps, double lambda_max) {
  check_lambda_max(lambda_max);
  if (warmup_steps <= 0) throw std::invalid_argument("warmup_steps must be positive");
  if (step < 0) throw std::invalid_argument("step must be non-negative");
  const double ramp = static_cast<double>(step) / static_cast<double>(warmup_steps);
  return lambda_max * std::min(ramp, 1.0);
}

double fixed_weight(double lambda_max) {
  check_lambda_max(lambda_max);
  return lambda_max;
}

double linear_weight(double confidence, double lambda_max) {
  check_confidence(confidence);
  check_lambda_max(lambda_max);
  return lambda_max * confidence;
}

double quadratic_weight(double confidence, double lambda_max) {
  check_confidence(confidence);
  check_lambda_max(lambda_max);
  const double d = confidence - 1.0;
  return lambda_max * (1.0 - d * d);
}

double laplacian_weight(double confidence, double mu, double b, double lambda_max) {
  check_confidence(confidence);
  check_lambda_max(lambda_max);
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("mu must lie in (0, 1]");
  if (!(b > 0.0)) throw std::invalid_argument("b must be positive");
  return lambda_max * std::exp(-std::abs(confidence - mu) / b);
}

double truncated_laplacian_weight(double confidence, const GaussianStats& stats,
                                  double lambda_max, int n_sigma) {
  check_confidence(confidence);
  check_lambda_max(lambda_max);
  check_n_sigma(n_sigma);
  if (confidence >= stats.mu_hat) return lambda_max;
  const double b =
      std::max(std::sqrt(stats.var_hat) / n_sigma, std::sqrt(kVarianceFloor));
  return lambda_max * std::exp(-std::abs(confidence - stats.mu_hat) / b);
}

void validate_scheme(const WeightingScheme& scheme) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        check_lambda_max(s.lambda_max);
        if constexpr (std::is_same_v<T, RampUp>) {
          if (s.warmup_steps <= 0) {
            throw std::invalid_argument("warmup_steps must be positive");
          }
        } else if constexpr (std::is_same_v<T, Threshold>) {
          if (!(s.tau >= 0.0 && s.tau <= 1.0)) {
            throw std::invalid_argument("tau must lie in [0, 1]");
          }
        } else if constexpr (std::is_same_v<T, ClasswiseThreshold>) {
          if (!(s.tau_base >= 0.0 && s.tau_base <= 1.0)) {
            throw std::invalid_argument("tau_base must lie in [0, 1]");
          }
          for (long c : s.per_class_counts) {
            if (c < 0) throw std::invalid_argument("per-class counts must be >= 0");
          }
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          if (!(s.mu > 0.0 && s.mu <= 1.0)) {
            throw std::invalid_argument("mu must lie in (0, 1]");
          }
          if (!(s.b > 0.0)) throw std::invalid_argument("b must be positive");
        } else if constexpr (std::is_same_v<T, TruncatedLaplacian> ||
                             std::is_same_v<T, TruncatedGaussian>) {
          check_n_sigma(s.n_sigma);
        }
      },
      scheme);
}

double scheme_lambda_max(const WeightingScheme& scheme) {
  return std::visit([](const auto& s) { return s.lambda_max; }, scheme);
}

bool scheme_uses_stats(const WeightingScheme& scheme) {
  return std::holds_alternative<TruncatedGaussian>(scheme) ||
         std::holds_alternative<TruncatedLaplacian>(scheme);
}

double classwise_threshold_weight(double confidence, int pseudo_class,
                                  const ClasswiseThreshold& scheme) {
  check_confidence(confidence);
  check_lambda_max(scheme.lambda_max);
  if (pseudo_class < 0 ||
      pseudo_class >= static_cast<int>(scheme.per_class_counts.size())) {
    throw std::invalid_argument("pseudo_class out of range");
  }
  const long max_count =
      *std::max_element(scheme.per_class_counts.begin(), scheme.per_class_counts.end());
  double tau_c = scheme.tau_base;
  if (max_count > 0) {
    tau_c = scheme.tau_base *
            static_cast<double>(scheme.per_class_counts[pseudo_class]) /
            static_cast<double>(max_count);
  }
  return confidence >= tau_c ? scheme.lambda_max : 0.0;
}

ClasswiseThreshold update_class_counts(const Eigen::Ref<const VectorXd>& confidences,
                                       const Eigen::Ref<const VectorXi>& pseudo_labels,
                                       const ClasswiseThreshold& scheme) {
  if (confidences.size() != pseudo_labels.size()) {
    throw std::invalid_argument("confidences and pseudo_labels must have equal length");
  }
  ClasswiseThreshold next = scheme;
  for (Eigen::Index i = 0; i < confidences.size(); ++i) {
    check_confidence(confidences[i]);
    const int label = pseudo_labels[i];
    if (label < 0 || label >= static_cast<int>(next.per_class_counts.size())) {
      throw std::invalid_argument("pseudo label out of range");
    }
    if (confidences[i] >= next.tau_base) ++next.per_class_counts[label];
  }
  return next;
}

double scheme_weight(const WeightingScheme& scheme, double confidence, int pseudo_class,
                     long step, const GaussianStats& stats) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Fixed>) {
          return fixed_weight(s.lambda_max);
        } else if constexpr (std::is_same_v<T, RampUp>) {
          return rampup_weight(step, s.warmup_steps, s.lambda_max);
        } else if constexpr (std::is_same_v<T, Threshold>) {
          return step_weight(confidence, s.tau, s.lambda_max);
        } else if constexpr (std::is_same_v<T, ClasswiseThreshold>) {
          return classwise_threshold_weight(confidence, pseudo_class, s);
        } else if constexpr (std::is_same_v<T, Linear>) {
          return linear_weight(confidence, s.lambda_max);
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          return quadratic_weight(confidence, s.lambda_max);
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          return laplacian_weight(confidence, s.mu, s.b, s.lambda_max);
        } else if constexpr (std::is_same_v<T, TruncatedLaplacian>) {
          return truncated_laplacian_weight(confidence, stats, s.lambda_max, s.n_sigma);
        } else {
          return truncated_gaussian_weight(confidence, stats, s.lambda_max, s.n_sigma);
        }
      },
      scheme);
}

}  // namespace sslab
