#include "sslab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sslab/format.hpp"

namespace sslab {

namespace {

void check_outcome(const BatchOutcome& o) {
  if (!(o.confidence >= 0.0 && o.confidence <= 1.0)) {
    throw std::invalid_argument("outcome confidence must lie in [0, 1]");
  }
  if (!(o.weight >= 0.0)) throw std::invalid_argument("outcome weight must be >= 0");
}

}  // namespace

double quantity(const std::vector<BatchOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("quantity of an empty batch");
  double sum = 0.0;
  for (const auto& o : outcomes) {
    check_outcome(o);
    sum += o.weight;
  }
  return sum / static_cast<double>(outcomes.size());
}

std::optional<double> quality(const std::vector<BatchOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("quality of an empty batch");
  double total = 0.0;
  double correct = 0.0;
  for (const auto& o : outcomes) {
    check_outcome(o);
    if (!o.true_label.has_value()) {
      throw std::invalid_argument("quality requires true labels on every outcome");
    }
    total += o.weight;
    if (o.pseudo_label == *o.true_label) correct += o.weight;
  }
  if (total == 0.0) return std::nullopt;
  return correct / total;
}

VectorXd pmf(const std::vector<BatchOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("pmf of an empty batch");
  VectorXd weights(outcomes.size());
  for (size_t i = 0; i < outcomes.size(); ++i) {
    check_outcome(outcomes[i]);
    weights[static_cast<Eigen::Index>(i)] = outcomes[i].weight;
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw std::domain_error("pmf undefined for zero total weight");
  return weights / total;
}

std::vector<std::optional<double>> per_class_quality(
    const std::vector<BatchOutcome>& outcomes, int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  std::vector<double> total(num_classes, 0.0);
  std::vector<double> correct(num_classes, 0.0);
  for (const auto& o : outcomes) {
    check_outcome(o);
    if (!o.true_label.has_value()) {
      throw std::invalid_argument("per_class_quality requires true labels");
    }
    if (o.pseudo_label < 0 || o.pseudo_label >= num_classes) {
      throw std::invalid_argument("pseudo label out of range");
    }
    total[o.pseudo_label] += o.weight;
    if (o.pseudo_label == *o.true_label) correct[o.pseudo_label] += o.weight;
  }
  std::vector<std::optional<double>> result(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    if (total[c] > 0.0) result[c] = correct[c] / total[c];
  }
  return result;
}

int histogram_bin(double confidence, int bins) {
  if (bins < 1) throw std::invalid_argument("bins must be positive");
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw std::invalid_argument("confidence must lie in [0, 1]");
  }
  // right-closed: bin i covers (i/B, (i+1)/B]; 0 falls into bin 0
  const int idx = static_cast<int>(std::ceil(confidence * bins)) - 1;
  return std::min(std::max(idx, 0), bins - 1);
}

ConfidenceHistogram confidence_histogram(const std::vector<BatchOutcome>& outcomes,
                                         int bins) {
  if (bins < 1) throw std::invalid_argument("bins must be positive");
  ConfidenceHistogram hist;
  hist.bins = bins;
  hist.all.assign(bins, 0);
  hist.wrong.assign(bins, 0);
  for (const auto& o : outcomes) {
    check_outcome(o);
    const int b = histogram_bin(o.confidence, bins);
    ++hist.all[b];
    if (o.true_label.has_value() && o.pseudo_label != *o.true_label) ++hist.wrong[b];
  }
  return hist;
}

BoundCheckReport quantity_lower_bound_check(const std::vector<BatchOutcome>& outcomes,
                                            const GaussianStats& stats, int num_classes,
                                            double lambda_max) {
  if (outcomes.empty()) throw std::invalid_argument("bound check of an empty batch");
  if (!(lambda_max > 0.0)) throw std::invalid_argument("lambda_max must be positive");

  BoundCheckReport report;
  long above = 0;
  double conf_mean = 0.0;
  bool above_all_max = true;
  for (const auto& o : outcomes) {
    check_outcome(o);
    conf_mean += o.confidence;
    if (o.confidence >= stats.mu_hat) {
      ++above;
      if (o.weight != lambda_max) above_all_max = false;
    }
  }
  conf_mean /= static_cast<double>(outcomes.size());

  report.quantity_value = quantity(outcomes);
  report.above_mean_fraction =
      static_cast<double>(above) / static_cast<double>(outcomes.size());
  report.above_mean_all_lambda_max = above_all_max;
  report.quantity_ge_above_mean_fraction =
      report.quantity_value >= lambda_max * report.above_mean_fraction - 1e-12;

  const double gap = 1.0 / static_cast<double>(num_classes) - stats.mu_hat;
  const double var = std::max(stats.var_hat, kVarianceFloor);
  report.closed_form_lower_bound =
      lambda_max / 2.0 * (1.0 + std::exp(-(gap * gap) / (2.0 * var)));

  // Symmetric special case: mu_hat equals the batch mean and the sorted
  // confidences pair up symmetrically about it.
  const double tol = 1e-9;
  if (std::abs(conf_mean - stats.mu_hat) <= tol) {
    std::vector<double> sorted;
    sorted.reserve(outcomes.size());
    for (const auto& o : outcomes) sorted.push_back(o.confidence);
    std::sort(sorted.begin(), sorted.end());
    bool symmetric = true;
    for (size_t i = 0, j = sorted.size(); i < j--; ++i) {
      if (std::abs(sorted[i] + sorted[j] - 2.0 * conf_mean) > tol) {
        symmetric = false;
        break;
      }
    }
    if (symmetric) {
      report.symmetric_case_applicable = true;
      report.symmetric_case_holds = report.quantity_value >= lambda_max / 2.0 - 1e-12;
    }
  }

  report.ok = report.above_mean_all_lambda_max &&
              report.quantity_ge_above_mean_fraction && report.symmetric_case_holds;
  return report;
}

std::string metrics_csv_header(int num_classes) {
  std::ostringstream os;
  os << "step,sup_loss,unsup_loss,quantity,quality,eval_error,mu_hat,var_hat";
  for (int c = 0; c < num_classes; ++c) os << ",qc_" << c;
  return os.str();
}

std::string metrics_csv_row(const MetricsRecord& record) {
  std::ostringstream os;
  os << record.step << ',' << format_double(record.sup_loss) << ','
     << format_double(record.unsup_loss) << ',' << format_double(record.quantity) << ','
     << (record.quality ? format_double(*record.quality) : "nan") << ','
     << format_double(record.eval_error) << ',' << format_double(record.mu_hat) << ','
     << format_double(record.var_hat);
  for (const auto& qc : record.per_class_quality) {
    os << ',' << (qc ? format_double(*qc) : "nan");
  }
  return os.str();
}

}  // namespace sslab
