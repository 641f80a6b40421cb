#include "sslab/alignment.hpp"

#include <stdexcept>

namespace sslab {

MarginalEstimate MarginalEstimate::initial(int num_classes, double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1]");
  }
  MarginalEstimate est;
  est.marginal = uniform_prob(num_classes);
  est.momentum = momentum;
  return est;
}

MarginalEstimate update_marginal(const Eigen::Ref<const MatrixXd>& batch_probs,
                                 const MarginalEstimate& est) {
  if (batch_probs.rows() == 0) throw std::invalid_argument("empty batch");
  if (batch_probs.cols() != est.marginal.size()) {
    throw std::invalid_argument("batch class count does not match estimate");
  }
  for (Eigen::Index i = 0; i < batch_probs.rows(); ++i) {
    if (!is_prob_vector(batch_probs.row(i).transpose())) {
      throw std::invalid_argument("batch rows must be valid ProbVectors");
    }
  }
  const VectorXd batch_mean = batch_probs.colwise().mean().transpose();
  const double m = est.momentum;
  MarginalEstimate next = est;
  next.marginal = m * est.marginal + (1.0 - m) * batch_mean;
  return next;
}

VectorXd resolve_alignment_target(const AlignmentTarget& target, int num_classes,
                                  const MarginalEstimate* labeled_marginal) {
  return std::visit(
      [&](const auto& t) -> VectorXd {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, UniformTarget>) {
          return uniform_prob(num_classes);
        } else if constexpr (std::is_same_v<T, TrueMarginalTarget>) {
          if (!is_prob_vector(t.dist) || t.dist.size() != num_classes) {
            throw std::invalid_argument("target distribution is not a valid ProbVector");
          }
          return t.dist;
        } else {
          if (labeled_marginal == nullptr) {
            throw std::invalid_argument(
                "estimated target requires a labeled marginal estimate");
          }
          return labeled_marginal->marginal;
        }
      },
      target);
}

VectorXd aligned_unnormalized(const Eigen::Ref<const VectorXd>& p,
                              const MarginalEstimate& est,
                              const Eigen::Ref<const VectorXd>& target) {
  if (p.size() != est.marginal.size() || p.size() != target.size()) {
    throw std::invalid_argument("dimension mismatch in alignment");
  }
  const ArrayXd floored = est.marginal.array().max(kMarginalFloor);
  return (p.array() * target.array() / floored).matrix();
}

VectorXd uniform_align(const Eigen::Ref<const VectorXd>& p, const MarginalEstimate& est,
                       const Eigen::Ref<const VectorXd>& target) {
  VectorXd raw = aligned_unnormalized(p, est, target);
  const double total = raw.sum();
  if (!(total > 0.0)) {
    throw std::domain_error("aligned vector has no mass");
  }
  return raw / total;
}

VectorXd distribution_align(const Eigen::Ref<const VectorXd>& p,
                            const MarginalEstimate& est,
                            const Eigen::Ref<const VectorXd>& target) {
  return uniform_align(p, est, target);
}

}  // namespace sslab
