#pragma once

#include <variant>

#include "sslab/types.hpp"

namespace sslab {

/// Floor applied to estimated marginal entries before division, so a class
/// whose estimated mass collapsed early in training cannot zero the ratio.
inline constexpr double kMarginalFloor = 1e-8;

/// EMA of the batch-mean prediction marginal over unlabeled data.
/// Starts uniform.
struct MarginalEstimate {
  VectorXd marginal;
  double momentum = 0.999;

  static MarginalEstimate initial(int num_classes, double momentum);
};

/// new marginal = m * old + (1 - m) * column mean of `batch_probs` (rows are
/// ProbVectors). The result stays on the simplex up to rounding.
MarginalEstimate update_marginal(const Eigen::Ref<const MatrixXd>& batch_probs,
                                 const MarginalEstimate& est);

// Target distribution the alignment rescales towards.
struct UniformTarget {};
struct TrueMarginalTarget {
  VectorXd dist;
};
// EMA of one-hot label frequencies seen in labeled batches; the concrete
// estimate is maintained by the trainer and resolved there.
struct EstimatedLabeledMarginalTarget {};

using AlignmentTarget =
    std::variant<UniformTarget, TrueMarginalTarget, EstimatedLabeledMarginalTarget>;

/// Resolves a target into a concrete distribution. `labeled_marginal` backs
/// the estimated variant and may be null for the other two.
VectorXd resolve_alignment_target(const AlignmentTarget& target, int num_classes,
                                  const MarginalEstimate* labeled_marginal);

/// p .* target ./ max(est.marginal, floor), before normalization. Exposed
/// because the batch mean of this raw product is exactly the target when the
/// estimate matches the batch mean.
VectorXd aligned_unnormalized(const Eigen::Ref<const VectorXd>& p,
                              const MarginalEstimate& est,
                              const Eigen::Ref<const VectorXd>& target);

/// Normalize(p .* target / est.marginal). The aligned vector feeds only the
/// weight computation; pseudo-labels always come from the raw prediction.
VectorXd uniform_align(const Eigen::Ref<const VectorXd>& p, const MarginalEstimate& est,
                       const Eigen::Ref<const VectorXd>& target);

/// Same arithmetic as uniform_align; the caller routes the result into the
/// loss target (the Distribution Alignment baseline) instead of the weights.
VectorXd distribution_align(const Eigen::Ref<const VectorXd>& p,
                            const MarginalEstimate& est,
                            const Eigen::Ref<const VectorXd>& target);

}  // namespace sslab
