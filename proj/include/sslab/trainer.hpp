#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslab/alignment.hpp"
#include "sslab/data.hpp"
#include "sslab/metrics.hpp"
#include "sslab/nn.hpp"
#include "sslab/types.hpp"
#include "sslab/weighting.hpp"

namespace sslab {

enum class UaTargetMode { kUniform, kTrue, kEstimated, kOff };

/// Weak augmentation adds small isotropic noise; strong augmentation adds
/// larger noise followed by a uniform scale jitter.
struct AugmentConfig {
  double weak_noise = 0.05;
  double strong_noise = 0.2;
  double strong_scale_min = 0.85;
  double strong_scale_max = 1.15;
};

struct TrainConfig {
  WeightingScheme scheme = TruncatedGaussian{};
  UaTargetMode ua_target = UaTargetMode::kUniform;
  bool use_da = false;  // route aligned predictions into the loss target instead
  int labeled_batch = 4;
  int unlabeled_batch = 64;
  double momentum = 0.999;  // prediction EMA momentum (stats and marginal)
  double model_ema_momentum = 0.999;
  long total_steps = 5000;
  double lr = 0.03;
  double sgd_momentum = 0.9;
  double weight_decay = 5e-4;
  long eval_interval = 100;
  AugmentConfig augment;
  bool per_class_stats = false;
  std::uint64_t seed = 1;
  std::vector<int> hidden_dims = {32, 32};

  std::string dataset = "two_moons";  // two_moons | imbalanced_blobs
  int n_per_moon = 500;
  double data_noise = 0.1;
  int n_labels = 4;
  std::string label_mode = "balanced";  // balanced | random
  int blob_classes = 3;
  int blob_head = 300;
  double blob_gamma = 10.0;

  bool full_metrics = false;  // recompute trace metrics on the full unlabeled set

  void validate() const;  // throws std::invalid_argument
};

Eigen::RowVectorXd augment_weak(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                const AugmentConfig& cfg, Rng& rng);
Eigen::RowVectorXd augment_strong(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                  const AugmentConfig& cfg, Rng& rng);

/// Pseudo-label of a prediction: argmax index, lowest index on ties.
int pseudo_label(const Eigen::Ref<const VectorXd>& p);

/// Thrown when a training step produces a non-finite loss.
struct NanLossError : std::runtime_error {
  explicit NanLossError(const std::string& what) : std::runtime_error(what) {}
};

/// All mutable state owned by one training run.
struct TrainerState {
  MlpModel model;
  MlpModel ema_model;
  OptimizerState opt;
  GaussianStats stats;
  std::vector<GaussianStats> class_stats;  // used when per_class_stats is set
  MarginalEstimate marginal;
  MarginalEstimate labeled_marginal;  // EMA of one-hot labeled frequencies
  ClasswiseThreshold classwise;       // live counts for the class-wise scheme
  bool has_classwise = false;
  VectorXd true_marginal;  // ground-truth class distribution (kTrue target)
  long step = 0;
  int num_classes = 2;
  Rng rng;
};

TrainerState init_trainer(const TrainConfig& cfg, int input_dim, int num_classes,
                          const VectorXd& true_marginal);

/// Read-only weight evaluation for a batch of weak predictions using the
/// state as it currently stands (post-update within a step).
struct WeighResult {
  VectorXd weights;
  VectorXi pseudo_labels;     // from the raw predictions, never the aligned ones
  VectorXd confidences;       // raw max(p)
  VectorXd used_confidences;  // max(UA(p)) when alignment feeds the weights
  MatrixXd loss_targets;      // one-hot pseudo-labels, or DA soft targets
};

WeighResult evaluate_weights(const Eigen::Ref<const MatrixXd>& weak_probs,
                             const TrainerState& state, const TrainConfig& cfg);

/// The per-step statistics-then-weights routine: updates GaussianStats and
/// the marginal estimate from this batch first, computes weights from the
/// freshly updated state, then accumulates class-wise counts.
WeighResult weigh_batch(const Eigen::Ref<const MatrixXd>& weak_probs,
                        TrainerState& state, const TrainConfig& cfg);

struct StepResult {
  double sup_loss = 0.0;
  double unsup_loss = 0.0;
  std::vector<BatchOutcome> outcomes;
};

/// One full training step: supervised loss on the weakly-augmented labeled
/// batch, pseudo-labels and statistics from weak unlabeled predictions,
/// weighted consistency loss on the strong view, one optimizer step, then
/// the model EMA update. `true_labels` may be empty; it feeds outcomes only.
StepResult train_step(const Eigen::Ref<const MatrixXd>& labeled_x,
                      const Eigen::Ref<const VectorXi>& labeled_y,
                      const Eigen::Ref<const MatrixXd>& unlabeled_x,
                      const std::vector<int>& true_labels, TrainerState& state,
                      const TrainConfig& cfg);

struct RunResult {
  std::vector<MetricsRecord> trace;
  MlpModel model;
  MlpModel ema_model;
  GaussianStats final_stats;
  MarginalEstimate final_marginal;
  std::vector<BatchOutcome> final_outcomes;  // full unlabeled set, clean forward
  double final_eval_error = 0.0;
};

/// Full-set outcomes under the current state: clean forward through the
/// training model, weights as the scheme would assign right now.
std::vector<BatchOutcome> full_set_outcomes(const TrainerState& state,
                                            const TrainConfig& cfg,
                                            const PointDataset& dataset);

double evaluate_error(const MlpModel& model, const PointDataset& dataset);

/// Runs `total_steps` iterations, sampling labeled/unlabeled batches with
/// replacement, evaluating the EMA model on `eval_ds` at step 1, every
/// eval_interval steps, and at the final step.
RunResult run_training(const TrainConfig& cfg, const PointDataset& train_ds,
                       const PointDataset& eval_ds);

/// Dataset construction from the config; `seed` overrides the config seed so
/// the held-out evaluation set can use a shifted one.
PointDataset build_dataset(const TrainConfig& cfg, std::uint64_t seed,
                           bool with_labels);

/// Train + eval datasets and the run, in one call.
RunResult run_from_config(const TrainConfig& cfg);

/// Seed shift applied to the held-out evaluation dataset.
inline constexpr std::uint64_t kEvalSeedOffset = 1000003;

}  // namespace sslab
