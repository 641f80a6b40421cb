#pragma once

#include <string>
#include <vector>

#include "sslab/types.hpp"

namespace sslab {

/// Probabilities are clamped at this floor before log, so one-hot targets
/// with a saturated softmax keep the loss finite.
inline constexpr double kProbFloor = 1e-12;

/// Fully-connected ReLU network with a linear output layer. Weights are
/// (out x in); rows of an input matrix are samples.
struct MlpModel {
  std::vector<int> layer_dims;
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  size_t num_layers() const { return weights.size(); }

  static MlpModel zeros(const std::vector<int>& layer_dims);
  /// He-style uniform fan-in initialization, biases zero.
  static MlpModel he_uniform(const std::vector<int>& layer_dims, Rng& rng);
};

/// Hidden activations and logits of one forward pass, kept for backprop.
struct ForwardCache {
  std::vector<MatrixXd> inputs;  // inputs[l] is what layer l consumed
  MatrixXd logits;
};

MatrixXd forward_logits(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x);
ForwardCache forward_cached(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x);

/// Row-wise softmax with max subtraction.
MatrixXd softmax_rows(const Eigen::Ref<const MatrixXd>& logits);
VectorXd softmax(const Eigen::Ref<const VectorXd>& logits);

/// Class predictions (argmax of logits, lowest index on ties).
VectorXi predict_classes(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x);

struct CrossEntropyResult {
  double loss = 0.0;
  MatrixXd dlogits;  // gradient of the loss w.r.t. the logits
};

/// loss = (1/B) sum_i w_i * H(target_i, prob_i) with H the cross-entropy;
/// dlogits_i = (w_i / B) * (prob_i - target_i). Targets may be one-hot or
/// soft distributions.
CrossEntropyResult weighted_cross_entropy(const Eigen::Ref<const MatrixXd>& probs,
                                          const Eigen::Ref<const MatrixXd>& targets,
                                          const Eigen::Ref<const VectorXd>& weights);

struct Gradients {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;

  static Gradients zeros_like(const MlpModel& model);
  void accumulate(const Gradients& other);
};

/// Backpropagates d(loss)/d(logits) through the cached forward pass.
Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const Eigen::Ref<const MatrixXd>& dlogits);

struct OptimizerState {
  double learning_rate = 0.03;
  double momentum = 0.9;
  double weight_decay = 0.0;
  long total_steps = 1;
  long step = 0;
  std::vector<MatrixXd> w_velocity;
  std::vector<VectorXd> b_velocity;

  static OptimizerState create(const MlpModel& model, double learning_rate,
                               double momentum, double weight_decay, long total_steps);
};

/// eta_0 * cos(7 pi k / (16 K)); throws for k > K.
double cosine_lr(long step, long total_steps, double base_lr);

/// One SGD step with heavy-ball momentum (v = mu v + g; p -= lr v) and
/// decoupled weight decay (p -= lr wd p). Advances the schedule step.
void sgd_step(MlpModel& model, const Gradients& grads, OptimizerState& opt);

/// ema = mu * ema + (1 - mu) * param, elementwise.
void ema_update(MlpModel& ema_model, const MlpModel& model, double ema_momentum);

/// Text checkpoint: "mlp" header with layer dims, then row-major W and b per
/// layer, every value printed in round-trip precision.
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

}  // namespace sslab
