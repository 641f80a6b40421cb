#include "sslab/nn.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "sslab/format.hpp"

namespace sslab {

namespace {

void check_dims(const std::vector<int>& layer_dims) {
  if (layer_dims.size() < 2) {
    throw std::invalid_argument("model needs at least input and output dims");
  }
  for (int d : layer_dims) {
    if (d < 1) throw std::invalid_argument("layer dims must be positive");
  }
}

void check_same_shape(const MlpModel& a, const MlpModel& b) {
  if (a.layer_dims != b.layer_dims) {
    throw std::invalid_argument("model shapes do not match");
  }
}

}  // namespace

MlpModel MlpModel::zeros(const std::vector<int>& dims) {
  check_dims(dims);
  MlpModel model;
  model.layer_dims = dims;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    model.weights.push_back(MatrixXd::Zero(dims[l + 1], dims[l]));
    model.biases.push_back(VectorXd::Zero(dims[l + 1]));
  }
  return model;
}

MlpModel MlpModel::he_uniform(const std::vector<int>& dims, Rng& rng) {
  MlpModel model = zeros(dims);
  for (size_t l = 0; l < model.weights.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[l]));
    for (Eigen::Index i = 0; i < model.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < model.weights[l].cols(); ++j) {
        model.weights[l](i, j) = rng.uniform(-limit, limit);
      }
    }
  }
  return model;
}

ForwardCache forward_cached(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x) {
  if (x.cols() != model.input_dim()) {
    throw std::invalid_argument("input dimension mismatch");
  }
  ForwardCache cache;
  MatrixXd activation = x;
  for (size_t l = 0; l < model.num_layers(); ++l) {
    cache.inputs.push_back(activation);
    MatrixXd z =
        (activation * model.weights[l].transpose()).rowwise() + model.biases[l].transpose();
    if (l + 1 < model.num_layers()) {
      activation = z.cwiseMax(0.0);  // ReLU on hidden layers
    } else {
      cache.logits = std::move(z);
    }
  }
  return cache;
}

MatrixXd forward_logits(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x) {
  return forward_cached(model, x).logits;
}

MatrixXd softmax_rows(const Eigen::Ref<const MatrixXd>& logits) {
  MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    ArrayXd e = (logits.row(i).array() - peak).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

VectorXd softmax(const Eigen::Ref<const VectorXd>& logits) {
  return softmax_rows(logits.transpose()).row(0).transpose();
}

VectorXi predict_classes(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x) {
  const MatrixXd logits = forward_logits(model, x);
  VectorXi classes(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    classes[i] = argmax_lowest_tie(logits.row(i).transpose());
  }
  return classes;
}

CrossEntropyResult weighted_cross_entropy(const Eigen::Ref<const MatrixXd>& probs,
                                          const Eigen::Ref<const MatrixXd>& targets,
                                          const Eigen::Ref<const VectorXd>& weights) {
  const Eigen::Index batch = probs.rows();
  if (targets.rows() != batch || weights.size() != batch ||
      targets.cols() != probs.cols()) {
    throw std::invalid_argument("probs, targets, and weights must agree in size");
  }
  if (batch == 0) throw std::invalid_argument("empty batch");
  for (Eigen::Index i = 0; i < batch; ++i) {
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("weights must be >= 0");
  }

  CrossEntropyResult result;
  result.dlogits.resize(batch, probs.cols());
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const ArrayXd clamped = probs.row(i).transpose().array().max(kProbFloor);
    loss -= weights[i] * (targets.row(i).transpose().array() * clamped.log()).sum();
    result.dlogits.row(i) =
        weights[i] * inv_batch * (probs.row(i) - targets.row(i));
  }
  result.loss = loss * inv_batch;
  return result;
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (size_t l = 0; l < model.num_layers(); ++l) {
    g.weights.push_back(MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    g.biases.push_back(VectorXd::Zero(model.biases[l].size()));
  }
  return g;
}

void Gradients::accumulate(const Gradients& other) {
  if (weights.size() != other.weights.size()) {
    throw std::invalid_argument("gradient shapes do not match");
  }
  for (size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
}

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const Eigen::Ref<const MatrixXd>& dlogits) {
  Gradients grads = Gradients::zeros_like(model);
  MatrixXd delta = dlogits;
  for (size_t l = model.num_layers(); l-- > 0;) {
    grads.weights[l] = delta.transpose() * cache.inputs[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      // d/d(hidden activation), gated by the ReLU that produced it
      MatrixXd dact = delta * model.weights[l];
      const MatrixXd& post = cache.inputs[l];  // post-ReLU activation of layer l-1
      delta = (post.array() > 0.0).cast<double>() * dact.array();
    }
  }
  return grads;
}

OptimizerState OptimizerState::create(const MlpModel& model, double learning_rate,
                                      double momentum, double weight_decay,
                                      long total_steps) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  OptimizerState opt;
  opt.learning_rate = learning_rate;
  opt.momentum = momentum;
  opt.weight_decay = weight_decay;
  opt.total_steps = total_steps;
  for (size_t l = 0; l < model.num_layers(); ++l) {
    opt.w_velocity.push_back(
        MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    opt.b_velocity.push_back(VectorXd::Zero(model.biases[l].size()));
  }
  return opt;
}

double cosine_lr(long step, long total_steps, double base_lr) {
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  if (step < 0 || step > total_steps) {
    throw std::invalid_argument("step must lie in [0, total_steps]");
  }
  const double ratio = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * std::cos(7.0 * std::numbers::pi * ratio / 16.0);
}

void sgd_step(MlpModel& model, const Gradients& grads, OptimizerState& opt) {
  if (grads.weights.size() != model.num_layers()) {
    throw std::invalid_argument("gradient shapes do not match the model");
  }
  const double lr = cosine_lr(opt.step, opt.total_steps, opt.learning_rate);
  for (size_t l = 0; l < model.num_layers(); ++l) {
    opt.w_velocity[l] = opt.momentum * opt.w_velocity[l] + grads.weights[l];
    opt.b_velocity[l] = opt.momentum * opt.b_velocity[l] + grads.biases[l];
    if (opt.weight_decay > 0.0) {
      model.weights[l] -= lr * opt.weight_decay * model.weights[l];
      model.biases[l] -= lr * opt.weight_decay * model.biases[l];
    }
    model.weights[l] -= lr * opt.w_velocity[l];
    model.biases[l] -= lr * opt.b_velocity[l];
  }
  ++opt.step;
}

void ema_update(MlpModel& ema_model, const MlpModel& model, double ema_momentum) {
  check_same_shape(ema_model, model);
  if (!(ema_momentum >= 0.0 && ema_momentum <= 1.0)) {
    throw std::invalid_argument("ema momentum must lie in [0, 1]");
  }
  for (size_t l = 0; l < model.num_layers(); ++l) {
    ema_model.weights[l] =
        ema_momentum * ema_model.weights[l] + (1.0 - ema_momentum) * model.weights[l];
    ema_model.biases[l] =
        ema_momentum * ema_model.biases[l] + (1.0 - ema_momentum) * model.biases[l];
  }
}

void save_model(const std::string& path, const MlpModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << "mlp " << model.layer_dims.size();
  for (int d : model.layer_dims) out << ' ' << d;
  out << '\n';
  for (size_t l = 0; l < model.num_layers(); ++l) {
    out << "W " << model.weights[l].rows() << ' ' << model.weights[l].cols() << '\n';
    for (Eigen::Index i = 0; i < model.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < model.weights[l].cols(); ++j) {
        if (j > 0) out << ' ';
        out << format_double(model.weights[l](i, j));
      }
      out << '\n';
    }
    out << "b " << model.biases[l].size() << '\n';
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) {
      if (i > 0) out << ' ';
      out << format_double(model.biases[l][i]);
    }
    out << '\n';
  }
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string tag;
  size_t n_dims = 0;
  if (!(in >> tag >> n_dims) || tag != "mlp" || n_dims < 2) {
    throw std::runtime_error("malformed checkpoint header: " + path);
  }
  std::vector<int> dims(n_dims);
  for (auto& d : dims) {
    if (!(in >> d)) throw std::runtime_error("malformed checkpoint dims: " + path);
  }
  MlpModel model = MlpModel::zeros(dims);
  for (size_t l = 0; l < model.num_layers(); ++l) {
    Eigen::Index rows = 0, cols = 0, n = 0;
    if (!(in >> tag >> rows >> cols) || tag != "W" ||
        rows != model.weights[l].rows() || cols != model.weights[l].cols()) {
      throw std::runtime_error("malformed checkpoint weights: " + path);
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> model.weights[l](i, j))) {
          throw std::runtime_error("malformed checkpoint values: " + path);
        }
      }
    }
    if (!(in >> tag >> n) || tag != "b" || n != model.biases[l].size()) {
      throw std::runtime_error("malformed checkpoint biases: " + path);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(in >> model.biases[l][i])) {
        throw std::runtime_error("malformed checkpoint values: " + path);
      }
    }
  }
  return model;
}

}  // namespace sslab
