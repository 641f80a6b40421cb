#include "sslab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace sslab {

void TrainConfig::validate() const {
  validate_scheme(scheme);
  if (labeled_batch < 1) throw std::invalid_argument("labeled_batch must be >= 1");
  if (unlabeled_batch < 2) throw std::invalid_argument("unlabeled_batch must be >= 2");
  if (total_steps < 0) throw std::invalid_argument("total_steps must be >= 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1]");
  }
  if (!(model_ema_momentum >= 0.0 && model_ema_momentum <= 1.0)) {
    throw std::invalid_argument("model_ema_momentum must lie in [0, 1]");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) {
    throw std::invalid_argument("sgd_momentum must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (eval_interval < 1) throw std::invalid_argument("eval_interval must be >= 1");
  if (augment.weak_noise < 0.0 || augment.strong_noise < augment.weak_noise) {
    throw std::invalid_argument("need 0 <= weak_noise <= strong_noise");
  }
  if (!(augment.strong_scale_min > 0.0) ||
      augment.strong_scale_max < augment.strong_scale_min) {
    throw std::invalid_argument("invalid strong scale range");
  }
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("hidden dims must be positive");
  }
  if (dataset != "two_moons" && dataset != "imbalanced_blobs") {
    throw std::invalid_argument("unknown dataset: " + dataset);
  }
  if (label_mode != "balanced" && label_mode != "random") {
    throw std::invalid_argument("unknown label_mode: " + label_mode);
  }
  if (n_per_moon < 2) throw std::invalid_argument("n_per_moon must be >= 2");
  if (data_noise < 0.0) throw std::invalid_argument("data_noise must be >= 0");
  if (n_labels < 1) throw std::invalid_argument("n_labels must be >= 1");
  if (blob_classes < 2) throw std::invalid_argument("blob_classes must be >= 2");
  if (blob_head < 1) throw std::invalid_argument("blob_head must be >= 1");
  if (!(blob_gamma >= 1.0)) throw std::invalid_argument("blob_gamma must be >= 1");
}

Eigen::RowVectorXd augment_weak(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                const AugmentConfig& cfg, Rng& rng) {
  Eigen::RowVectorXd out = x;
  if (cfg.weak_noise > 0.0) {
    for (Eigen::Index j = 0; j < out.size(); ++j) {
      out[j] += rng.normal(0.0, cfg.weak_noise);
    }
  }
  return out;
}

Eigen::RowVectorXd augment_strong(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                  const AugmentConfig& cfg, Rng& rng) {
  Eigen::RowVectorXd out = x;
  if (cfg.strong_noise > 0.0) {
    for (Eigen::Index j = 0; j < out.size(); ++j) {
      out[j] += rng.normal(0.0, cfg.strong_noise);
    }
  }
  if (cfg.strong_scale_min != 1.0 || cfg.strong_scale_max != 1.0) {
    out *= rng.uniform(cfg.strong_scale_min, cfg.strong_scale_max);
  }
  return out;
}

int pseudo_label(const Eigen::Ref<const VectorXd>& p) {
  if (!is_prob_vector(p)) throw std::invalid_argument("not a valid ProbVector");
  return argmax_lowest_tie(p);
}

TrainerState init_trainer(const TrainConfig& cfg, int input_dim, int num_classes,
                          const VectorXd& true_marginal) {
  cfg.validate();
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : cfg.hidden_dims) dims.push_back(h);
  dims.push_back(num_classes);

  TrainerState state{.model = MlpModel::zeros(dims),
                     .ema_model = MlpModel::zeros(dims),
                     .opt = {},
                     .stats = GaussianStats::initial(num_classes, cfg.momentum),
                     .class_stats = {},
                     .marginal = MarginalEstimate::initial(num_classes, cfg.momentum),
                     .labeled_marginal =
                         MarginalEstimate::initial(num_classes, cfg.momentum),
                     .classwise = {},
                     .has_classwise = false,
                     .true_marginal = true_marginal,
                     .step = 0,
                     .num_classes = num_classes,
                     .rng = Rng(cfg.seed ^ 0x5DEECE66DULL)};

  Rng init_rng(cfg.seed);
  state.model = MlpModel::he_uniform(dims, init_rng);
  state.ema_model = state.model;
  state.opt = OptimizerState::create(state.model, cfg.lr, cfg.sgd_momentum,
                                     cfg.weight_decay, std::max(cfg.total_steps, 1L));
  if (cfg.per_class_stats) {
    state.class_stats.assign(num_classes,
                             GaussianStats::initial(num_classes, cfg.momentum));
  }
  if (const auto* cw = std::get_if<ClasswiseThreshold>(&cfg.scheme)) {
    state.classwise = *cw;
    state.classwise.per_class_counts.assign(num_classes, 0);
    state.has_classwise = true;
  }
  return state;
}

namespace {

VectorXd resolve_ua_target(const TrainerState& state, const TrainConfig& cfg) {
  switch (cfg.ua_target == UaTargetMode::kOff && cfg.use_da ? UaTargetMode::kUniform
                                                            : cfg.ua_target) {
    case UaTargetMode::kUniform:
      return uniform_prob(state.num_classes);
    case UaTargetMode::kTrue:
      return state.true_marginal;
    case UaTargetMode::kEstimated:
      return state.labeled_marginal.marginal;
    case UaTargetMode::kOff:
      return uniform_prob(state.num_classes);  // unused
  }
  return uniform_prob(state.num_classes);
}

const GaussianStats& stats_for_class(const TrainerState& state, const TrainConfig& cfg,
                                     int pseudo_class) {
  if (cfg.per_class_stats && !state.class_stats.empty()) {
    return state.class_stats[pseudo_class];
  }
  return state.stats;
}

}  // namespace

WeighResult evaluate_weights(const Eigen::Ref<const MatrixXd>& weak_probs,
                             const TrainerState& state, const TrainConfig& cfg) {
  const Eigen::Index batch = weak_probs.rows();
  if (batch == 0) throw std::invalid_argument("empty batch");

  WeighResult result;
  result.weights.resize(batch);
  result.pseudo_labels.resize(batch);
  result.confidences.resize(batch);
  result.used_confidences.resize(batch);
  result.loss_targets = MatrixXd::Zero(batch, weak_probs.cols());

  const bool ua_on = cfg.ua_target != UaTargetMode::kOff && !cfg.use_da;
  const VectorXd target = resolve_ua_target(state, cfg);
  const WeightingScheme live =
      state.has_classwise ? WeightingScheme(state.classwise) : cfg.scheme;

  for (Eigen::Index i = 0; i < batch; ++i) {
    const VectorXd p = weak_probs.row(i).transpose();
    const int label = pseudo_label(p);
    result.pseudo_labels[i] = label;
    result.confidences[i] = p[label];

    double used = result.confidences[i];
    if (ua_on) {
      const VectorXd aligned = uniform_align(p, state.marginal, target);
      used = aligned.maxCoeff();
    }
    result.used_confidences[i] = std::min(used, 1.0);
    result.weights[i] = scheme_weight(live, result.used_confidences[i], label,
                                      state.step, stats_for_class(state, cfg, label));

    if (cfg.use_da) {
      result.loss_targets.row(i) =
          distribution_align(p, state.marginal, target).transpose();
    } else {
      result.loss_targets(i, label) = 1.0;
    }
  }
  return result;
}

WeighResult weigh_batch(const Eigen::Ref<const MatrixXd>& weak_probs,
                        TrainerState& state, const TrainConfig& cfg) {
  const Eigen::Index batch = weak_probs.rows();
  if (batch < 2) throw std::invalid_argument("unlabeled batch must have >= 2 samples");

  VectorXd confidences(batch);
  VectorXi labels(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const VectorXd p = weak_probs.row(i).transpose();
    labels[i] = pseudo_label(p);
    confidences[i] = p[labels[i]];
  }

  // statistics update precedes weight computation within the step
  state.stats = update_gaussian_stats(confidences, state.stats);
  if (cfg.per_class_stats) {
    for (int c = 0; c < state.num_classes; ++c) {
      std::vector<double> members;
      for (Eigen::Index i = 0; i < batch; ++i) {
        if (labels[i] == c) members.push_back(confidences[i]);
      }
      if (members.size() >= 2) {
        VectorXd v = Eigen::Map<VectorXd>(members.data(), members.size());
        state.class_stats[c] = update_gaussian_stats(v, state.class_stats[c]);
      }
    }
  }
  state.marginal = update_marginal(weak_probs, state.marginal);

  WeighResult result = evaluate_weights(weak_probs, state, cfg);

  if (state.has_classwise) {
    state.classwise = update_class_counts(confidences, labels, state.classwise);
  }
  return result;
}

StepResult train_step(const Eigen::Ref<const MatrixXd>& labeled_x,
                      const Eigen::Ref<const VectorXi>& labeled_y,
                      const Eigen::Ref<const MatrixXd>& unlabeled_x,
                      const std::vector<int>& true_labels, TrainerState& state,
                      const TrainConfig& cfg) {
  const Eigen::Index bl = labeled_x.rows();
  const Eigen::Index bu = unlabeled_x.rows();
  if (labeled_y.size() != bl) throw std::invalid_argument("labeled batch mismatch");
  if (!true_labels.empty() && static_cast<Eigen::Index>(true_labels.size()) != bu) {
    throw std::invalid_argument("true label count mismatch");
  }

  // (1) supervised loss on the weakly-augmented labeled batch
  MatrixXd xl(bl, labeled_x.cols());
  for (Eigen::Index i = 0; i < bl; ++i) {
    xl.row(i) = augment_weak(labeled_x.row(i), cfg.augment, state.rng);
  }
  const ForwardCache sup_cache = forward_cached(state.model, xl);
  const MatrixXd sup_probs = softmax_rows(sup_cache.logits);
  MatrixXd sup_targets = MatrixXd::Zero(bl, state.num_classes);
  for (Eigen::Index i = 0; i < bl; ++i) {
    if (labeled_y[i] < 0 || labeled_y[i] >= state.num_classes) {
      throw std::invalid_argument("label out of range");
    }
    sup_targets(i, labeled_y[i]) = 1.0;
  }
  const CrossEntropyResult sup =
      weighted_cross_entropy(sup_probs, sup_targets, VectorXd::Ones(bl));

  // (2) weak unlabeled predictions (pseudo-label branch, no gradient)
  MatrixXd xu_weak(bu, unlabeled_x.cols());
  for (Eigen::Index i = 0; i < bu; ++i) {
    xu_weak.row(i) = augment_weak(unlabeled_x.row(i), cfg.augment, state.rng);
  }
  const MatrixXd weak_probs = softmax_rows(forward_logits(state.model, xu_weak));

  if (!std::isfinite(sup.loss) || !weak_probs.allFinite()) {
    std::ostringstream os;
    os << "non-finite forward pass at step " << state.step << " (sup=" << sup.loss << ")";
    throw NanLossError(os.str());
  }

  // (3) EMA of label frequencies from this labeled batch, then the
  //     batch statistics and per-sample weights
  state.labeled_marginal = update_marginal(sup_targets, state.labeled_marginal);
  const WeighResult weigh = weigh_batch(weak_probs, state, cfg);

  // (4) weighted consistency loss on the strong view
  MatrixXd xu_strong(bu, unlabeled_x.cols());
  for (Eigen::Index i = 0; i < bu; ++i) {
    xu_strong.row(i) = augment_strong(unlabeled_x.row(i), cfg.augment, state.rng);
  }
  const ForwardCache unsup_cache = forward_cached(state.model, xu_strong);
  const MatrixXd strong_probs = softmax_rows(unsup_cache.logits);
  const CrossEntropyResult unsup =
      weighted_cross_entropy(strong_probs, weigh.loss_targets, weigh.weights);

  if (!std::isfinite(sup.loss) || !std::isfinite(unsup.loss)) {
    std::ostringstream os;
    os << "non-finite loss at step " << state.step << " (sup=" << sup.loss
       << ", unsup=" << unsup.loss << ")";
    throw NanLossError(os.str());
  }

  // (5) one optimizer step on L_s + L_u, then the parameter EMA
  Gradients grads = backward(state.model, sup_cache, sup.dlogits);
  grads.accumulate(backward(state.model, unsup_cache, unsup.dlogits));
  sgd_step(state.model, grads, state.opt);
  ema_update(state.ema_model, state.model, cfg.model_ema_momentum);
  state.step = state.opt.step;

  StepResult result;
  result.sup_loss = sup.loss;
  result.unsup_loss = unsup.loss;
  result.outcomes.reserve(bu);
  for (Eigen::Index i = 0; i < bu; ++i) {
    BatchOutcome o;
    o.confidence = weigh.confidences[i];
    o.pseudo_label = weigh.pseudo_labels[i];
    o.weight = weigh.weights[i];
    if (!true_labels.empty()) o.true_label = true_labels[i];
    result.outcomes.push_back(o);
  }
  return result;
}

std::vector<BatchOutcome> full_set_outcomes(const TrainerState& state,
                                            const TrainConfig& cfg,
                                            const PointDataset& dataset) {
  const auto view = dataset.unlabeled_view();
  if (view.size() == 0) return {};
  MatrixXd x(view.size(), dataset.dim());
  for (int i = 0; i < view.size(); ++i) x.row(i) = view.row(i);
  const MatrixXd probs = softmax_rows(forward_logits(state.model, x));
  const WeighResult weigh = evaluate_weights(probs, state, cfg);

  std::vector<BatchOutcome> outcomes;
  outcomes.reserve(view.size());
  for (int i = 0; i < view.size(); ++i) {
    BatchOutcome o;
    o.confidence = weigh.confidences[i];
    o.pseudo_label = weigh.pseudo_labels[i];
    o.weight = weigh.weights[i];
    o.true_label = dataset.oracle_label((*view.indices)[i]);
    outcomes.push_back(o);
  }
  return outcomes;
}

double evaluate_error(const MlpModel& model, const PointDataset& dataset) {
  const VectorXi pred = predict_classes(model, dataset.points());
  long wrong = 0;
  for (int i = 0; i < dataset.size(); ++i) {
    if (pred[i] != dataset.oracle_label(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(dataset.size());
}

namespace {

MetricsRecord make_record(const TrainerState& state, const TrainConfig& cfg,
                          const std::vector<BatchOutcome>& outcomes, double sup_loss,
                          double unsup_loss, double eval_error) {
  MetricsRecord rec;
  rec.step = state.step;
  rec.sup_loss = sup_loss;
  rec.unsup_loss = unsup_loss;
  rec.quantity = quantity(outcomes);
  rec.quality = quality(outcomes);
  rec.per_class_quality = per_class_quality(outcomes, state.num_classes);
  rec.eval_error = eval_error;
  if (cfg.per_class_stats && !state.class_stats.empty()) {
    double mu = 0.0, var = 0.0;
    for (const auto& s : state.class_stats) {
      mu += s.mu_hat;
      var += s.var_hat;
    }
    rec.mu_hat = mu / static_cast<double>(state.class_stats.size());
    rec.var_hat = var / static_cast<double>(state.class_stats.size());
  } else {
    rec.mu_hat = state.stats.mu_hat;
    rec.var_hat = state.stats.var_hat;
  }
  rec.marginal = state.marginal.marginal;
  return rec;
}

}  // namespace

RunResult run_training(const TrainConfig& cfg, const PointDataset& train_ds,
                       const PointDataset& eval_ds) {
  cfg.validate();
  const auto& labeled = train_ds.labeled_indices();
  if (labeled.empty()) throw std::invalid_argument("dataset has no labeled points");
  {
    std::vector<bool> seen(train_ds.num_classes(), false);
    for (int idx : labeled) seen[train_ds.oracle_label(idx)] = true;
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      throw std::invalid_argument("every class needs at least one labeled sample");
    }
  }
  const auto view = train_ds.unlabeled_view();
  if (view.size() < 2) throw std::invalid_argument("need at least 2 unlabeled points");

  VectorXd true_marginal = VectorXd::Zero(train_ds.num_classes());
  for (int i = 0; i < train_ds.size(); ++i) true_marginal[train_ds.oracle_label(i)] += 1.0;
  true_marginal /= true_marginal.sum();

  TrainerState state =
      init_trainer(cfg, train_ds.dim(), train_ds.num_classes(), true_marginal);

  RunResult result;
  for (long k = 0; k < cfg.total_steps; ++k) {
    MatrixXd xl(cfg.labeled_batch, train_ds.dim());
    VectorXi yl(cfg.labeled_batch);
    for (int i = 0; i < cfg.labeled_batch; ++i) {
      const int idx = labeled[state.rng.uniform_int(0, static_cast<int>(labeled.size()) - 1)];
      xl.row(i) = train_ds.points().row(idx);
      yl[i] = train_ds.oracle_label(idx);
    }
    MatrixXd xu(cfg.unlabeled_batch, train_ds.dim());
    std::vector<int> true_u(cfg.unlabeled_batch);
    for (int i = 0; i < cfg.unlabeled_batch; ++i) {
      const int pos = state.rng.uniform_int(0, view.size() - 1);
      xu.row(i) = view.row(pos);
      true_u[i] = train_ds.oracle_label((*view.indices)[pos]);
    }

    const StepResult step = train_step(xl, yl, xu, true_u, state, cfg);

    const long done = k + 1;
    if (done == 1 || done % cfg.eval_interval == 0 || done == cfg.total_steps) {
      const double eval_error = evaluate_error(state.ema_model, eval_ds);
      std::vector<BatchOutcome> metric_outcomes = step.outcomes;
      if (cfg.full_metrics) metric_outcomes = full_set_outcomes(state, cfg, train_ds);
      result.trace.push_back(make_record(state, cfg, metric_outcomes, step.sup_loss,
                                         step.unsup_loss, eval_error));
    }
  }

  result.model = state.model;
  result.ema_model = state.ema_model;
  result.final_stats = state.stats;
  result.final_marginal = state.marginal;
  result.final_outcomes = full_set_outcomes(state, cfg, train_ds);
  result.final_eval_error =
      cfg.total_steps > 0 ? result.trace.back().eval_error
                          : evaluate_error(state.ema_model, eval_ds);
  return result;
}

PointDataset build_dataset(const TrainConfig& cfg, std::uint64_t seed, bool with_labels) {
  PointDataset base = cfg.dataset == "two_moons"
                          ? two_moons(cfg.n_per_moon, cfg.data_noise, seed)
                          : imbalanced_blobs(cfg.blob_classes, cfg.blob_head,
                                             cfg.blob_gamma, seed);
  if (!with_labels) return base;
  const LabelMode mode =
      cfg.label_mode == "balanced" ? LabelMode::kBalanced : LabelMode::kRandom;
  return select_labels(base, cfg.n_labels, mode, seed + 1);
}

RunResult run_from_config(const TrainConfig& cfg) {
  const PointDataset train_ds = build_dataset(cfg, cfg.seed, true);
  const PointDataset eval_ds = build_dataset(cfg, cfg.seed + kEvalSeedOffset, false);
  return run_training(cfg, train_ds, eval_ds);
}

}  // namespace sslab
