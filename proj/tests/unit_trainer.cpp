#include <cmath>

#include "doctest.h"
#include "sslab/trainer.hpp"

using namespace sslab;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.labeled_batch = 4;
  cfg.unlabeled_batch = 8;
  cfg.total_steps = 30;
  cfg.eval_interval = 10;
  cfg.n_per_moon = 40;
  cfg.n_labels = 4;
  cfg.seed = 3;
  cfg.hidden_dims = {8, 8};
  return cfg;
}

TrainerState state_for(const TrainConfig& cfg, int num_classes = 2) {
  return init_trainer(cfg, 2, num_classes, uniform_prob(num_classes));
}

}  // namespace

TEST_CASE("pseudo label selection") {
  VectorXd p(2);
  p << 0.9, 0.1;
  CHECK(pseudo_label(p) == 0);
  p << 0.5, 0.5;
  CHECK(pseudo_label(p) == 0);  // ties break to the lowest index

  VectorXd q(4);
  q << 0.1, 0.2, 0.4, 0.3;
  CHECK(pseudo_label(q) == 2);
  // permutation equivariance
  VectorXd qp(4);
  const int perm[4] = {2, 0, 3, 1};
  for (int i = 0; i < 4; ++i) qp[perm[i]] = q[i];
  CHECK(perm[pseudo_label(q)] == pseudo_label(qp));
}

TEST_CASE("augmentations") {
  AugmentConfig aug;
  Rng rng(5);
  Eigen::RowVectorXd x(2);
  x << 1.0, -2.0;

  SUBCASE("zero weak noise is the identity") {
    aug.weak_noise = 0.0;
    const auto y = augment_weak(x, aug, rng);
    CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("degenerate strong augmentation is the identity") {
    aug.strong_noise = 0.0;
    aug.strong_scale_min = 1.0;
    aug.strong_scale_max = 1.0;
    const auto y = augment_strong(x, aug, rng);
    CHECK((y - x).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("weak noise has the configured variance") {
    aug.weak_noise = 0.3;
    const int n = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = augment_weak(x, aug, rng)[0] - x[0];
      sum += d;
      sum_sq += d * d;
    }
    const double var = sum_sq / n - (sum / n) * (sum / n);
    CHECK(var == doctest::Approx(0.09).epsilon(0.05));
  }
}

TEST_CASE("hand-traced weighting step") {
  // frozen fixture: C=2, momentum 0.5, truncated Gaussian with n_sigma=2,
  // uniform alignment on; expected values computed independently
  TrainConfig cfg = small_config();
  cfg.momentum = 0.5;
  cfg.scheme = TruncatedGaussian{1.0, 2};
  cfg.ua_target = UaTargetMode::kUniform;
  TrainerState state = state_for(cfg);

  MatrixXd probs(3, 2);
  probs << 0.9, 0.1, 0.6, 0.4, 0.2, 0.8;

  const WeighResult result = weigh_batch(probs, state, cfg);

  // statistics after the update (they must precede the weights)
  CHECK(state.stats.mu_hat == doctest::Approx(0.6333333333333333).epsilon(1e-12));
  CHECK(state.stats.var_hat == doctest::Approx(0.5116666666666667).epsilon(1e-12));
  CHECK(state.marginal.marginal[0] ==
        doctest::Approx(0.5333333333333333).epsilon(1e-12));
  CHECK(state.marginal.marginal[1] ==
        doctest::Approx(0.4666666666666667).epsilon(1e-12));

  // aligned confidences and the resulting weights
  CHECK(result.used_confidences[0] ==
        doctest::Approx(0.8873239436619718).epsilon(1e-12));
  CHECK(result.used_confidences[1] ==
        doctest::Approx(0.5675675675675675).epsilon(1e-12));
  CHECK(result.used_confidences[2] ==
        doctest::Approx(0.8205128205128205).epsilon(1e-12));
  CHECK(result.weights[0] == 1.0);
  CHECK(result.weights[1] == doctest::Approx(0.98323603679182).epsilon(1e-11));
  CHECK(result.weights[2] == 1.0);

  // pseudo-labels come from the raw predictions
  CHECK(result.pseudo_labels[0] == 0);
  CHECK(result.pseudo_labels[1] == 0);
  CHECK(result.pseudo_labels[2] == 1);

  // weighted consistency loss against hand-set strong predictions
  MatrixXd strong(3, 2);
  strong << 0.7, 0.3, 0.5, 0.5, 0.1, 0.9;
  const auto ce = weighted_cross_entropy(strong, result.loss_targets, result.weights);
  CHECK(ce.loss == doctest::Approx(0.3811875821079145).epsilon(1e-11));
}

TEST_CASE("statistics update precedes weight computation") {
  TrainConfig cfg = small_config();
  cfg.momentum = 0.0;  // weights must reflect this batch's own statistics
  cfg.scheme = TruncatedGaussian{1.0, 2};
  cfg.ua_target = UaTargetMode::kOff;
  TrainerState state = state_for(cfg);
  state.stats.mu_hat = 0.99;  // would zero out most weights if it were used

  MatrixXd probs(2, 2);
  probs << 0.8, 0.2, 0.9, 0.1;
  const WeighResult result = weigh_batch(probs, state, cfg);
  // with m=0 the post-update mean is 0.85, so 0.9 sits above the mean
  CHECK(state.stats.mu_hat == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(result.weights[1] == 1.0);
  CHECK(result.weights[0] < 1.0);
  CHECK(result.weights[0] ==
        doctest::Approx(truncated_gaussian_weight(0.8, state.stats, 1.0, 2))
            .epsilon(1e-15));
}

TEST_CASE("UA routing never changes pseudo-labels") {
  TrainConfig cfg = small_config();
  cfg.scheme = TruncatedGaussian{1.0, 2};
  Rng rng(17);

  for (int trial = 0; trial < 500; ++trial) {
    const int c = 2 + static_cast<int>(trial % 4);
    TrainerState on_state = state_for(cfg, c);
    TrainerState off_state = state_for(cfg, c);
    // skew the marginal away from uniform so alignment actually rescales
    VectorXd skew(c);
    for (int j = 0; j < c; ++j) skew[j] = 0.05 + rng.uniform();
    on_state.marginal.marginal = skew / skew.sum();
    off_state.marginal = on_state.marginal;

    MatrixXd probs(6, c);
    for (int i = 0; i < 6; ++i) {
      VectorXd p(c);
      for (int j = 0; j < c; ++j) p[j] = 0.01 + rng.uniform();
      probs.row(i) = (p / p.sum()).transpose();
    }

    TrainConfig ua_on = cfg;
    ua_on.ua_target = UaTargetMode::kUniform;
    TrainConfig ua_off = cfg;
    ua_off.ua_target = UaTargetMode::kOff;

    const WeighResult with_ua = weigh_batch(probs, on_state, ua_on);
    const WeighResult without_ua = weigh_batch(probs, off_state, ua_off);
    for (int i = 0; i < 6; ++i) {
      REQUIRE(with_ua.pseudo_labels[i] == without_ua.pseudo_labels[i]);
    }
  }
}

TEST_CASE("zero weights degenerate to supervised training") {
  TrainConfig cfg = small_config();
  cfg.scheme = Threshold{1.0, 1.0};  // cold model cannot reach confidence 1
  cfg.ua_target = UaTargetMode::kOff;
  TrainerState state = state_for(cfg);

  MatrixXd xl(2, 2);
  xl << 0.0, 1.0, 1.0, 0.0;
  VectorXi yl(2);
  yl << 0, 1;
  MatrixXd xu(4, 2);
  xu << 0.5, 0.5, -0.5, 0.25, 1.5, -0.5, 0.25, 0.75;

  const StepResult step = train_step(xl, yl, xu, {}, state, cfg);
  for (const auto& o : step.outcomes) {
    REQUIRE(o.confidence < 1.0);
    REQUIRE(o.weight == 0.0);
  }
  CHECK(step.unsup_loss == 0.0);
}

TEST_CASE("fixed scheme with UA off reduces to unweighted pseudo-labeling") {
  TrainConfig cfg = small_config();
  cfg.scheme = Fixed{1.0};
  cfg.ua_target = UaTargetMode::kOff;
  TrainerState state = state_for(cfg);

  MatrixXd xu(4, 2);
  xu << 0.5, 0.5, -0.5, 0.25, 1.5, -0.5, 0.25, 0.75;
  const MatrixXd weak_probs = softmax_rows(forward_logits(state.model, xu));
  const WeighResult weigh = weigh_batch(weak_probs, state, cfg);
  CHECK((weigh.weights.array() == 1.0).all());

  // L_u equals the unweighted mean cross-entropy against the pseudo-labels
  const auto weighted =
      weighted_cross_entropy(weak_probs, weigh.loss_targets, weigh.weights);
  const auto unweighted =
      weighted_cross_entropy(weak_probs, weigh.loss_targets, VectorXd::Ones(4));
  CHECK(weighted.loss == doctest::Approx(unweighted.loss).epsilon(1e-15));
}

TEST_CASE("threshold tau 0 matches the fixed scheme bitwise") {
  TrainConfig threshold_cfg = small_config();
  threshold_cfg.scheme = Threshold{1.0, 0.0};
  TrainConfig fixed_cfg = small_config();
  fixed_cfg.scheme = Fixed{1.0};

  const auto ds = build_dataset(threshold_cfg, threshold_cfg.seed, true);
  const auto eval = build_dataset(threshold_cfg, threshold_cfg.seed + 1, false);
  const RunResult a = run_training(threshold_cfg, ds, eval);
  const RunResult b = run_training(fixed_cfg, ds, eval);

  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    REQUIRE(a.trace[i].quantity == b.trace[i].quantity);
    REQUIRE(a.trace[i].unsup_loss == b.trace[i].unsup_loss);
    REQUIRE(a.trace[i].eval_error == b.trace[i].eval_error);
  }
  for (size_t i = 0; i < a.final_outcomes.size(); ++i) {
    REQUIRE(a.final_outcomes[i].weight == b.final_outcomes[i].weight);
  }
}

TEST_CASE("determinism: identical config and seed reproduce the trace") {
  const TrainConfig cfg = small_config();
  const RunResult a = run_from_config(cfg);
  const RunResult b = run_from_config(cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    REQUIRE(a.trace[i].step == b.trace[i].step);
    REQUIRE(a.trace[i].sup_loss == b.trace[i].sup_loss);
    REQUIRE(a.trace[i].unsup_loss == b.trace[i].unsup_loss);
    REQUIRE(a.trace[i].quantity == b.trace[i].quantity);
    REQUIRE(a.trace[i].eval_error == b.trace[i].eval_error);
    REQUIRE(a.trace[i].mu_hat == b.trace[i].mu_hat);
  }

  TrainConfig other = cfg;
  other.seed = cfg.seed + 1;
  const RunResult c = run_from_config(other);
  bool any_diff = false;
  for (size_t i = 0; i < std::min(a.trace.size(), c.trace.size()); ++i) {
    if (a.trace[i].sup_loss != c.trace[i].sup_loss) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("run training basics") {
  SUBCASE("zero steps yield an empty trace and the initial model") {
    TrainConfig cfg = small_config();
    cfg.total_steps = 0;
    const auto ds = build_dataset(cfg, cfg.seed, true);
    const auto eval = build_dataset(cfg, cfg.seed + 1, false);
    const RunResult result = run_training(cfg, ds, eval);
    CHECK(result.trace.empty());

    Rng init_rng(cfg.seed);
    const MlpModel fresh = MlpModel::he_uniform({2, 8, 8, 2}, init_rng);
    CHECK((result.model.weights[0] - fresh.weights[0]).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("fixed scheme reports quantity equal to lambda_max throughout") {
    TrainConfig cfg = small_config();
    cfg.scheme = Fixed{1.0};
    const RunResult result = run_from_config(cfg);
    for (const auto& rec : result.trace) REQUIRE(rec.quantity == 1.0);
  }
  SUBCASE("loss decomposition: record holds both components") {
    TrainConfig cfg = small_config();
    const RunResult result = run_from_config(cfg);
    for (const auto& rec : result.trace) {
      const double total = rec.sup_loss + rec.unsup_loss;
      REQUIRE(total == rec.sup_loss + rec.unsup_loss);  // bit-exact decomposition
      REQUIRE(std::isfinite(total));
    }
  }
  SUBCASE("labeled class coverage is enforced") {
    TrainConfig cfg = small_config();
    auto base = two_moons(cfg.n_per_moon, cfg.data_noise, cfg.seed);
    // hand-build a mask covering only class 0
    std::vector<bool> mask(base.size(), false);
    int marked = 0;
    for (int i = 0; i < base.size() && marked < 2; ++i) {
      if (base.oracle_label(i) == 0) {
        mask[i] = true;
        ++marked;
      }
    }
    PointDataset bad(base.points(), base.oracle_labels(), mask, 2);
    const auto eval = build_dataset(cfg, cfg.seed + 1, false);
    CHECK_THROWS_AS(run_training(cfg, bad, eval), std::invalid_argument);
  }
}

TEST_CASE("threshold trace reproduces the step-scheme quantity formula") {
  TrainConfig cfg = small_config();
  cfg.scheme = Threshold{1.0, 0.95};
  cfg.ua_target = UaTargetMode::kOff;
  const auto ds = build_dataset(cfg, cfg.seed, true);
  const auto eval = build_dataset(cfg, cfg.seed + 1, false);

  TrainerState state = init_trainer(cfg, 2, 2, uniform_prob(2));
  const auto view = ds.unlabeled_view();
  const auto& labeled = ds.labeled_indices();
  for (int k = 0; k < 10; ++k) {
    MatrixXd xl(cfg.labeled_batch, 2);
    VectorXi yl(cfg.labeled_batch);
    for (int i = 0; i < cfg.labeled_batch; ++i) {
      const int idx = labeled[state.rng.uniform_int(0, static_cast<int>(labeled.size()) - 1)];
      xl.row(i) = ds.points().row(idx);
      yl[i] = ds.oracle_label(idx);
    }
    MatrixXd xu(cfg.unlabeled_batch, 2);
    for (int i = 0; i < cfg.unlabeled_batch; ++i) {
      xu.row(i) = view.row(state.rng.uniform_int(0, view.size() - 1));
    }
    const StepResult step = train_step(xl, yl, xu, {}, state, cfg);

    long accepted = 0;
    for (const auto& o : step.outcomes) {
      REQUIRE((o.weight == 0.0 || o.weight == 1.0));
      if (o.confidence >= 0.95) {
        ++accepted;
        REQUIRE(o.weight == 1.0);
      } else {
        REQUIRE(o.weight == 0.0);
      }
    }
    const double expect =
        static_cast<double>(accepted) / static_cast<double>(cfg.unlabeled_batch);
    REQUIRE(quantity(step.outcomes) == doctest::Approx(expect).epsilon(1e-15));
  }
  (void)eval;
}

TEST_CASE("full-metrics trace matches the full-set recomputation") {
  TrainConfig cfg = small_config();
  cfg.full_metrics = true;
  const RunResult result = run_from_config(cfg);
  REQUIRE(!result.trace.empty());
  // the final record and final_outcomes come from the same end state
  CHECK(result.trace.back().quantity ==
        doctest::Approx(quantity(result.final_outcomes)).epsilon(1e-15));
  const auto g = quality(result.final_outcomes);
  REQUIRE(g.has_value());
  CHECK(*result.trace.back().quality == doctest::Approx(*g).epsilon(1e-15));
}

TEST_CASE("per-class statistics variant") {
  TrainConfig cfg = small_config();
  cfg.per_class_stats = true;
  cfg.scheme = TruncatedGaussian{1.0, 2};
  cfg.momentum = 0.0;
  cfg.ua_target = UaTargetMode::kOff;
  TrainerState state = state_for(cfg);

  MatrixXd probs(4, 2);
  probs << 0.9, 0.1, 0.8, 0.2, 0.3, 0.7, 0.4, 0.6;
  weigh_batch(probs, state, cfg);
  // class 0 saw confidences {0.9, 0.8}; class 1 saw {0.7, 0.6}
  CHECK(state.class_stats[0].mu_hat == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(state.class_stats[1].mu_hat == doctest::Approx(0.65).epsilon(1e-12));
  // the global estimate tracks everything
  CHECK(state.stats.mu_hat == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("long-tailed blobs train with every alignment target") {
  TrainConfig cfg;
  cfg.dataset = "imbalanced_blobs";
  cfg.blob_classes = 3;
  cfg.blob_head = 60;
  cfg.blob_gamma = 6.0;
  cfg.n_labels = 9;
  cfg.unlabeled_batch = 16;
  cfg.total_steps = 50;
  cfg.eval_interval = 25;
  cfg.hidden_dims = {8, 8};
  cfg.seed = 4;

  for (UaTargetMode target : {UaTargetMode::kUniform, UaTargetMode::kTrue,
                              UaTargetMode::kEstimated, UaTargetMode::kOff}) {
    cfg.ua_target = target;
    const RunResult result = run_from_config(cfg);
    REQUIRE(!result.trace.empty());
    CHECK(result.trace.back().per_class_quality.size() == 3);
    for (const auto& rec : result.trace) {
      REQUIRE(std::isfinite(rec.sup_loss));
      REQUIRE(std::isfinite(rec.unsup_loss));
    }
  }

  // the DA baseline route trains as well
  cfg.ua_target = UaTargetMode::kUniform;
  cfg.use_da = true;
  const RunResult da_result = run_from_config(cfg);
  CHECK(!da_result.trace.empty());
}

TEST_CASE("nan losses abort with diagnostics") {
  TrainConfig cfg = small_config();
  TrainerState state = state_for(cfg);
  state.model.weights[0].setConstant(std::numeric_limits<double>::quiet_NaN());

  MatrixXd xl(1, 2);
  xl << 0.0, 1.0;
  VectorXi yl(1);
  yl << 0;
  MatrixXd xu(2, 2);
  xu << 0.5, 0.5, -0.5, 0.25;
  CHECK_THROWS_AS(train_step(xl, yl, xu, {}, state, cfg), NanLossError);
}
