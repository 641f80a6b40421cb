#include <algorithm>
#include <random>

#include "doctest.h"
#include "sslab/alignment.hpp"

using namespace sslab;

namespace {

VectorXd random_prob(std::mt19937_64& rng, int c) {
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  VectorXd p(c);
  for (int i = 0; i < c; ++i) p[i] = unit(rng);
  return p / p.sum();
}

}  // namespace

TEST_CASE("marginal estimate updates") {
  SUBCASE("fresh estimate is uniform") {
    const auto est = MarginalEstimate::initial(4, 0.999);
    for (int i = 0; i < 4; ++i) CHECK(est.marginal[i] == doctest::Approx(0.25));
  }
  SUBCASE("m = 0 takes the batch mean") {
    auto est = MarginalEstimate::initial(2, 0.0);
    MatrixXd batch(2, 2);
    batch << 0.2, 0.8, 0.6, 0.4;
    est = update_marginal(batch, est);
    CHECK(est.marginal[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(est.marginal[1] == doctest::Approx(0.6).epsilon(1e-15));
  }
  SUBCASE("m = 1 leaves the estimate unchanged") {
    auto est = MarginalEstimate::initial(2, 1.0);
    MatrixXd batch(1, 2);
    batch << 0.9, 0.1;
    est = update_marginal(batch, est);
    CHECK(est.marginal[0] == 0.5);
  }
  SUBCASE("stays on the simplex across many updates") {
    std::mt19937_64 rng(3);
    auto est = MarginalEstimate::initial(5, 0.9);
    for (int step = 0; step < 200; ++step) {
      MatrixXd batch(4, 5);
      for (int i = 0; i < 4; ++i) batch.row(i) = random_prob(rng, 5).transpose();
      est = update_marginal(batch, est);
      CHECK(is_prob_vector(est.marginal));
    }
  }
  SUBCASE("empty batch rejected") {
    auto est = MarginalEstimate::initial(2, 0.5);
    MatrixXd batch(0, 2);
    CHECK_THROWS_AS(update_marginal(batch, est), std::invalid_argument);
  }
}

TEST_CASE("uniform alignment identities") {
  SUBCASE("uniform marginal returns p exactly") {
    auto est = MarginalEstimate::initial(3, 0.999);
    VectorXd p(3);
    p << 0.5, 0.3, 0.2;
    const VectorXd out = uniform_align(p, est, uniform_prob(3));
    for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(p[i]).epsilon(1e-12));
  }
  SUBCASE("hand example: skewed marginal rebalances") {
    auto est = MarginalEstimate::initial(2, 0.0);
    MatrixXd batch(1, 2);
    batch << 0.8, 0.2;
    est = update_marginal(batch, est);
    VectorXd p(2);
    p << 0.8, 0.2;
    const VectorXd out = uniform_align(p, est, uniform_prob(2));
    CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("target equal to the marginal is the identity") {
    auto est = MarginalEstimate::initial(2, 0.0);
    MatrixXd batch(1, 2);
    batch << 0.7, 0.3;
    est = update_marginal(batch, est);
    VectorXd p(2);
    p << 0.9, 0.1;
    const VectorXd out = uniform_align(p, est, est.marginal);
    CHECK(out[0] == doctest::Approx(0.9).epsilon(1e-12));
  }
  SUBCASE("distribution_align shares the arithmetic") {
    std::mt19937_64 rng(11);
    auto est = MarginalEstimate::initial(4, 0.9);
    MatrixXd batch(3, 4);
    for (int i = 0; i < 3; ++i) batch.row(i) = random_prob(rng, 4).transpose();
    est = update_marginal(batch, est);
    const VectorXd p = random_prob(rng, 4);
    const VectorXd a = uniform_align(p, est, uniform_prob(4));
    const VectorXd b = distribution_align(p, est, uniform_prob(4));
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("batch-mean alignment identity") {
  // when the estimate equals the batch mean exactly, the batch mean of the
  // unnormalized aligned vectors is exactly the uniform target
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 5);
    const int b = 2 + static_cast<int>(rng() % 6);
    MatrixXd batch(b, c);
    for (int i = 0; i < b; ++i) batch.row(i) = random_prob(rng, c).transpose();

    auto est = MarginalEstimate::initial(c, 0.0);
    est.marginal = batch.colwise().mean().transpose();

    VectorXd mean_aligned = VectorXd::Zero(c);
    for (int i = 0; i < b; ++i) {
      mean_aligned +=
          aligned_unnormalized(batch.row(i).transpose(), est, uniform_prob(c));
    }
    mean_aligned /= static_cast<double>(b);
    for (int j = 0; j < c; ++j) {
      REQUIRE(std::abs(mean_aligned[j] - 1.0 / c) < 1e-12);
    }
  }
}

TEST_CASE("permutation equivariance of alignment") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 3 + static_cast<int>(rng() % 4);
    const VectorXd p = random_prob(rng, c);
    auto est = MarginalEstimate::initial(c, 0.0);
    est.marginal = random_prob(rng, c);
    const VectorXd target = random_prob(rng, c);

    std::vector<int> perm(c);
    for (int i = 0; i < c; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);

    VectorXd p2(c), m2(c), t2(c);
    for (int i = 0; i < c; ++i) {
      p2[perm[i]] = p[i];
      m2[perm[i]] = est.marginal[i];
      t2[perm[i]] = target[i];
    }
    auto est2 = MarginalEstimate::initial(c, 0.0);
    est2.marginal = m2;

    const VectorXd out = uniform_align(p, est, target);
    const VectorXd out2 = uniform_align(p2, est2, t2);
    for (int i = 0; i < c; ++i) {
      REQUIRE(out2[perm[i]] == doctest::Approx(out[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("alignment target resolution") {
  const auto labeled = MarginalEstimate::initial(3, 0.5);
  CHECK(resolve_alignment_target(UniformTarget{}, 3, nullptr)[0] ==
        doctest::Approx(1.0 / 3));
  VectorXd dist(3);
  dist << 0.5, 0.25, 0.25;
  CHECK(resolve_alignment_target(TrueMarginalTarget{dist}, 3, nullptr)[0] == 0.5);
  CHECK(resolve_alignment_target(EstimatedLabeledMarginalTarget{}, 3, &labeled)[1] ==
        doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(resolve_alignment_target(EstimatedLabeledMarginalTarget{}, 3, nullptr),
                  std::invalid_argument);
  VectorXd bad(3);
  bad << 0.5, 0.6, 0.2;
  CHECK_THROWS_AS(resolve_alignment_target(TrueMarginalTarget{bad}, 3, nullptr),
                  std::invalid_argument);
}
