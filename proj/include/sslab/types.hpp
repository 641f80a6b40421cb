#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>

namespace sslab {

using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// A ProbVector is a VectorXd on the probability simplex: entries >= 0,
/// summing to 1 within `tol`.
bool is_prob_vector(const Eigen::Ref<const VectorXd>& p, double tol = 1e-9);

/// Uniform distribution u(C) over `num_classes` classes.
VectorXd uniform_prob(int num_classes);

/// Index of the maximum entry; ties broken by lowest index.
int argmax_lowest_tie(const Eigen::Ref<const VectorXd>& p);

/// One-hot vector of length `num_classes` with a 1 at `index`.
VectorXd one_hot(int index, int num_classes);

/// Deterministic random source. All stochastic code paths draw from an Rng
/// seeded from the run configuration, so a (config, seed) pair fixes every
/// sampled value.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }

  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sslab
