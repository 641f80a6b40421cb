#include "sslab/types.hpp"

#include <cmath>

namespace sslab {

bool is_prob_vector(const Eigen::Ref<const VectorXd>& p, double tol) {
  if (p.size() == 0) return false;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) return false;
  }
  return std::abs(p.sum() - 1.0) <= tol;
}

VectorXd uniform_prob(int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  return VectorXd::Constant(num_classes, 1.0 / static_cast<double>(num_classes));
}

int argmax_lowest_tie(const Eigen::Ref<const VectorXd>& p) {
  if (p.size() == 0) throw std::invalid_argument("empty vector has no argmax");
  int best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = static_cast<int>(i);
  }
  return best;
}

VectorXd one_hot(int index, int num_classes) {
  if (index < 0 || index >= num_classes) {
    throw std::invalid_argument("one_hot index out of range");
  }
  VectorXd v = VectorXd::Zero(num_classes);
  v[index] = 1.0;
  return v;
}

}  // namespace sslab
