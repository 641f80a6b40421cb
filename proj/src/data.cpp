#include "sslab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sslab/format.hpp"

namespace sslab {

PointDataset::PointDataset(MatrixXd points, VectorXi labels,
                           std::vector<bool> labeled_mask, int num_classes)
    : points_(std::move(points)),
      labels_(std::move(labels)),
      labeled_mask_(std::move(labeled_mask)),
      num_classes_(num_classes) {
  const int n = static_cast<int>(points_.rows());
  if (labels_.size() != n || static_cast<int>(labeled_mask_.size()) != n) {
    throw std::invalid_argument("points, labels, and mask sizes disagree");
  }
  if (num_classes_ < 2) throw std::invalid_argument("need at least 2 classes");
  if (!points_.allFinite()) throw std::invalid_argument("points must be finite");
  for (int i = 0; i < n; ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw std::invalid_argument("label out of range");
    }
    (labeled_mask_[i] ? labeled_indices_ : unlabeled_indices_).push_back(i);
  }
}

VectorXi PointDataset::labeled_labels() const {
  VectorXi out(labeled_indices_.size());
  for (size_t i = 0; i < labeled_indices_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = labels_[labeled_indices_[i]];
  }
  return out;
}

namespace {

// Moon 0: (cos t, sin t). Moon 1: the same arc flipped in y and offset so it
// bottoms out at (1, -0.5): (1 - cos t, 0.5 - sin t), t in [0, pi].
void moon_point(int moon, double t, double& x0, double& x1) {
  if (moon == 0) {
    x0 = std::cos(t);
    x1 = std::sin(t);
  } else {
    x0 = 1.0 - std::cos(t);
    x1 = 0.5 - std::sin(t);
  }
}

PointDataset finalize_shuffled(MatrixXd points, VectorXi labels, int num_classes,
                               Rng& rng) {
  const int n = static_cast<int>(points.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  MatrixXd shuffled_points(n, points.cols());
  VectorXi shuffled_labels(n);
  for (int i = 0; i < n; ++i) {
    shuffled_points.row(i) = points.row(order[i]);
    shuffled_labels[i] = labels[order[i]];
  }
  return PointDataset(std::move(shuffled_points), std::move(shuffled_labels),
                      std::vector<bool>(n, false), num_classes);
}

}  // namespace

double two_moon_residual(double x0, double x1, int moon) {
  if (moon == 0) {
    // distance from the unit circle, arc constraint x1 >= 0
    const double r = std::hypot(x0, x1);
    return std::abs(r - 1.0) + std::max(0.0, -x1);
  }
  const double r = std::hypot(x0 - 1.0, x1 - 0.5);
  return std::abs(r - 1.0) + std::max(0.0, x1 - 0.5);
}

PointDataset two_moons(int n_per_moon, double noise, std::uint64_t seed) {
  if (n_per_moon < 2) throw std::invalid_argument("n_per_moon must be >= 2");
  if (noise < 0.0) throw std::invalid_argument("noise must be >= 0");
  Rng rng(seed);
  const int n = 2 * n_per_moon;
  MatrixXd points(n, 2);
  VectorXi labels(n);
  for (int moon = 0; moon < 2; ++moon) {
    for (int i = 0; i < n_per_moon; ++i) {
      const double t =
          std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_per_moon - 1);
      double x0 = 0.0, x1 = 0.0;
      moon_point(moon, t, x0, x1);
      const int row = moon * n_per_moon + i;
      points(row, 0) = x0 + (noise > 0.0 ? rng.normal(0.0, noise) : 0.0);
      points(row, 1) = x1 + (noise > 0.0 ? rng.normal(0.0, noise) : 0.0);
      labels[row] = moon;
    }
  }
  return finalize_shuffled(std::move(points), std::move(labels), 2, rng);
}

PointDataset select_labels(const PointDataset& dataset, int n_labels, LabelMode mode,
                           std::uint64_t seed) {
  const int n = dataset.size();
  const int c = dataset.num_classes();
  if (n_labels < 0 || n_labels > n) throw std::invalid_argument("n_labels out of range");
  Rng rng(seed);
  std::vector<bool> mask(n, false);

  if (mode == LabelMode::kBalanced) {
    if (n_labels % c != 0) {
      throw std::invalid_argument("balanced selection needs n_labels divisible by C");
    }
    const int per_class = n_labels / c;
    for (int cls = 0; cls < c; ++cls) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i) {
        if (dataset.oracle_label(i) == cls) members.push_back(i);
      }
      if (static_cast<int>(members.size()) < per_class) {
        throw std::invalid_argument("class too small for balanced selection");
      }
      rng.shuffle(members.begin(), members.end());
      for (int k = 0; k < per_class; ++k) mask[members[k]] = true;
    }
  } else {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    for (int k = 0; k < n_labels; ++k) mask[order[k]] = true;
  }

  return PointDataset(dataset.points(), dataset.oracle_labels(), std::move(mask),
                      dataset.num_classes());
}

PointDataset imbalanced_blobs(int num_classes, int n_head, double gamma,
                              std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (n_head < 1) throw std::invalid_argument("n_head must be >= 1");
  if (!(gamma >= 1.0)) throw std::invalid_argument("gamma must be >= 1");
  Rng rng(seed);

  const double radius = 6.0;
  const double blob_std = 1.0;
  std::vector<int> sizes(num_classes);
  int total = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    const double exponent =
        -static_cast<double>(cls) / static_cast<double>(num_classes - 1);
    sizes[cls] = static_cast<int>(
        std::lround(static_cast<double>(n_head) * std::pow(gamma, exponent)));
    sizes[cls] = std::max(sizes[cls], 1);
    total += sizes[cls];
  }

  MatrixXd points(total, 2);
  VectorXi labels(total);
  int row = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(cls) / num_classes;
    const double cx = radius * std::cos(angle);
    const double cy = radius * std::sin(angle);
    for (int i = 0; i < sizes[cls]; ++i, ++row) {
      points(row, 0) = cx + rng.normal(0.0, blob_std);
      points(row, 1) = cy + rng.normal(0.0, blob_std);
      labels[row] = cls;
    }
  }
  return finalize_shuffled(std::move(points), std::move(labels), num_classes, rng);
}

void save_dataset_csv(const std::string& path, const PointDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);
  out << "x0,x1,label,is_labeled\n";
  for (int i = 0; i < dataset.size(); ++i) {
    out << format_double(dataset.points()(i, 0)) << ','
        << format_double(dataset.points()(i, 1)) << ',' << dataset.oracle_label(i) << ','
        << (dataset.is_labeled(i) ? 1 : 0) << '\n';
  }
}

PointDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "x0,x1,label,is_labeled") {
    throw std::runtime_error("malformed dataset header in " + path);
  }
  std::vector<double> xs, ys;
  std::vector<int> labels;
  std::vector<bool> mask;
  int max_label = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    double x0 = 0.0, x1 = 0.0;
    int label = 0, labeled = 0;
    if (!std::getline(row, field, ',')) break;
    x0 = std::stod(field);
    if (!std::getline(row, field, ',')) throw std::runtime_error("malformed row in " + path);
    x1 = std::stod(field);
    if (!std::getline(row, field, ',')) throw std::runtime_error("malformed row in " + path);
    label = std::stoi(field);
    if (!std::getline(row, field, ',')) throw std::runtime_error("malformed row in " + path);
    labeled = std::stoi(field);
    xs.push_back(x0);
    ys.push_back(x1);
    labels.push_back(label);
    mask.push_back(labeled != 0);
    max_label = std::max(max_label, label);
  }
  const int n = static_cast<int>(xs.size());
  if (n == 0) throw std::runtime_error("dataset file has no rows: " + path);
  MatrixXd points(n, 2);
  VectorXi label_vec(n);
  for (int i = 0; i < n; ++i) {
    points(i, 0) = xs[i];
    points(i, 1) = ys[i];
    label_vec[i] = labels[i];
  }
  return PointDataset(std::move(points), std::move(label_vec), std::move(mask),
                      max_label + 1);
}

}  // namespace sslab
