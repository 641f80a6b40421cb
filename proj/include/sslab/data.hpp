#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslab/types.hpp"

namespace sslab {

/// 2-D point set with hidden ground-truth labels and a labeled mask. The
/// training loss path only ever sees the unlabeled view (points, no labels);
/// ground truth leaks out solely through the oracle accessors, which exist
/// for metric computation.
class PointDataset {
 public:
  PointDataset(MatrixXd points, VectorXi labels, std::vector<bool> labeled_mask,
               int num_classes);

  int size() const { return static_cast<int>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  int num_classes() const { return num_classes_; }

  const MatrixXd& points() const { return points_; }
  bool is_labeled(int index) const { return labeled_mask_.at(index); }

  const std::vector<int>& labeled_indices() const { return labeled_indices_; }
  const std::vector<int>& unlabeled_indices() const { return unlabeled_indices_; }

  /// Revealed labels of the labeled subset, aligned with labeled_indices().
  VectorXi labeled_labels() const;

  /// Label-free view of the unlabeled subset for the training loss path.
  struct UnlabeledView {
    const MatrixXd* points = nullptr;
    const std::vector<int>* indices = nullptr;

    int size() const { return static_cast<int>(indices->size()); }
    Eigen::RowVectorXd row(int i) const { return points->row((*indices)[i]); }
  };
  UnlabeledView unlabeled_view() const { return {&points_, &unlabeled_indices_}; }

  /// Metrics-only oracle: hidden ground truth of any point.
  int oracle_label(int index) const { return labels_[index]; }
  const VectorXi& oracle_labels() const { return labels_; }

 private:
  MatrixXd points_;
  VectorXi labels_;
  std::vector<bool> labeled_mask_;
  std::vector<int> labeled_indices_;
  std::vector<int> unlabeled_indices_;
  int num_classes_;
};

/// Interleaved half-circles with isotropic Gaussian noise: class 0 on the
/// unit upper arc, class 1 on the arc flipped and shifted so its dip sits at
/// (1, -0.5). Points are shuffled; no labels are revealed yet.
PointDataset two_moons(int n_per_moon, double noise, std::uint64_t seed);

enum class LabelMode { kBalanced, kRandom };

/// Marks n_labels points as labeled. Balanced mode picks n_labels / C per
/// class uniformly (requires divisibility); random mode samples uniformly.
PointDataset select_labels(const PointDataset& dataset, int n_labels, LabelMode mode,
                           std::uint64_t seed);

/// Well-separated Gaussian blobs with exponentially decaying class sizes:
/// class c receives round(n_head * gamma^(-c / (C-1))) samples.
PointDataset imbalanced_blobs(int num_classes, int n_head, double gamma,
                              std::uint64_t seed);

/// Exact arc residual of a point against the two-moon geometry (for tests).
double two_moon_residual(double x0, double x1, int moon);

/// CSV round-trip with header x0,x1,label,is_labeled.
void save_dataset_csv(const std::string& path, const PointDataset& dataset);
PointDataset load_dataset_csv(const std::string& path);

}  // namespace sslab
