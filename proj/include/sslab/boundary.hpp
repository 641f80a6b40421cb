#pragma once

#include <string>
#include <vector>

#include "sslab/data.hpp"
#include "sslab/nn.hpp"

namespace sslab {

/// Model predictions over a regular grid spanning the dataset bounding box
/// (padded by 10%).
struct GridEval {
  VectorXd xs;         // grid x coordinates, length = resolution
  VectorXd ys;         // grid y coordinates, length = resolution
  MatrixXd max_probs;  // resolution x resolution
  Eigen::MatrixXi classes;
  std::vector<MatrixXd> class_probs;  // one field per class
};

GridEval evaluate_grid(const MlpModel& model, const PointDataset& dataset,
                       int resolution);

/// Line segment in data coordinates.
struct Segment {
  double x0, y0, x1, y1;
};

/// Zero-level contour of a scalar field by marching squares. Corners with
/// value > 0 count as inside; a constant field yields no segments.
std::vector<Segment> marching_squares(const Eigen::Ref<const MatrixXd>& field,
                                      const Eigen::Ref<const VectorXd>& xs,
                                      const Eigen::Ref<const VectorXd>& ys);

/// Decision-boundary segments: the two-class case contours p1 - p0, more
/// classes contour each class's margin against the runner-up.
std::vector<Segment> decision_boundary_segments(const GridEval& grid);

/// Class-map CSV with header x0,x1,pred (one row per grid node).
void write_grid_csv(const std::string& path, const GridEval& grid);

/// Hand-emitted SVG: boundary contour, all points colored by hidden label,
/// labeled points as larger triangles. No timestamp comment.
void write_boundary_svg(const std::string& path, const GridEval& grid,
                        const PointDataset& dataset);

}  // namespace sslab
