#include "sslab/boundary.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "sslab/format.hpp"

namespace sslab {

GridEval evaluate_grid(const MlpModel& model, const PointDataset& dataset,
                       int resolution) {
  if (resolution < 16) throw std::invalid_argument("resolution must be >= 16");
  if (dataset.dim() != 2) throw std::invalid_argument("grid evaluation needs 2-D data");

  const double x_min = dataset.points().col(0).minCoeff();
  const double x_max = dataset.points().col(0).maxCoeff();
  const double y_min = dataset.points().col(1).minCoeff();
  const double y_max = dataset.points().col(1).maxCoeff();
  const double x_pad = std::max(0.1 * (x_max - x_min), 1e-3);
  const double y_pad = std::max(0.1 * (y_max - y_min), 1e-3);

  GridEval grid;
  grid.xs = VectorXd::LinSpaced(resolution, x_min - x_pad, x_max + x_pad);
  grid.ys = VectorXd::LinSpaced(resolution, y_min - y_pad, y_max + y_pad);

  MatrixXd points(resolution * resolution, 2);
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      points(iy * resolution + ix, 0) = grid.xs[ix];
      points(iy * resolution + ix, 1) = grid.ys[iy];
    }
  }
  const MatrixXd probs = softmax_rows(forward_logits(model, points));
  const int num_classes = static_cast<int>(probs.cols());

  grid.max_probs.resize(resolution, resolution);
  grid.classes.resize(resolution, resolution);
  grid.class_probs.assign(num_classes, MatrixXd(resolution, resolution));
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      const VectorXd p = probs.row(iy * resolution + ix).transpose();
      const int cls = argmax_lowest_tie(p);
      grid.classes(iy, ix) = cls;
      grid.max_probs(iy, ix) = p[cls];
      for (int c = 0; c < num_classes; ++c) grid.class_probs[c](iy, ix) = p[c];
    }
  }
  return grid;
}

namespace {

double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace

std::vector<Segment> marching_squares(const Eigen::Ref<const MatrixXd>& field,
                                      const Eigen::Ref<const VectorXd>& xs,
                                      const Eigen::Ref<const VectorXd>& ys) {
  if (field.rows() != ys.size() || field.cols() != xs.size()) {
    throw std::invalid_argument("field shape does not match grid axes");
  }
  std::vector<Segment> segments;
  for (Eigen::Index iy = 0; iy + 1 < ys.size(); ++iy) {
    for (Eigen::Index ix = 0; ix + 1 < xs.size(); ++ix) {
      const double v0 = field(iy, ix);          // bottom-left
      const double v1 = field(iy, ix + 1);      // bottom-right
      const double v2 = field(iy + 1, ix + 1);  // top-right
      const double v3 = field(iy + 1, ix);      // top-left
      const int mask = (v0 > 0.0 ? 1 : 0) | (v1 > 0.0 ? 2 : 0) | (v2 > 0.0 ? 4 : 0) |
                       (v3 > 0.0 ? 8 : 0);
      if (mask == 0 || mask == 15) continue;

      const double x0 = xs[ix], x1 = xs[ix + 1];
      const double y0 = ys[iy], y1 = ys[iy + 1];
      // zero crossings on each cell edge
      const auto bottom = [&] { return std::pair{lerp(x0, x1, v0 / (v0 - v1)), y0}; };
      const auto right = [&] { return std::pair{x1, lerp(y0, y1, v1 / (v1 - v2))}; };
      const auto top = [&] { return std::pair{lerp(x0, x1, v3 / (v3 - v2)), y1}; };
      const auto left = [&] { return std::pair{x0, lerp(y0, y1, v0 / (v0 - v3))}; };

      const auto emit = [&](std::pair<double, double> a, std::pair<double, double> b) {
        segments.push_back({a.first, a.second, b.first, b.second});
      };

      switch (mask) {
        case 1:
        case 14:
          emit(left(), bottom());
          break;
        case 2:
        case 13:
          emit(bottom(), right());
          break;
        case 3:
        case 12:
          emit(left(), right());
          break;
        case 4:
        case 11:
          emit(right(), top());
          break;
        case 6:
        case 9:
          emit(bottom(), top());
          break;
        case 7:
        case 8:
          emit(left(), top());
          break;
        case 5:
        case 10: {  // saddle: disambiguate with the cell-center average
          const bool center_inside = (v0 + v1 + v2 + v3) / 4.0 > 0.0;
          if ((mask == 5) == center_inside) {
            emit(left(), top());
            emit(bottom(), right());
          } else {
            emit(left(), bottom());
            emit(right(), top());
          }
          break;
        }
        default:
          break;
      }
    }
  }
  return segments;
}

std::vector<Segment> decision_boundary_segments(const GridEval& grid) {
  const int num_classes = static_cast<int>(grid.class_probs.size());
  if (num_classes == 2) {
    const MatrixXd field = grid.class_probs[1] - grid.class_probs[0];
    return marching_squares(field, grid.xs, grid.ys);
  }
  std::vector<Segment> segments;
  for (int c = 0; c < num_classes; ++c) {
    MatrixXd runner_up = MatrixXd::Constant(grid.ys.size(), grid.xs.size(), -1.0);
    for (int other = 0; other < num_classes; ++other) {
      if (other != c) runner_up = runner_up.cwiseMax(grid.class_probs[other]);
    }
    const MatrixXd field = grid.class_probs[c] - runner_up;
    auto segs = marching_squares(field, grid.xs, grid.ys);
    segments.insert(segments.end(), segs.begin(), segs.end());
  }
  return segments;
}

void write_grid_csv(const std::string& path, const GridEval& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open grid file for writing: " + path);
  out << "x0,x1,pred\n";
  for (Eigen::Index iy = 0; iy < grid.ys.size(); ++iy) {
    for (Eigen::Index ix = 0; ix < grid.xs.size(); ++ix) {
      out << format_double(grid.xs[ix]) << ',' << format_double(grid.ys[iy]) << ','
          << grid.classes(iy, ix) << '\n';
    }
  }
}

namespace {

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                          "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};

}  // namespace

void write_boundary_svg(const std::string& path, const GridEval& grid,
                        const PointDataset& dataset) {
  const double x_min = grid.xs[0], x_max = grid.xs[grid.xs.size() - 1];
  const double y_min = grid.ys[0], y_max = grid.ys[grid.ys.size() - 1];
  const double width = 640.0;
  const double height = width * (y_max - y_min) / (x_max - x_min);
  const auto sx = [&](double x) { return (x - x_min) / (x_max - x_min) * width; };
  const auto sy = [&](double y) { return height - (y - y_min) / (y_max - y_min) * height; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open svg for writing: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  for (int i = 0; i < dataset.size(); ++i) {
    if (dataset.is_labeled(i)) continue;
    const int cls = dataset.oracle_label(i) % 10;
    out << "<circle cx=\"" << sx(dataset.points()(i, 0)) << "\" cy=\""
        << sy(dataset.points()(i, 1)) << "\" r=\"2.5\" fill=\"" << kPalette[cls]
        << "\" fill-opacity=\"0.55\"/>\n";
  }

  for (const Segment& s : decision_boundary_segments(grid)) {
    out << "<line x1=\"" << sx(s.x0) << "\" y1=\"" << sy(s.y0) << "\" x2=\"" << sx(s.x1)
        << "\" y2=\"" << sy(s.y1) << "\" stroke=\"#222222\" stroke-width=\"1.6\"/>\n";
  }

  for (int i = 0; i < dataset.size(); ++i) {
    if (!dataset.is_labeled(i)) continue;
    const int cls = dataset.oracle_label(i) % 10;
    const double cx = sx(dataset.points()(i, 0));
    const double cy = sy(dataset.points()(i, 1));
    const double r = 7.0;
    out << "<polygon points=\"" << cx << ',' << cy - r << ' ' << cx - r << ',' << cy + r
        << ' ' << cx + r << ',' << cy + r << "\" fill=\"" << kPalette[cls]
        << "\" stroke=\"#000000\" stroke-width=\"1.2\"/>\n";
  }

  out << "</svg>\n";
}

}  // namespace sslab
