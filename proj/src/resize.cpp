#include "maskmatte/resize.hpp"

#include <cmath>
#include <stdexcept>

namespace maskmatte {
namespace {

// half-pixel-center mapping: dst + 0.5 covers the same span as src + 0.5
double src_coord(Eigen::Index dst, Eigen::Index in, Eigen::Index out) {
  return (dst + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
}

Eigen::Index nearest_index(Eigen::Index dst, Eigen::Index in, Eigen::Index out) {
  const double s = (dst + 0.5) * static_cast<double>(in) / static_cast<double>(out);
  return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), 0,
                                  in - 1);
}

template <typename GridT>
GridT nearest_impl(const GridT& grid, Eigen::Index rows, Eigen::Index cols) {
  GridT out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index sr = nearest_index(r, grid.rows(), rows);
    for (Eigen::Index c = 0; c < cols; ++c)
      out(r, c) = grid(sr, nearest_index(c, grid.cols(), cols));
  }
  return out;
}

}  // namespace

std::pair<Eigen::Index, Eigen::Index> proportional_size(Eigen::Index rows,
                                                        Eigen::Index cols,
                                                        int target) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("degenerate grid");
  const Eigen::Index longer = std::max(rows, cols);
  if (longer == target) return {rows, cols};
  const Eigen::Index shorter = std::min(rows, cols);
  const Eigen::Index scaled = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(
             static_cast<double>(shorter) * target / static_cast<double>(longer) +
             0.5)));
  return rows >= cols ? std::pair<Eigen::Index, Eigen::Index>{target, scaled}
                      : std::pair<Eigen::Index, Eigen::Index>{scaled, target};
}

Alpha resize_bilinear(const Alpha& grid, Eigen::Index rows, Eigen::Index cols) {
  Alpha out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double sy = std::clamp(src_coord(r, grid.rows(), rows), 0.0,
                                 static_cast<double>(grid.rows() - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(sy));
    const Eigen::Index y1 = std::min(y0 + 1, grid.rows() - 1);
    const double fy = sy - y0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double sx = std::clamp(src_coord(c, grid.cols(), cols), 0.0,
                                   static_cast<double>(grid.cols() - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(sx));
      const Eigen::Index x1 = std::min(x0 + 1, grid.cols() - 1);
      const double fx = sx - x0;
      out(r, c) = (1 - fy) * ((1 - fx) * grid(y0, x0) + fx * grid(y0, x1)) +
                  fy * ((1 - fx) * grid(y1, x0) + fx * grid(y1, x1));
    }
  }
  return out;
}

Mask resize_nearest(const Mask& grid, Eigen::Index rows, Eigen::Index cols) {
  return nearest_impl(grid, rows, cols);
}

Trimap resize_nearest(const Trimap& trimap, Eigen::Index rows, Eigen::Index cols) {
  Trimap out(rows, cols);
  out.labels = nearest_impl(trimap.labels, rows, cols);
  return out;
}

Alpha proportional_resize(const Alpha& grid, int target) {
  const auto [rows, cols] = proportional_size(grid.rows(), grid.cols(), target);
  if (rows == grid.rows() && cols == grid.cols()) return grid;
  return resize_bilinear(grid, rows, cols);
}

Planes proportional_resize(const Planes& planes, int target) {
  Planes out;
  out.reserve(planes.size());
  for (const Alpha& p : planes) out.push_back(proportional_resize(p, target));
  return out;
}

Mask proportional_resize(const Mask& mask, int target) {
  const auto [rows, cols] = proportional_size(mask.rows(), mask.cols(), target);
  if (rows == mask.rows() && cols == mask.cols()) return mask;
  return resize_nearest(mask, rows, cols);
}

Trimap proportional_resize(const Trimap& trimap, int target) {
  const auto [rows, cols] = proportional_size(trimap.rows(), trimap.cols(), target);
  if (rows == trimap.rows() && cols == trimap.cols()) return trimap;
  return resize_nearest(trimap, rows, cols);
}

}  // namespace maskmatte
