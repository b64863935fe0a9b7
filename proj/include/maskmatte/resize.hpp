#pragma once

#include "maskmatte/types.hpp"

namespace maskmatte {

/// Target size with the longer side scaled to `target` and the aspect ratio
/// preserved (short side rounded half-up). Returns the input size unchanged
/// when the longer side already equals `target`.
std::pair<Eigen::Index, Eigen::Index> proportional_size(Eigen::Index rows,
                                                        Eigen::Index cols,
                                                        int target);

Alpha resize_bilinear(const Alpha& grid, Eigen::Index rows, Eigen::Index cols);
Mask resize_nearest(const Mask& grid, Eigen::Index rows, Eigen::Index cols);
Trimap resize_nearest(const Trimap& trimap, Eigen::Index rows, Eigen::Index cols);

/// Bilinear for real-valued grids (image planes, alphas).
Alpha proportional_resize(const Alpha& grid, int target);
Planes proportional_resize(const Planes& planes, int target);
/// Nearest for label grids (masks, trimaps).
Mask proportional_resize(const Mask& mask, int target);
Trimap proportional_resize(const Trimap& trimap, int target);

}  // namespace maskmatte
