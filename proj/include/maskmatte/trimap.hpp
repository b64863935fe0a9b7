#pragma once

#include "maskmatte/types.hpp"

namespace maskmatte {

struct TrimapConfig {
  int pre_dilate_k = 4;
  double eta = 12.0;
  int min_omega = 1;
};

/// Adaptive erosion kernel: round-half-up of sqrt(mask area) / eta, clamped
/// below by min_omega. Throws EmptyMask.
int adaptive_kernel_size(const Mask& mask, double eta, int min_omega = 1);

/// Trimap from a fused mask: M' = dilate(mask, pre_dilate_k), then with
/// omega = adaptive_kernel_size(M', eta):
///   FG = erode(M', omega), BG = erode(1 - M', omega), UNK elsewhere.
/// Throws EmptyMask on an all-zero input.
Trimap make_trimap(const Mask& fused, const TrimapConfig& config = {});

/// Trimap of an alpha matte: FG where alpha >= 1 - eps, BG where alpha <= eps,
/// UNK elsewhere; if unk_dilate_k >= 1 the unknown band is dilated and
/// overwrites FG/BG labels.
Trimap trimap_from_alpha(const Alpha& alpha, double eps = 1e-3, int unk_dilate_k = 0);

}  // namespace maskmatte
