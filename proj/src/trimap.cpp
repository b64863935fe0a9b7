#include "maskmatte/trimap.hpp"

#include <cmath>

#include "maskmatte/errors.hpp"
#include "maskmatte/mask_ops.hpp"

namespace maskmatte {

int adaptive_kernel_size(const Mask& mask, double eta, int min_omega) {
  const long long area = (mask != 0).count();
  if (area == 0) throw EmptyMask("adaptive kernel size of an empty mask");
  const double omega = std::sqrt(static_cast<double>(area)) / eta;
  return std::max(min_omega, static_cast<int>(std::floor(omega + 0.5)));
}

Trimap make_trimap(const Mask& fused, const TrimapConfig& config) {
  if (!(fused != 0).any()) throw EmptyMask("trimap of an empty mask");
  const Mask grown = dilate(fused, config.pre_dilate_k);
  const int omega = adaptive_kernel_size(grown, config.eta, config.min_omega);
  const Mask fg = erode(grown, omega);
  const Mask complement = (grown == 0).cast<std::uint8_t>();
  const Mask bg = erode(complement, omega);

  Trimap trimap(fused.rows(), fused.cols());
  for (Eigen::Index c = 0; c < fused.cols(); ++c)
    for (Eigen::Index r = 0; r < fused.rows(); ++r) {
      if (fg(r, c))
        trimap.set(r, c, TriClass::Foreground);
      else if (bg(r, c))
        trimap.set(r, c, TriClass::Background);
    }
  return trimap;
}

Trimap trimap_from_alpha(const Alpha& alpha, double eps, int unk_dilate_k) {
  Trimap trimap(alpha.rows(), alpha.cols());
  Mask unknown = Mask::Zero(alpha.rows(), alpha.cols());
  for (Eigen::Index c = 0; c < alpha.cols(); ++c)
    for (Eigen::Index r = 0; r < alpha.rows(); ++r) {
      if (alpha(r, c) >= 1.0 - eps)
        trimap.set(r, c, TriClass::Foreground);
      else if (alpha(r, c) <= eps)
        trimap.set(r, c, TriClass::Background);
      else
        unknown(r, c) = 1;
    }
  if (unk_dilate_k >= 1) unknown = dilate(unknown, unk_dilate_k);
  for (Eigen::Index c = 0; c < alpha.cols(); ++c)
    for (Eigen::Index r = 0; r < alpha.rows(); ++r)
      if (unknown(r, c)) trimap.set(r, c, TriClass::Unknown);
  return trimap;
}

}  // namespace maskmatte
