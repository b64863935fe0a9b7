#include "maskmatte/mask_ops.hpp"

#include <algorithm>
#include <stdexcept>

#include "maskmatte/errors.hpp"

namespace maskmatte {
namespace {

// A set pixel q reaches p = q + o for SE offsets o in [lo, hi], so the output
// at p looks back over inputs p - o, i.e. p + d with d in [-hi, -lo].
struct SeSpan {
  int lo, hi;
};

SeSpan se_span(int k) {
  if (k < 1) throw std::invalid_argument("kernel size must be >= 1");
  return {-((k + 1) / 2 - 1), k / 2};
}

template <bool kDilate>
Mask morph_axis_rows(const Mask& in, int dlo, int dhi) {
  const Eigen::Index rows = in.rows(), cols = in.cols();
  Mask out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::uint8_t acc = kDilate ? 0 : 1;
      for (int d = dlo; d <= dhi; ++d) {
        const Eigen::Index rr = std::clamp<Eigen::Index>(r + d, 0, rows - 1);
        if (kDilate)
          acc |= in(rr, c);
        else
          acc &= in(rr, c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

template <bool kDilate>
Mask morph_axis_cols(const Mask& in, int dlo, int dhi) {
  const Eigen::Index rows = in.rows(), cols = in.cols();
  Mask out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::uint8_t acc = kDilate ? 0 : 1;
      for (int d = dlo; d <= dhi; ++d) {
        const Eigen::Index cc = std::clamp<Eigen::Index>(c + d, 0, cols - 1);
        if (kDilate)
          acc |= in(r, cc);
        else
          acc &= in(r, cc);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

template <bool kDilate>
Mask morph(const Mask& mask, int k) {
  const auto [lo, hi] = se_span(k);
  // separable: replicate clamping acts per axis
  Mask tmp = morph_axis_cols<kDilate>(mask, -hi, -lo);
  return morph_axis_rows<kDilate>(tmp, -hi, -lo);
}

}  // namespace

Mask dilate(const Mask& mask, int k) { return morph<true>(mask, k); }

Mask erode(const Mask& mask, int k) { return morph<false>(mask, k); }

Rect min_bounding_rect(const Mask& mask) {
  Eigen::Index min_r = mask.rows(), max_r = -1, min_c = mask.cols(), max_c = -1;
  for (Eigen::Index c = 0; c < mask.cols(); ++c)
    for (Eigen::Index r = 0; r < mask.rows(); ++r)
      if (mask(r, c)) {
        min_r = std::min(min_r, r);
        max_r = std::max(max_r, r);
        min_c = std::min(min_c, c);
        max_c = std::max(max_c, c);
      }
  if (max_r < 0) throw EmptyMask("min_bounding_rect of an empty mask");
  return Rect{static_cast<int>(min_c), static_cast<int>(min_r),
              static_cast<int>(max_c + 1), static_cast<int>(max_r + 1)};
}

double rect_overlap(const Rect& a, const Rect& b, OverlapMode mode) {
  const long long inter = intersect(a, b).area();
  if (mode == OverlapMode::Ioa) {
    if (b.area() == 0) throw ZeroArea("overlap-over-area with a degenerate rect");
    return static_cast<double>(inter) / static_cast<double>(b.area());
  }
  const long long uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

bool masks_intersect(const Mask& a, const Mask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("masks_intersect: shapes differ");
  return ((a != 0) && (b != 0)).any();
}

}  // namespace maskmatte
