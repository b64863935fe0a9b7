#pragma once

#include "maskmatte/types.hpp"

namespace maskmatte {

/// Square structuring element of size k: offsets -(ceil(k/2)-1) .. floor(k/2)
/// on both axes, so an even k leans one pixel toward +row/+col. Out-of-bounds
/// neighbors replicate the nearest edge pixel, which keeps the duality
/// erode(m,k) == ~dilate(~m,k) exact.
Mask dilate(const Mask& mask, int k);
Mask erode(const Mask& mask, int k);

/// Tightest half-open rectangle containing every set pixel.
/// Throws EmptyMask if no pixel is set.
Rect min_bounding_rect(const Mask& mask);

enum class OverlapMode { Iou, Ioa };

/// Iou: |a n b| / |a u b|.  Ioa: |a n b| / |b| (b is the accessory rect);
/// throws ZeroArea when b is degenerate in Ioa mode.
double rect_overlap(const Rect& a, const Rect& b, OverlapMode mode);

bool masks_intersect(const Mask& a, const Mask& b);

}  // namespace maskmatte
