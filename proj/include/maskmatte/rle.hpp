#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maskmatte/types.hpp"

namespace maskmatte {

/// Run-length encoded binary mask, COCO convention: runs cover the grid in
/// column-major order and alternate 0/1 starting with a zero-run (which may
/// have length 0).
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;
};

/// Throws CountMismatch unless the runs cover exactly height*width pixels.
Mask decode_rle(const Rle& rle);

/// Inverse of decode_rle; the result is canonical (leading zero-run, no
/// zero-length run except possibly the first, no trailing padding).
Rle encode_rle(const Mask& mask);

/// COCO compressed-counts codec: each count is emitted as little-endian 5-bit
/// chunks in chars '0'+(0..63), bit 0x20 = continuation, bit 0x10 of the last
/// chunk = sign; every count after index 2 is delta-coded against the count
/// two positions earlier.
std::string compress_counts(const std::vector<std::uint32_t>& counts);

/// Throws BadCompressedString on characters outside '0'..'0'+63, a truncated
/// chunk sequence, or a negative reconstructed count.
std::vector<std::uint32_t> decompress_counts(const std::string& s);

}  // namespace maskmatte
