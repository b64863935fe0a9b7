#include "maskmatte/rle.hpp"

#include <numeric>

#include "maskmatte/errors.hpp"

namespace maskmatte {

Mask decode_rle(const Rle& rle) {
  if (rle.height < 1 || rle.width < 1)
    throw CountMismatch("rle grid is degenerate");
  const std::uint64_t total = std::accumulate(rle.counts.begin(), rle.counts.end(),
                                              std::uint64_t{0});
  const std::uint64_t pixels =
      static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width);
  if (total != pixels)
    throw CountMismatch("rle counts cover " + std::to_string(total) + " of " +
                        std::to_string(pixels) + " pixels");

  Mask mask(rle.height, rle.width);
  auto linear = mask.reshaped();  // column-major scan order
  Eigen::Index at = 0;
  std::uint8_t value = 0;
  for (std::uint32_t run : rle.counts) {
    for (std::uint32_t i = 0; i < run; ++i) linear(at++) = value;
    value ^= 1;
  }
  return mask;
}

Rle encode_rle(const Mask& mask) {
  Rle rle;
  rle.height = static_cast<int>(mask.rows());
  rle.width = static_cast<int>(mask.cols());
  auto linear = mask.reshaped();
  std::uint8_t value = 0;  // zero-run first, possibly of length 0
  std::uint32_t run = 0;
  for (Eigen::Index i = 0; i < linear.size(); ++i) {
    const std::uint8_t v = linear(i) ? 1 : 0;
    if (v != value) {
      rle.counts.push_back(run);
      run = 0;
      value = v;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

std::string compress_counts(const std::vector<std::uint32_t>& counts) {
  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long long x = static_cast<long long>(counts[i]);
    if (i > 2) x -= static_cast<long long>(counts[i - 2]);
    bool more = true;
    while (more) {
      char c = static_cast<char>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

std::vector<std::uint32_t> decompress_counts(const std::string& s) {
  std::vector<std::uint32_t> counts;
  std::size_t k = 0;
  while (k < s.size()) {
    long long x = 0;
    int m = 0;
    bool more = true;
    while (more) {
      if (k >= s.size())
        throw BadCompressedString("truncated chunk sequence at byte " +
                                  std::to_string(k));
      const int c = static_cast<unsigned char>(s[k]) - 48;
      if (c < 0 || c > 63)
        throw BadCompressedString("character out of range at byte " +
                                  std::to_string(k));
      x |= static_cast<long long>(c & 0x1f) << (5 * m);
      more = (c & 0x20) != 0;
      ++k;
      ++m;
      if (!more && (c & 0x10)) x |= ~((1LL << (5 * m)) - 1);  // sign-extend
    }
    if (counts.size() > 2) x += static_cast<long long>(counts[counts.size() - 2]);
    if (x < 0 || x > 0xffffffffLL)
      throw BadCompressedString("count out of range: " + std::to_string(x));
    counts.push_back(static_cast<std::uint32_t>(x));
  }
  return counts;
}

}  // namespace maskmatte
