#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace maskmatte {

/// Binary mask with values in {0,1}, indexed (row, col).
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-pixel opacity (or any real-valued grid) in [0,1], indexed (row, col).
using Alpha = Eigen::ArrayXXd;

/// Image as 1 (gray) or 3 (rgb) planes of equal size, values in [0,1].
using Planes = std::vector<Alpha>;

enum class TriClass : std::uint8_t { Background = 0, Unknown = 1, Foreground = 2 };

/// Three-way pixel partition. Stored as class labels; values() gives the
/// conventional {0, 0.5, 1} encoding.
struct Trimap {
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> labels;

  Trimap() = default;
  Trimap(Eigen::Index rows, Eigen::Index cols)
      : labels(Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Constant(
            rows, cols, static_cast<std::uint8_t>(TriClass::Unknown))) {}

  Eigen::Index rows() const { return labels.rows(); }
  Eigen::Index cols() const { return labels.cols(); }

  TriClass at(Eigen::Index r, Eigen::Index c) const {
    return static_cast<TriClass>(labels(r, c));
  }
  void set(Eigen::Index r, Eigen::Index c, TriClass t) {
    labels(r, c) = static_cast<std::uint8_t>(t);
  }

  Mask mask_of(TriClass t) const {
    return (labels == static_cast<std::uint8_t>(t)).cast<std::uint8_t>();
  }
  Eigen::Index count(TriClass t) const {
    return (labels == static_cast<std::uint8_t>(t)).count();
  }

  /// {BG, UNK, FG} -> {0, 0.5, 1}.
  Alpha values() const { return labels.cast<double>() * 0.5; }
};

/// Axis-aligned pixel rectangle, half-open: x in [x0, x1), y in [y0, y1).
/// x runs along columns, y along rows.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  bool empty() const { return x0 >= x1 || y0 >= y1; }

  bool operator==(const Rect&) const = default;
};

inline Rect intersect(const Rect& a, const Rect& b) {
  Rect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
         std::min(a.y1, b.y1)};
  if (r.empty()) return Rect{};
  return r;
}

}  // namespace maskmatte
