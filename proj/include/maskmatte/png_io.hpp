#pragma once

#include <filesystem>
#include <utility>

#include "maskmatte/types.hpp"

namespace maskmatte {

/// 8-bit grayscale, value 255 == alpha 1.0.
Alpha read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const Alpha& alpha);

/// RGB (or grayscale, returned as one plane), values scaled to [0,1].
Planes read_png_planes(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const Planes& planes);

/// Trimaps persist as {0, 128, 255}; on read, values snap to the nearest of
/// the three levels.
Trimap read_png_trimap(const std::filesystem::path& path);
void write_png_trimap(const std::filesystem::path& path, const Trimap& trimap);

/// (height, width) without decoding the pixels.
std::pair<int, int> read_png_size(const std::filesystem::path& path);

}  // namespace maskmatte
