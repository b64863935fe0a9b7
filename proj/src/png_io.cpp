#include "maskmatte/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "maskmatte/errors.hpp"

namespace maskmatte {
namespace {

struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

std::vector<std::uint8_t> read_buffer(const std::filesystem::path& path,
                                      png_image& image, png_uint_32 format) {
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw MalformedFile("cannot read png " + path.string() + ": " + image.message);
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw MalformedFile("cannot decode png " + path.string() + ": " + image.message);
  }
  return buffer;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(
      std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

Alpha read_png_gray(const std::filesystem::path& path) {
  png_image image;
  const auto buffer = read_buffer(path, image, PNG_FORMAT_GRAY);
  PngImageGuard guard{&image};
  Alpha out(image.height, image.width);
  for (png_uint_32 r = 0; r < image.height; ++r)
    for (png_uint_32 c = 0; c < image.width; ++c)
      out(r, c) = buffer[r * image.width + c] / 255.0;
  return out;
}

void write_png_gray(const std::filesystem::path& path, const Alpha& alpha) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(alpha.cols());
  image.height = static_cast<png_uint_32>(alpha.rows());
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(alpha.size());
  for (Eigen::Index r = 0; r < alpha.rows(); ++r)
    for (Eigen::Index c = 0; c < alpha.cols(); ++c)
      buffer[r * alpha.cols() + c] = to_byte(alpha(r, c));
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0,
                               nullptr))
    throw Error("cannot write png " + path.string() + ": " + image.message);
}

Planes read_png_planes(const std::filesystem::path& path) {
  png_image image;
  const auto buffer = read_buffer(path, image, PNG_FORMAT_RGB);
  PngImageGuard guard{&image};
  Planes planes(3, Alpha(image.height, image.width));
  for (png_uint_32 r = 0; r < image.height; ++r)
    for (png_uint_32 c = 0; c < image.width; ++c)
      for (int ch = 0; ch < 3; ++ch)
        planes[ch](r, c) = buffer[(r * image.width + c) * 3 + ch] / 255.0;
  return planes;
}

void write_png_rgb(const std::filesystem::path& path, const Planes& planes) {
  if (planes.size() != 3) throw std::invalid_argument("write_png_rgb needs 3 planes");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(planes[0].cols());
  image.height = static_cast<png_uint_32>(planes[0].rows());
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(planes[0].size() * 3);
  for (Eigen::Index r = 0; r < planes[0].rows(); ++r)
    for (Eigen::Index c = 0; c < planes[0].cols(); ++c)
      for (int ch = 0; ch < 3; ++ch)
        buffer[(r * planes[0].cols() + c) * 3 + ch] = to_byte(planes[ch](r, c));
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0,
                               nullptr))
    throw Error("cannot write png " + path.string() + ": " + image.message);
}

Trimap read_png_trimap(const std::filesystem::path& path) {
  png_image image;
  const auto buffer = read_buffer(path, image, PNG_FORMAT_GRAY);
  PngImageGuard guard{&image};
  Trimap trimap(image.height, image.width);
  for (png_uint_32 r = 0; r < image.height; ++r)
    for (png_uint_32 c = 0; c < image.width; ++c) {
      const std::uint8_t v = buffer[r * image.width + c];
      trimap.set(r, c,
                 v < 64    ? TriClass::Background
                 : v < 192 ? TriClass::Unknown
                           : TriClass::Foreground);
    }
  return trimap;
}

void write_png_trimap(const std::filesystem::path& path, const Trimap& trimap) {
  Alpha gray(trimap.rows(), trimap.cols());
  for (Eigen::Index r = 0; r < trimap.rows(); ++r)
    for (Eigen::Index c = 0; c < trimap.cols(); ++c) {
      switch (trimap.at(r, c)) {
        case TriClass::Background: gray(r, c) = 0.0; break;
        case TriClass::Unknown: gray(r, c) = 128.0 / 255.0; break;
        case TriClass::Foreground: gray(r, c) = 1.0; break;
      }
    }
  write_png_gray(path, gray);
}

std::pair<int, int> read_png_size(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw MalformedFile("cannot read png " + path.string() + ": " + image.message);
  const std::pair<int, int> size{static_cast<int>(image.height),
                                 static_cast<int>(image.width)};
  png_image_free(&image);
  return size;
}

}  // namespace maskmatte
