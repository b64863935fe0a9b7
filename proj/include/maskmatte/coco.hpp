#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "maskmatte/rle.hpp"
#include "maskmatte/types.hpp"

namespace maskmatte {

struct Polygon {
  std::vector<Eigen::Vector2d> vertices;  // (x, y) sub-pixel coordinates
};

struct InstanceAnnotation {
  long long id = 0;
  long long image_id = 0;
  int category_id = 0;
  std::variant<Rle, std::vector<Polygon>> segmentation;
  bool iscrowd = false;
};

struct ImageInfo {
  long long id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;
};

struct CategoryTable {
  std::map<int, std::string> names;
  std::optional<int> human_id;
  std::set<int> accessory_ids;

  std::string name_of(int id) const {
    auto it = names.find(id);
    return it == names.end() ? std::string("?") : it->second;
  }
};

/// How category ids map onto the human / accessory roles. Names are resolved
/// against the file's category table; explicit ids take precedence.
struct CategoryConfig {
  std::string human_name = "person";
  std::vector<std::string> accessory_names = {
      "backpack",  "umbrella",  "handbag",       "tie",
      "suitcase",  "bottle",    "cup",           "baseball glove",
      "sports ball", "skis",    "snowboard",     "surfboard",
      "tennis racket", "cell phone", "book"};
  std::optional<int> human_id;
  std::vector<int> accessory_ids;
};

struct AnnotationFile {
  std::vector<ImageInfo> images;
  std::vector<InstanceAnnotation> annotations;
  CategoryTable categories;
};

/// Parses a COCO-style document (images / annotations / categories arrays).
/// Throws MalformedFile on structural problems and UnknownCategory when an
/// annotation references a category id missing from the table.
AnnotationFile load_annotations(const std::filesystem::path& path,
                                const CategoryConfig& config = {});

/// Pixel-center even-odd rasterization: a pixel (r, c) is set iff the point
/// (c + 0.5, r + 0.5) lies inside any polygon. Throws DegeneratePolygon for
/// polygons with fewer than 3 vertices.
Mask polygons_to_mask(const std::vector<Polygon>& polygons, int height, int width);

/// Decodes either segmentation kind to a height x width mask.
Mask decode_segmentation(const InstanceAnnotation& annotation, int height, int width);

}  // namespace maskmatte
