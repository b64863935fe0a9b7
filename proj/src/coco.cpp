#include "maskmatte/coco.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "maskmatte/errors.hpp"

namespace maskmatte {
namespace {

using nlohmann::json;

std::variant<Rle, std::vector<Polygon>> parse_segmentation(const json& seg) {
  if (seg.is_object()) {
    // RLE: {"size": [h, w], "counts": [..] | "string"}
    if (!seg.contains("size") || !seg["size"].is_array() || seg["size"].size() != 2)
      throw MalformedFile("rle segmentation without a [h, w] size");
    Rle rle;
    rle.height = seg["size"][0].get<int>();
    rle.width = seg["size"][1].get<int>();
    const auto& counts = seg.at("counts");
    if (counts.is_string()) {
      rle.counts = decompress_counts(counts.get<std::string>());
    } else if (counts.is_array()) {
      for (const auto& c : counts) {
        const long long v = c.get<long long>();
        if (v < 0) throw MalformedFile("negative rle count");
        rle.counts.push_back(static_cast<std::uint32_t>(v));
      }
    } else {
      throw MalformedFile("rle counts must be a string or an array");
    }
    // loaded annotations must be decodable
    std::uint64_t total = 0;
    for (std::uint32_t c : rle.counts) total += c;
    if (total != static_cast<std::uint64_t>(rle.height) * rle.width)
      throw MalformedFile("rle counts do not cover the grid");
    return rle;
  }
  if (seg.is_array()) {
    if (seg.empty()) throw MalformedFile("empty polygon segmentation");
    std::vector<Polygon> polys;
    for (const auto& flat : seg) {
      if (!flat.is_array() || flat.size() < 6 || flat.size() % 2 != 0)
        throw MalformedFile("polygon needs an even list of >= 6 coordinates");
      Polygon poly;
      for (std::size_t i = 0; i < flat.size(); i += 2)
        poly.vertices.emplace_back(flat[i].get<double>(), flat[i + 1].get<double>());
      polys.push_back(std::move(poly));
    }
    return polys;
  }
  throw MalformedFile("segmentation must be an object (rle) or array (polygons)");
}

int resolve_category(const CategoryTable& table, const std::string& name) {
  for (const auto& [id, n] : table.names)
    if (n == name) return id;
  return -1;
}

}  // namespace

AnnotationFile load_annotations(const std::filesystem::path& path,
                                const CategoryConfig& config) {
  std::ifstream in(path);
  if (!in) throw MalformedFile("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw MalformedFile("unparseable annotation document: " + std::string(e.what()));
  }

  AnnotationFile file;
  try {
    if (!doc.is_object() || !doc.contains("images") || !doc.contains("annotations") ||
        !doc.contains("categories"))
      throw MalformedFile("document needs images, annotations, categories sections");

    for (const auto& cat : doc["categories"]) {
      const int id = cat.at("id").get<int>();
      file.categories.names[id] = cat.at("name").get<std::string>();
    }
    for (const auto& img : doc["images"]) {
      ImageInfo info;
      info.id = img.at("id").get<long long>();
      info.width = img.at("width").get<int>();
      info.height = img.at("height").get<int>();
      info.file_name = img.value("file_name", std::string{});
      file.images.push_back(std::move(info));
    }
    std::unordered_set<long long> seen_ids;
    for (const auto& ann : doc["annotations"]) {
      InstanceAnnotation inst;
      inst.id = ann.at("id").get<long long>();
      inst.image_id = ann.at("image_id").get<long long>();
      inst.category_id = ann.at("category_id").get<int>();
      inst.iscrowd = ann.value("iscrowd", 0) != 0;
      inst.segmentation = parse_segmentation(ann.at("segmentation"));
      if (!file.categories.names.count(inst.category_id))
        throw UnknownCategory("annotation " + std::to_string(inst.id) +
                              " references undeclared category " +
                              std::to_string(inst.category_id));
      if (!seen_ids.insert(inst.id).second)
        throw MalformedFile("duplicate annotation id " + std::to_string(inst.id));
      file.annotations.push_back(std::move(inst));
    }
  } catch (const json::exception& e) {
    throw MalformedFile("bad annotation document: " + std::string(e.what()));
  }

  // role mapping: explicit ids win over names; ids absent from the table are
  // dropped so the table only ever names declared categories
  if (config.human_id) {
    if (file.categories.names.count(*config.human_id))
      file.categories.human_id = *config.human_id;
  } else {
    const int id = resolve_category(file.categories, config.human_name);
    if (id >= 0) file.categories.human_id = id;
  }
  if (!config.accessory_ids.empty()) {
    for (int id : config.accessory_ids)
      if (file.categories.names.count(id)) file.categories.accessory_ids.insert(id);
  } else {
    for (const auto& name : config.accessory_names) {
      const int id = resolve_category(file.categories, name);
      if (id >= 0) file.categories.accessory_ids.insert(id);
    }
  }
  if (file.categories.human_id)
    file.categories.accessory_ids.erase(*file.categories.human_id);

  std::sort(file.images.begin(), file.images.end(),
            [](const ImageInfo& a, const ImageInfo& b) { return a.id < b.id; });
  std::sort(file.annotations.begin(), file.annotations.end(),
            [](const InstanceAnnotation& a, const InstanceAnnotation& b) {
              return a.id < b.id;
            });
  return file;
}

Mask polygons_to_mask(const std::vector<Polygon>& polygons, int height, int width) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("polygons_to_mask: grid must be positive");
  Mask mask = Mask::Zero(height, width);
  for (const Polygon& poly : polygons) {
    const auto& v = poly.vertices;
    if (v.size() < 3)
      throw DegeneratePolygon("polygon with " + std::to_string(v.size()) +
                              " vertices");
    for (int r = 0; r < height; ++r) {
      const double py = r + 0.5;
      for (int c = 0; c < width; ++c) {
        if (mask(r, c)) continue;
        const double px = c + 0.5;
        bool inside = false;  // even-odd crossing count
        for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
          const auto& a = v[j];
          const auto& b = v[i];
          if ((a.y() > py) != (b.y() > py)) {
            const double x_cross =
                a.x() + (py - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
            if (px < x_cross) inside = !inside;
          }
        }
        if (inside) mask(r, c) = 1;
      }
    }
  }
  return mask;
}

Mask decode_segmentation(const InstanceAnnotation& annotation, int height, int width) {
  if (const Rle* rle = std::get_if<Rle>(&annotation.segmentation)) {
    if (rle->height != height || rle->width != width)
      throw DimensionMismatch("rle size does not match the image");
    return decode_rle(*rle);
  }
  return polygons_to_mask(std::get<std::vector<Polygon>>(annotation.segmentation),
                          height, width);
}

}  // namespace maskmatte
