#include "maskmatte/pipeline.hpp"

#include <json.hpp>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>
#include <unordered_map>

#include "maskmatte/errors.hpp"
#include "maskmatte/png_io.hpp"
#include "maskmatte/resize.hpp"

namespace maskmatte {
namespace {

using nlohmann::json;

OverlapMode overlap_mode_from_string(const std::string& name) {
  if (name == "iou") return OverlapMode::Iou;
  if (name == "ioa") return OverlapMode::Ioa;
  throw ConfigError("unknown overlap mode: " + name);
}

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("unparseable config: " + std::string(e.what()));
  }

  PipelineConfig config;
  try {
    config.images_dir = doc.value("images_dir", std::string{});
    config.annotations_path = doc.value("annotations_path", std::string{});
    config.output_dir = doc.value("output_dir", std::string{});
    config.parallelism = doc.value("parallelism", 1);
    config.resize_target = doc.value("resize_target", 1024);

    if (doc.contains("categories")) {
      const auto& c = doc["categories"];
      config.categories.human_name = c.value("human", config.categories.human_name);
      if (c.contains("accessories"))
        config.categories.accessory_names =
            c["accessories"].get<std::vector<std::string>>();
      if (c.contains("human_id")) config.categories.human_id = c["human_id"].get<int>();
      if (c.contains("accessory_ids"))
        config.categories.accessory_ids = c["accessory_ids"].get<std::vector<int>>();
    }
    if (doc.contains("fusion")) {
      const auto& f = doc["fusion"];
      config.fusion.tau = f.value("tau", config.fusion.tau);
      config.fusion.filter_dilate_k =
          f.value("filter_dilate_k", config.fusion.filter_dilate_k);
      config.fusion.skip_crowd = f.value("skip_crowd", config.fusion.skip_crowd);
      if (f.contains("overlap_mode"))
        config.fusion.overlap_mode =
            overlap_mode_from_string(f["overlap_mode"].get<std::string>());
    }
    if (doc.contains("trimap")) {
      const auto& t = doc["trimap"];
      config.trimap.pre_dilate_k = t.value("pre_dilate_k", config.trimap.pre_dilate_k);
      config.trimap.eta = t.value("eta", config.trimap.eta);
      config.trimap.min_omega = t.value("min_omega", config.trimap.min_omega);
    }
    if (doc.contains("solver")) {
      const auto& s = doc["solver"];
      const std::string type = s.value("type", std::string{"builtin"});
      if (type == "builtin") {
        SolverConfig solver;
        solver.window_radius = s.value("window_radius", solver.window_radius);
        solver.epsilon_reg = s.value("epsilon_reg", solver.epsilon_reg);
        solver.constraint_weight =
            s.value("constraint_weight", solver.constraint_weight);
        solver.cg_tolerance = s.value("cg_tolerance", solver.cg_tolerance);
        solver.max_iterations = s.value("max_iterations", solver.max_iterations);
        config.solver = solver;
      } else if (type == "external") {
        ExternalBackendConfig backend;
        backend.command_template = s.at("command").get<std::string>();
        backend.timeout_seconds = s.value("timeout", backend.timeout_seconds);
        config.solver = backend;
      } else {
        throw ConfigError("unknown solver type: " + type);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad config: " + std::string(e.what()));
  }
  if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (!(config.fusion.tau > 0.0 && config.fusion.tau <= 1.0))
    throw ConfigError("fusion.tau must be in (0, 1]");
  if (config.fusion.filter_dilate_k < 1)
    throw ConfigError("fusion.filter_dilate_k must be >= 1");
  if (config.trimap.eta <= 0.0) throw ConfigError("trimap.eta must be positive");
  if (config.trimap.pre_dilate_k < 1)
    throw ConfigError("trimap.pre_dilate_k must be >= 1");
  if (const auto* solver = std::get_if<SolverConfig>(&config.solver)) {
    if (solver->window_radius < 1 || solver->epsilon_reg <= 0.0 ||
        solver->constraint_weight <= 0.0)
      throw ConfigError("solver parameters out of range");
  }
  return config;
}

Rect derive_bbox(const Alpha& alpha, double thresh) {
  const Mask above = (alpha > thresh).cast<std::uint8_t>();
  if (!(above != 0).any()) throw NoForeground("alpha has no pixel above threshold");
  return min_bounding_rect(above);
}

std::string record_to_jsonl(const DatasetRecord& record) {
  json row;
  row["image_id"] = record.image_id;
  row["instance_id"] = record.instance_id;
  row["alpha_path"] = record.alpha_path;
  row["bbox_prompt"] = {record.bbox_prompt.x0, record.bbox_prompt.y0,
                        record.bbox_prompt.x1, record.bbox_prompt.y1};
  row["merged_ids"] = record.merged_ids;
  row["merged_categories"] = record.merged_categories;
  row["skipped"] = record.skipped;
  row["skip_reason"] = record.skip_reason;
  row["alpha_area"] = record.alpha_area;
  return row.dump();
}

DatasetRecord record_from_jsonl(const std::string& line) {
  json row;
  try {
    row = json::parse(line);
  } catch (const json::exception& e) {
    throw MalformedIndex("unparseable index row: " + std::string(e.what()));
  }
  DatasetRecord record;
  try {
    record.image_id = row.at("image_id").get<long long>();
    record.instance_id = row.at("instance_id").get<long long>();
    record.alpha_path = row.value("alpha_path", std::string{});
    if (row.contains("bbox_prompt")) {
      const auto& b = row["bbox_prompt"];
      record.bbox_prompt = Rect{b.at(0).get<int>(), b.at(1).get<int>(),
                                b.at(2).get<int>(), b.at(3).get<int>()};
    }
    record.merged_ids = row.value("merged_ids", std::vector<long long>{});
    record.merged_categories =
        row.value("merged_categories", std::vector<std::string>{});
    record.skipped = row.value("skipped", false);
    record.skip_reason = row.value("skip_reason", std::string{});
    record.alpha_area = row.value("alpha_area", 0.0);
  } catch (const json::exception& e) {
    throw MalformedIndex("bad index row: " + std::string(e.what()));
  }
  return record;
}

namespace {

// alpha as it will read back from the 8-bit file
Alpha quantize8(const Alpha& alpha) {
  Alpha q(alpha.rows(), alpha.cols());
  for (Eigen::Index r = 0; r < alpha.rows(); ++r)
    for (Eigen::Index c = 0; c < alpha.cols(); ++c)
      q(r, c) = std::clamp(std::lround(alpha(r, c) * 255.0), 0L, 255L) / 255.0;
  return q;
}

struct ImageOutput {
  std::vector<DatasetRecord> records;
  int humans = 0;
  bool zero_humans = false;
  std::vector<std::string> candidate_failures;
};

DatasetRecord skipped_record(long long image_id, long long instance_id,
                             std::string reason) {
  DatasetRecord record;
  record.image_id = image_id;
  record.instance_id = instance_id;
  record.skipped = true;
  record.skip_reason = std::move(reason);
  return record;
}

struct BuildContext {
  const PipelineConfig* config;
  const AnnotationFile* file;
  FusionConfig fusion;
  std::filesystem::path alphas_dir;
};

ImageOutput process_image(const BuildContext& ctx, const ImageInfo& info,
                          const std::vector<const InstanceAnnotation*>& anns) {
  ImageOutput out;
  const auto& table = ctx.file->categories;
  const int human_cat = table.human_id.value_or(-1);

  std::vector<std::pair<long long, Mask>> humans;
  std::vector<FusionCandidate> others;
  std::unordered_map<long long, int> candidate_category;
  for (const InstanceAnnotation* ann : anns) {
    if (ann->category_id == human_cat) {
      ++out.humans;
      if (ctx.fusion.skip_crowd && ann->iscrowd) {
        out.records.push_back(skipped_record(info.id, ann->id, "crowd"));
        continue;
      }
      try {
        Mask mask = decode_segmentation(*ann, info.height, info.width);
        if (!(mask != 0).any()) {
          out.records.push_back(skipped_record(info.id, ann->id, "empty_mask"));
          continue;
        }
        humans.emplace_back(ann->id, std::move(mask));
      } catch (const Error&) {
        out.records.push_back(skipped_record(info.id, ann->id, "decode_failed"));
      }
    } else {
      try {
        FusionCandidate cand;
        cand.id = ann->id;
        cand.category_id = ann->category_id;
        cand.iscrowd = ann->iscrowd;
        cand.mask = decode_segmentation(*ann, info.height, info.width);
        candidate_category[ann->id] = ann->category_id;
        others.push_back(std::move(cand));
      } catch (const Error&) {
        out.candidate_failures.push_back(std::to_string(ann->id));
      }
    }
  }

  if (humans.empty()) {
    out.zero_humans = true;
    return out;
  }

  const std::filesystem::path image_path = ctx.config->images_dir / info.file_name;
  Planes planes;
  std::string image_error;
  try {
    planes = read_png_planes(image_path);
    if (planes[0].rows() != info.height || planes[0].cols() != info.width)
      image_error = "image_size_mismatch";
  } catch (const Error&) {
    image_error = "image_load_failed";
  }
  if (!image_error.empty()) {
    for (const auto& [id, mask] : humans)
      out.records.push_back(skipped_record(info.id, id, image_error));
    std::sort(out.records.begin(), out.records.end(),
              [](const DatasetRecord& a, const DatasetRecord& b) {
                return a.instance_id < b.instance_id;
              });
    return out;
  }

  const auto fusions = assign_and_fuse_image(humans, others, ctx.fusion);
  for (const FusionResult& fusion : fusions) {
    const Trimap trimap = make_trimap(fusion.fused_mask, ctx.config->trimap);
    if (trimap.count(TriClass::Foreground) == 0 ||
        (trimap.count(TriClass::Unknown) > 0 &&
         trimap.count(TriClass::Background) == 0)) {
      out.records.push_back(
          skipped_record(info.id, fusion.human_id, "degenerate_trimap"));
      continue;
    }

    Alpha alpha;
    try {
      if (const auto* solver = std::get_if<SolverConfig>(&ctx.config->solver)) {
        alpha = solve_alpha(planes, trimap, *solver);
      } else {
        const auto& backend = std::get<ExternalBackendConfig>(ctx.config->solver);
        const std::filesystem::path trimap_path =
            std::filesystem::temp_directory_path() /
            ("maskmatte-trimap-" + std::to_string(info.id) + "-" +
             std::to_string(fusion.human_id) + "-" + std::to_string(::getpid()) +
             ".png");
        write_png_trimap(trimap_path, trimap);
        try {
          alpha = run_external_backend(image_path, trimap_path, backend);
        } catch (...) {
          std::filesystem::remove(trimap_path);
          throw;
        }
        std::filesystem::remove(trimap_path);
      }
    } catch (const Error&) {
      out.records.push_back(
          skipped_record(info.id, fusion.human_id, "solver_failed"));
      continue;
    }

    const Alpha quantized = quantize8(alpha);
    DatasetRecord record;
    record.image_id = info.id;
    record.instance_id = fusion.human_id;
    try {
      record.bbox_prompt = derive_bbox(quantized);
    } catch (const NoForeground&) {
      out.records.push_back(
          skipped_record(info.id, fusion.human_id, "no_foreground"));
      continue;
    }
    const std::string name = std::to_string(info.id) + "_" +
                             std::to_string(fusion.human_id) + ".png";
    write_png_gray(ctx.alphas_dir / name, quantized);
    record.alpha_path = "alphas/" + name;
    record.merged_ids = fusion.merged_ids;
    for (long long id : fusion.merged_ids)
      record.merged_categories.push_back(
          table.name_of(candidate_category.at(id)));
    record.alpha_area = quantized.sum();
    out.records.push_back(std::move(record));
  }

  std::sort(out.records.begin(), out.records.end(),
            [](const DatasetRecord& a, const DatasetRecord& b) {
              return a.instance_id < b.instance_id;
            });
  return out;
}

}  // namespace

BuildResult build_dataset(const PipelineConfig& config) {
  if (!std::filesystem::exists(config.annotations_path))
    throw ConfigError("annotations_path does not exist: " +
                      config.annotations_path.string());
  if (!std::filesystem::is_directory(config.images_dir))
    throw ConfigError("images_dir is not a directory: " +
                      config.images_dir.string());
  if (config.output_dir.empty()) throw ConfigError("output_dir is not set");
  std::filesystem::create_directories(config.output_dir / "alphas");

  const AnnotationFile file =
      load_annotations(config.annotations_path, config.categories);

  BuildContext ctx;
  ctx.config = &config;
  ctx.file = &file;
  ctx.fusion = config.fusion;
  if (ctx.fusion.accessory_ids.empty())
    ctx.fusion.accessory_ids = file.categories.accessory_ids;
  ctx.alphas_dir = config.output_dir / "alphas";

  std::unordered_map<long long, std::vector<const InstanceAnnotation*>> by_image;
  for (const InstanceAnnotation& ann : file.annotations)
    by_image[ann.image_id].push_back(&ann);

  std::vector<ImageOutput> outputs(file.images.size());
  std::vector<std::exception_ptr> failures(file.images.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    static const std::vector<const InstanceAnnotation*> kNone;
    for (std::size_t i = next.fetch_add(1); i < file.images.size();
         i = next.fetch_add(1)) {
      const auto it = by_image.find(file.images[i].id);
      try {
        outputs[i] = process_image(ctx, file.images[i],
                                   it == by_image.end() ? kNone : it->second);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(std::max(1, config.parallelism),
                                    static_cast<int>(file.images.size()) + 1);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  BuildResult result;
  result.summary.images = static_cast<int>(file.images.size());
  std::ofstream index(config.output_dir / "index.jsonl",
                      std::ios::binary | std::ios::trunc);
  if (!index) throw ConfigError("cannot write index in " + config.output_dir.string());
  for (const ImageOutput& out : outputs) {
    result.summary.humans += out.humans;
    if (out.zero_humans) ++result.summary.zero_human_images;
    result.summary.skip_reasons["candidate_decode_failed"] +=
        static_cast<int>(out.candidate_failures.size());
    for (const DatasetRecord& record : out.records) {
      if (record.skipped) {
        ++result.summary.skipped_records;
        ++result.summary.skip_reasons[record.skip_reason];
      } else {
        ++result.summary.active_records;
      }
      index << record_to_jsonl(record) << '\n';
      result.records.push_back(record);
    }
  }
  if (result.summary.skip_reasons["candidate_decode_failed"] == 0)
    result.summary.skip_reasons.erase("candidate_decode_failed");
  return result;
}

MetricReport evaluate(const std::filesystem::path& pred_dir,
                      const std::filesystem::path& gt_dir, int resize_target) {
  if (!std::filesystem::is_directory(pred_dir))
    throw ConfigError("prediction directory missing: " + pred_dir.string());
  if (!std::filesystem::is_directory(gt_dir))
    throw ConfigError("ground-truth directory missing: " + gt_dir.string());

  auto list_pngs = [](const std::filesystem::path& dir) {
    std::set<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".png")
        names.insert(entry.path().filename().string());
    return names;
  };
  const std::set<std::string> preds = list_pngs(pred_dir);
  const std::set<std::string> gts = list_pngs(gt_dir);

  std::vector<std::string> unmatched;
  for (const auto& name : preds)
    if (!gts.count(name)) unmatched.push_back("pred-only: " + name);
  for (const auto& name : gts)
    if (!preds.count(name)) unmatched.push_back("gt-only: " + name);

  std::vector<ImageMetricRow> rows;
  std::vector<std::string> errors;
  for (const auto& name : preds) {
    if (!gts.count(name)) continue;
    try {
      const Alpha pred = proportional_resize(read_png_gray(pred_dir / name),
                                             resize_target);
      const Alpha gt = proportional_resize(read_png_gray(gt_dir / name),
                                           resize_target);
      if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
        errors.push_back(name + ": sizes disagree after resize");
        continue;
      }
      ImageMetricRow row;
      row.name = name;
      const PixelMetrics pm = pixel_metrics(pred, gt);
      row.sad = pm.sad;
      row.mse = pm.mse;
      row.mad = pm.mad;
      row.grad = grad_metric(pred, gt);
      row.conn = conn_metric(pred, gt);
      rows.push_back(std::move(row));
    } catch (const Error& e) {
      errors.push_back(name + ": " + e.what());
    }
  }
  if (rows.empty() && errors.empty())
    throw EmptyInput("no prediction/ground-truth pairs");
  return make_report(std::move(rows), std::move(unmatched), std::move(errors));
}

namespace {

std::map<long long, std::vector<DatasetRecord>> load_index(
    const std::filesystem::path& index_path) {
  std::ifstream in(index_path);
  if (!in) throw MalformedIndex("cannot open index " + index_path.string());
  std::map<long long, std::vector<DatasetRecord>> by_image;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    DatasetRecord record = record_from_jsonl(line);
    if (record.skipped) continue;
    by_image[record.image_id].push_back(std::move(record));
  }
  return by_image;
}

InstanceSet load_instances(const std::filesystem::path& base,
                           const std::vector<DatasetRecord>& records) {
  InstanceSet set;
  for (const DatasetRecord& record : records) {
    const std::filesystem::path path = base / record.alpha_path;
    try {
      set.emplace_back(record.instance_id, read_png_gray(path));
    } catch (const Error&) {
      throw MalformedIndex("missing alpha file " + path.string());
    }
  }
  return set;
}

}  // namespace

ImqReport evaluate_instances(const std::filesystem::path& pred_index,
                             const std::filesystem::path& gt_index,
                             InstanceMetric metric) {
  const auto preds = load_index(pred_index);
  const auto gts = load_index(gt_index);
  if (gts.empty()) throw EmptyInput("ground-truth index has no active records");

  const std::filesystem::path pred_base = pred_index.parent_path();
  const std::filesystem::path gt_base = gt_index.parent_path();

  ImqReport report;
  report.metric = metric;
  double sum = 0;
  for (const auto& [image_id, gt_records] : gts) {
    double score = 0;
    const auto it = preds.find(image_id);
    if (it != preds.end()) {
      const InstanceSet gt_set = load_instances(gt_base, gt_records);
      const InstanceSet pred_set = load_instances(pred_base, it->second);
      try {
        score = imq(pred_set, gt_set, metric);
      } catch (const Error&) {
        score = 0;  // incomparable sets count as a total miss
      }
    }
    report.per_image[image_id] = score;
    sum += score;
  }
  report.aggregate = sum / static_cast<double>(gts.size());
  return report;
}

std::string imq_report_to_json(const ImqReport& report) {
  json doc;
  doc["metric"] = to_string(report.metric);
  doc["aggregate"] = report.aggregate;
  doc["images"] = json::object();
  for (const auto& [id, score] : report.per_image)
    doc["images"][std::to_string(id)] = score;
  return doc.dump(2);
}

IndexStats stats(const std::filesystem::path& index_path) {
  std::ifstream in(index_path);
  if (!in) throw MalformedIndex("cannot open index " + index_path.string());
  IndexStats s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const DatasetRecord record = record_from_jsonl(line);
    ++s.total;
    if (record.skipped) {
      ++s.skip_reasons[record.skip_reason];
      continue;
    }
    ++s.active;
    for (const std::string& cat : record.merged_categories)
      ++s.merged_by_category[cat];
    const char* bin = record.alpha_area < 1e2   ? "[0,1e2)"
                      : record.alpha_area < 1e3 ? "[1e2,1e3)"
                      : record.alpha_area < 1e4 ? "[1e3,1e4)"
                      : record.alpha_area < 1e5 ? "[1e4,1e5)"
                                                : "[1e5,inf)";
    ++s.alpha_area_histogram[bin];
  }
  return s;
}

std::string stats_to_json(const IndexStats& s) {
  json doc;
  doc["total"] = s.total;
  doc["active"] = s.active;
  doc["skip_reasons"] = s.skip_reasons;
  doc["merged_by_category"] = s.merged_by_category;
  doc["alpha_area_histogram"] = s.alpha_area_histogram;
  return doc.dump(2);
}

}  // namespace maskmatte
