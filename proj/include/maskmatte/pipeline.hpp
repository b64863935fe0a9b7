#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "maskmatte/coco.hpp"
#include "maskmatte/fusion.hpp"
#include "maskmatte/metrics.hpp"
#include "maskmatte/solver.hpp"
#include "maskmatte/trimap.hpp"

namespace maskmatte {

struct PipelineConfig {
  std::filesystem::path images_dir;
  std::filesystem::path annotations_path;
  std::filesystem::path output_dir;
  CategoryConfig categories;
  FusionConfig fusion;   // accessory_ids left empty = take them from the category table
  TrimapConfig trimap;
  std::variant<SolverConfig, ExternalBackendConfig> solver = SolverConfig{};
  int parallelism = 1;
  int resize_target = 1024;
};

/// Parses a JSON document mirroring PipelineConfig. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);

struct DatasetRecord {
  long long image_id = 0;
  long long instance_id = 0;
  std::string alpha_path;  // relative to the index file, empty when skipped
  Rect bbox_prompt;
  std::vector<long long> merged_ids;
  std::vector<std::string> merged_categories;
  bool skipped = false;
  std::string skip_reason;
  double alpha_area = 0;   // sum of alpha over the matte
};

struct BuildSummary {
  int images = 0;
  int humans = 0;            // human instances encountered
  int active_records = 0;    // mattes actually produced
  int skipped_records = 0;
  int zero_human_images = 0;
  std::map<std::string, int> skip_reasons;
};

struct BuildResult {
  std::vector<DatasetRecord> records;
  BuildSummary summary;
};

/// Runs the full dataset construction: per image, decode instances, fuse
/// accessories into each human, build the trimap, solve the matte, write the
/// alpha PNG, and append a DatasetRecord to output_dir/index.jsonl.
/// Per-instance failures become skipped records; only configuration and
/// annotation-file problems throw. Deterministic and idempotent for a fixed
/// config and input.
BuildResult build_dataset(const PipelineConfig& config);

/// Bounding rectangle of {alpha > thresh}. Throws NoForeground.
Rect derive_bbox(const Alpha& alpha, double thresh = 1.0 / 255.0);

/// Pairs same-named PNGs from the two directories, resizes each pair
/// proportionally to resize_target, and reports the five metrics per image
/// plus aggregate means. Throws EmptyInput when no pair exists.
MetricReport evaluate(const std::filesystem::path& pred_dir,
                      const std::filesystem::path& gt_dir, int resize_target);

struct ImqReport {
  std::map<long long, double> per_image;
  double aggregate = 0;
  InstanceMetric metric = InstanceMetric::Mad;
};

/// Scores prediction instances against ground-truth instances, both given as
/// JSON-Lines indexes of DatasetRecord rows (alpha paths resolved relative to
/// each index file). Ground-truth images missing from the predictions score
/// 0. Throws EmptyInput / MalformedIndex.
ImqReport evaluate_instances(const std::filesystem::path& pred_index,
                             const std::filesystem::path& gt_index,
                             InstanceMetric metric);

std::string imq_report_to_json(const ImqReport& report);

struct IndexStats {
  int total = 0;
  int active = 0;
  std::map<std::string, int> skip_reasons;
  std::map<std::string, int> merged_by_category;
  std::map<std::string, int> alpha_area_histogram;  // decade bins
};

IndexStats stats(const std::filesystem::path& index_path);
std::string stats_to_json(const IndexStats& s);

// index row (de)serialization, shared by build/evaluate_instances/stats
std::string record_to_jsonl(const DatasetRecord& record);
DatasetRecord record_from_jsonl(const std::string& line);

}  // namespace maskmatte
