#pragma once

#include <string>
#include <utility>
#include <vector>

#include "maskmatte/types.hpp"

namespace maskmatte {

struct PixelMetrics {
  double sad = 0;  // sum |pred - gt| / 1000
  double mse = 0;  // mean (pred - gt)^2
  double mad = 0;  // mean |pred - gt|
};

PixelMetrics pixel_metrics(const Alpha& pred, const Alpha& gt);

struct GradConfig {
  double sigma = 1.4;  // Gaussian derivative scale; kernel half-width ceil(3*sigma)
};

/// Sum of squared differences of Gaussian-derivative gradient magnitudes,
/// divided by 1000.
double grad_metric(const Alpha& pred, const Alpha& gt, const GradConfig& config = {});

struct ConnConfig {
  double theta_step = 0.1;  // thresholds theta_step, 2*theta_step, ... < 1
  double delta = 0.15;      // connectivity-degree deadzone
};

/// Connectivity-degree error: for each threshold the shared region is the
/// largest 4-connected component of {pred >= theta and gt >= theta}; per
/// pixel l is the largest theta whose region contains it (0 if none),
/// d = alpha - l is zeroed below delta, phi = 1 - d, and the score is
/// sum |phi_pred - phi_gt| / 1000.
double conn_metric(const Alpha& pred, const Alpha& gt, const ConnConfig& config = {});

enum class InstanceMetric { Mad, Mse, Grad, Conn };

InstanceMetric instance_metric_from_string(const std::string& name);
const char* to_string(InstanceMetric metric);

using InstanceSet = std::vector<std::pair<long long, Alpha>>;

/// Instance matting quality in [0, 100]: mattes are binarized at 0.5 and
/// greedily matched by descending mask IoU (a pair matches iff IoU > 0.5);
/// each matched pair contributes q = 1 - min(1, e) with e the per-pair error
/// normalized to [0,1] (mad/mse as-is, grad/conn divided by pixels/1000);
/// IMQ = 100 * sum q / (n_gt + n_false_positive).
double imq(const InstanceSet& preds, const InstanceSet& gts, InstanceMetric metric);

struct ImageMetricRow {
  std::string name;
  double sad = 0, mse = 0, mad = 0, grad = 0, conn = 0;
};

struct MetricReport {
  std::vector<ImageMetricRow> per_image;
  ImageMetricRow aggregate;                // arithmetic means, name = "mean"
  std::vector<std::string> unmatched;      // files present on only one side
  std::vector<std::string> errors;         // per-pair failures, skipped from means
};

MetricReport make_report(std::vector<ImageMetricRow> rows,
                         std::vector<std::string> unmatched = {},
                         std::vector<std::string> errors = {});

std::string report_to_json(const MetricReport& report);
std::string report_to_table(const MetricReport& report);

}  // namespace maskmatte
