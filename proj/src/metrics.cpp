#include "maskmatte/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <sstream>
#include <tuple>
#include <vector>

#include "maskmatte/errors.hpp"

namespace maskmatte {
namespace {

void check_same_size(const Alpha& a, const Alpha& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch(std::string(what) + ": mattes differ in size");
}

}  // namespace

PixelMetrics pixel_metrics(const Alpha& pred, const Alpha& gt) {
  check_same_size(pred, gt, "pixel_metrics");
  const Alpha diff = pred - gt;
  PixelMetrics m;
  m.sad = diff.abs().sum() / 1000.0;
  m.mse = diff.square().mean();
  m.mad = diff.abs().mean();
  return m;
}

namespace {

struct GaussKernels {
  std::vector<double> smooth;  // normalized Gaussian, sum 1
  std::vector<double> deriv;   // analytic derivative of the normalized Gaussian
  int half;
};

GaussKernels gauss_derivative_kernels(double sigma) {
  GaussKernels k;
  k.half = static_cast<int>(std::ceil(3.0 * sigma));
  double norm = 0;
  for (int t = -k.half; t <= k.half; ++t)
    norm += std::exp(-t * t / (2.0 * sigma * sigma));
  for (int t = -k.half; t <= k.half; ++t) {
    const double g = std::exp(-t * t / (2.0 * sigma * sigma)) / norm;
    k.smooth.push_back(g);
    k.deriv.push_back(-t / (sigma * sigma) * g);
  }
  return k;
}

// separable convolution, replicate boundary; kx along columns, ky along rows
Alpha sep_conv(const Alpha& a, const std::vector<double>& kx,
               const std::vector<double>& ky, int half) {
  const Eigen::Index rows = a.rows(), cols = a.cols();
  Alpha tmp(rows, cols), out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0;
      for (int t = -half; t <= half; ++t)
        acc += kx[t + half] * a(r, std::clamp<Eigen::Index>(c + t, 0, cols - 1));
      tmp(r, c) = acc;
    }
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0;
      for (int t = -half; t <= half; ++t)
        acc += ky[t + half] * tmp(std::clamp<Eigen::Index>(r + t, 0, rows - 1), c);
      out(r, c) = acc;
    }
  return out;
}

Alpha gradient_magnitude(const Alpha& a, const GaussKernels& k) {
  const Alpha gx = sep_conv(a, k.deriv, k.smooth, k.half);
  const Alpha gy = sep_conv(a, k.smooth, k.deriv, k.half);
  return (gx.square() + gy.square()).sqrt();
}

}  // namespace

double grad_metric(const Alpha& pred, const Alpha& gt, const GradConfig& config) {
  check_same_size(pred, gt, "grad_metric");
  const GaussKernels k = gauss_derivative_kernels(config.sigma);
  const Alpha qp = gradient_magnitude(pred, k);
  const Alpha qg = gradient_magnitude(gt, k);
  return (qp - qg).square().sum() / 1000.0;
}

namespace {

// Largest 4-connected component of `bin`; ties go to the component discovered
// first in row-major order.
Mask largest_component(const Mask& bin) {
  const Eigen::Index rows = bin.rows(), cols = bin.cols();
  Eigen::ArrayXXi label = Eigen::ArrayXXi::Constant(rows, cols, -1);
  int next = 0;
  Eigen::Index best_size = 0;
  int best_label = -1;
  std::deque<std::pair<Eigen::Index, Eigen::Index>> queue;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!bin(r, c) || label(r, c) >= 0) continue;
      const int id = next++;
      Eigen::Index size = 0;
      label(r, c) = id;
      queue.emplace_back(r, c);
      while (!queue.empty()) {
        const auto [qr, qc] = queue.front();
        queue.pop_front();
        ++size;
        const Eigen::Index nr[4] = {qr - 1, qr + 1, qr, qr};
        const Eigen::Index nc[4] = {qc, qc, qc - 1, qc + 1};
        for (int d = 0; d < 4; ++d) {
          if (nr[d] < 0 || nr[d] >= rows || nc[d] < 0 || nc[d] >= cols) continue;
          if (!bin(nr[d], nc[d]) || label(nr[d], nc[d]) >= 0) continue;
          label(nr[d], nc[d]) = id;
          queue.emplace_back(nr[d], nc[d]);
        }
      }
      if (size > best_size) {
        best_size = size;
        best_label = id;
      }
    }
  if (best_label < 0) return Mask::Zero(rows, cols);
  return (label == best_label).cast<std::uint8_t>();
}

}  // namespace

double conn_metric(const Alpha& pred, const Alpha& gt, const ConnConfig& config) {
  check_same_size(pred, gt, "conn_metric");
  const Eigen::Index rows = pred.rows(), cols = pred.cols();

  Alpha l_map = Alpha::Zero(rows, cols);
  for (int i = 1; config.theta_step * i < 1.0 - 1e-12; ++i) {
    const double theta = config.theta_step * i;
    const Mask bin = ((pred >= theta) && (gt >= theta)).cast<std::uint8_t>();
    if (!(bin != 0).any()) continue;
    const Mask omega = largest_component(bin);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        if (omega(r, c)) l_map(r, c) = theta;  // ascending thetas overwrite
  }

  double sum = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double dp = pred(r, c) - l_map(r, c);
      const double dg = gt(r, c) - l_map(r, c);
      const double phi_p = 1.0 - (dp >= config.delta ? dp : 0.0);
      const double phi_g = 1.0 - (dg >= config.delta ? dg : 0.0);
      sum += std::abs(phi_p - phi_g);
    }
  return sum / 1000.0;
}

InstanceMetric instance_metric_from_string(const std::string& name) {
  if (name == "mad") return InstanceMetric::Mad;
  if (name == "mse") return InstanceMetric::Mse;
  if (name == "grad") return InstanceMetric::Grad;
  if (name == "conn") return InstanceMetric::Conn;
  throw ConfigError("unknown instance metric: " + name);
}

const char* to_string(InstanceMetric metric) {
  switch (metric) {
    case InstanceMetric::Mad: return "mad";
    case InstanceMetric::Mse: return "mse";
    case InstanceMetric::Grad: return "grad";
    case InstanceMetric::Conn: return "conn";
  }
  return "?";
}

namespace {

double binary_iou(const Mask& a, const Mask& b) {
  const Eigen::Index inter = ((a != 0) && (b != 0)).count();
  const Eigen::Index uni = ((a != 0) || (b != 0)).count();
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double pair_error(const Alpha& pred, const Alpha& gt, InstanceMetric metric) {
  const double pixels = static_cast<double>(pred.size());
  switch (metric) {
    case InstanceMetric::Mad: return pixel_metrics(pred, gt).mad;
    case InstanceMetric::Mse: return pixel_metrics(pred, gt).mse;
    case InstanceMetric::Grad: return grad_metric(pred, gt) / (pixels / 1000.0);
    case InstanceMetric::Conn: return conn_metric(pred, gt) / (pixels / 1000.0);
  }
  return 1.0;
}

}  // namespace

double imq(const InstanceSet& preds, const InstanceSet& gts, InstanceMetric metric) {
  const Alpha* reference = !gts.empty()    ? &gts.front().second
                           : !preds.empty() ? &preds.front().second
                                            : nullptr;
  if (reference) {
    for (const auto& [id, a] : preds) check_same_size(a, *reference, "imq");
    for (const auto& [id, a] : gts) check_same_size(a, *reference, "imq");
  }

  std::vector<Mask> pred_bin, gt_bin;
  for (const auto& [id, a] : preds) pred_bin.push_back((a >= 0.5).cast<std::uint8_t>());
  for (const auto& [id, a] : gts) gt_bin.push_back((a >= 0.5).cast<std::uint8_t>());

  // all candidate pairs, greedily matched by descending IoU
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t g = 0; g < gts.size(); ++g)
    for (std::size_t p = 0; p < preds.size(); ++p) {
      const double iou = binary_iou(gt_bin[g], pred_bin[p]);
      if (iou > 0.5) pairs.emplace_back(iou, g, p);
    }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::tie(std::get<1>(a), std::get<2>(a)) <
           std::tie(std::get<1>(b), std::get<2>(b));
  });

  std::vector<bool> gt_used(gts.size(), false), pred_used(preds.size(), false);
  double quality_sum = 0;
  std::size_t matched = 0;
  for (const auto& [iou, g, p] : pairs) {
    if (gt_used[g] || pred_used[p]) continue;
    gt_used[g] = pred_used[p] = true;
    ++matched;
    const double err = std::min(1.0, pair_error(preds[p].second, gts[g].second, metric));
    quality_sum += 1.0 - err;
  }

  const std::size_t false_positives = preds.size() - matched;
  const std::size_t denom = gts.size() + false_positives;
  if (denom == 0) return 100.0;  // nothing expected, nothing predicted
  return 100.0 * quality_sum / static_cast<double>(denom);
}

MetricReport make_report(std::vector<ImageMetricRow> rows,
                         std::vector<std::string> unmatched,
                         std::vector<std::string> errors) {
  MetricReport report;
  report.per_image = std::move(rows);
  report.unmatched = std::move(unmatched);
  report.errors = std::move(errors);
  report.aggregate.name = "mean";
  if (!report.per_image.empty()) {
    for (const auto& row : report.per_image) {
      report.aggregate.sad += row.sad;
      report.aggregate.mse += row.mse;
      report.aggregate.mad += row.mad;
      report.aggregate.grad += row.grad;
      report.aggregate.conn += row.conn;
    }
    const double n = static_cast<double>(report.per_image.size());
    report.aggregate.sad /= n;
    report.aggregate.mse /= n;
    report.aggregate.mad /= n;
    report.aggregate.grad /= n;
    report.aggregate.conn /= n;
  }
  return report;
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::json doc;
  auto row_json = [](const ImageMetricRow& row) {
    return nlohmann::json{{"sad", row.sad},
                          {"mse", row.mse},
                          {"mad", row.mad},
                          {"grad", row.grad},
                          {"conn", row.conn}};
  };
  doc["aggregate"] = row_json(report.aggregate);
  doc["images"] = nlohmann::json::object();
  for (const auto& row : report.per_image) doc["images"][row.name] = row_json(row);
  doc["unmatched"] = report.unmatched;
  doc["errors"] = report.errors;
  return doc.dump(2);
}

std::string report_to_table(const MetricReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "image" << std::right << std::setw(10)
      << "SAD" << std::setw(10) << "MSE" << std::setw(10) << "MAD" << std::setw(10)
      << "Grad" << std::setw(10) << "Conn" << '\n';
  auto line = [&out](const ImageMetricRow& row) {
    out << std::left << std::setw(24) << row.name << std::right << std::fixed
        << std::setprecision(4) << std::setw(10) << row.sad << std::setw(10)
        << row.mse << std::setw(10) << row.mad << std::setw(10) << row.grad
        << std::setw(10) << row.conn << '\n';
    out.unsetf(std::ios::fixed);
  };
  for (const auto& row : report.per_image) line(row);
  line(report.aggregate);
  for (const auto& name : report.unmatched) out << "unmatched: " << name << '\n';
  for (const auto& err : report.errors) out << "error: " << err << '\n';
  return out.str();
}

}  // namespace maskmatte
