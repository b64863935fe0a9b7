// Acceptance suite: every shipped guarantee, one pass/fail line each.
// Usage: acceptance [path-to-cli-binary]

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fusion_scenes.hpp"
#include "golden_scene.hpp"
#include "maskmatte/errors.hpp"
#include "maskmatte/coco.hpp"
#include "maskmatte/losses.hpp"
#include "maskmatte/mask_ops.hpp"
#include "maskmatte/metrics.hpp"
#include "maskmatte/pipeline.hpp"
#include "maskmatte/png_io.hpp"
#include "maskmatte/rle.hpp"
#include "maskmatte/solver.hpp"
#include "maskmatte/trimap.hpp"
#include "test_support.hpp"

using namespace maskmatte;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::string g_cli;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void run_criterion(int number, const std::string& name,
                   const std::function<void(std::ostringstream&)>& body) {
  std::ostringstream detail;
  bool ok = true;
  try {
    body(detail);
  } catch (const std::exception& e) {
    ok = false;
    detail << "  threw: " << e.what();
  }
  std::string text = detail.str();
  if (!text.empty() && text.front() == '!') {
    ok = false;
    text.erase(0, 1);
  }
  std::printf("[%s] criterion %2d: %s%s\n", ok ? "PASS" : "FAIL", number,
              name.c_str(), text.c_str());
  if (!ok) ++g_failures;
}

#define REQUIRE_TRUE(cond)                                      \
  do {                                                          \
    if (!(cond)) {                                              \
      detail << "!  failed: " << #cond;                         \
      return;                                                   \
    }                                                           \
  } while (0)

void criterion_morphology(std::ostringstream& detail) {
  const auto start = Clock::now();
  std::mt19937 rng(901);
  std::uniform_int_distribution<int> dim(1, 32);
  for (int trial = 0; trial < 200; ++trial) {
    const Mask mask = testsupport::random_mask(rng, dim(rng), dim(rng));
    const Mask inverse = (mask == 0).cast<std::uint8_t>();
    for (int k = 1; k <= 8; ++k) {
      REQUIRE_TRUE((dilate(mask, k) == testsupport::brute_dilate(mask, k)).all());
      REQUIRE_TRUE((erode(mask, k) == testsupport::brute_erode(mask, k)).all());
      const Mask dual = (dilate(inverse, k) == 0).cast<std::uint8_t>();
      REQUIRE_TRUE((erode(mask, k) == dual).all());
    }
  }
  const double elapsed = seconds_since(start);
  REQUIRE_TRUE(elapsed < 10.0);
  detail << "  (200 masks, k=1..8, " << elapsed << "s)";
}

void criterion_fusion(std::ostringstream& detail) {
  const auto cfg = fusionscenes::config();  // tau 0.8, kernel 4

  fusionscenes::TieScene tie;
  const FusionResult merged = fuse_accessories(1, tie.human, {tie.tie}, cfg);
  REQUIRE_TRUE(merged.merged_ids == std::vector<long long>{101});
  REQUIRE_TRUE((merged.fused_mask == tie.human.max(tie.tie.mask)).all());

  fusionscenes::BallScene ball;
  const FusionResult abandoned = fuse_accessories(1, ball.human, {ball.ball}, cfg);
  REQUIRE_TRUE(abandoned.merged_ids.empty());
  REQUIRE_TRUE(abandoned.skipped_ids.size() == 1);
  REQUIRE_TRUE(abandoned.skipped_ids[0] ==
               std::make_pair(102LL, SkipReason::DisjointAfterDilation));

  fusionscenes::HalfOutScene half;
  const FusionResult below = fuse_accessories(1, half.human, {half.bottle}, cfg);
  REQUIRE_TRUE(below.merged_ids.empty());
  REQUIRE_TRUE(below.skipped_ids[0] == std::make_pair(103LL, SkipReason::BelowTau));

  // tau sweep: merged sets shrink monotonically
  std::size_t previous = 100;
  for (double tau : {0.5, 0.8, 0.95}) {
    auto swept = cfg;
    swept.tau = tau;
    const FusionResult result =
        fuse_accessories(1, tie.human, {tie.tie, half.bottle, ball.ball}, swept);
    REQUIRE_TRUE(result.merged_ids.size() <= previous);
    previous = result.merged_ids.size();
  }
  detail << "  (tie merged, ball abandoned, below-tau skipped, tau sweep monotone)";
}

void criterion_adaptive_kernel(std::ostringstream& detail) {
  REQUIRE_TRUE(adaptive_kernel_size(Mask::Constant(120, 120, 1), 12.0) == 10);
  REQUIRE_TRUE(adaptive_kernel_size(Mask::Constant(6, 6, 1), 12.0) == 1);
  detail << "  (omega(14400,12)=10, omega(36,12)=1)";
}

void criterion_trimap_partition(std::ostringstream& detail) {
  std::mt19937 rng(904);
  for (int trial = 0; trial < 100; ++trial) {
    Mask mask = testsupport::random_mask(rng, 24, 24, 0.3);
    mask(12, 12) = 1;
    const Trimap trimap = make_trimap(mask);
    const Mask grown = testsupport::brute_dilate(mask, 4);
    const int omega = adaptive_kernel_size(grown, 12.0);
    const Mask fg = testsupport::brute_erode(grown, omega);
    const Mask bg =
        testsupport::brute_erode((grown == 0).cast<std::uint8_t>(), omega);
    REQUIRE_TRUE((trimap.mask_of(TriClass::Foreground) == fg).all());
    REQUIRE_TRUE((trimap.mask_of(TriClass::Background) == bg).all());
    REQUIRE_TRUE(trimap.count(TriClass::Foreground) +
                     trimap.count(TriClass::Background) +
                     trimap.count(TriClass::Unknown) ==
                 24 * 24);
    REQUIRE_TRUE(testsupport::mask_subset(trimap.mask_of(TriClass::Foreground),
                                          grown));
    REQUIRE_TRUE(
        !((trimap.mask_of(TriClass::Background) != 0) && (grown != 0)).any());
  }
  detail << "  (100 random masks, FG/UNK/BG exact vs oracle)";
}

void criterion_solver(std::ostringstream& detail) {
  const auto start = Clock::now();
  std::mt19937 rng(905);

  {  // structural identities
    Planes image{testsupport::random_alpha(rng, 8, 8),
                 testsupport::random_alpha(rng, 8, 8),
                 testsupport::random_alpha(rng, 8, 8)};
    const Eigen::MatrixXd dense = Eigen::MatrixXd(build_matting_laplacian(image));
    REQUIRE_TRUE((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE_TRUE(
        (dense * Eigen::VectorXd::Ones(dense.cols())).cwiseAbs().maxCoeff() <
        1e-10);
  }

  SolverConfig config;
  config.cg_tolerance = 1e-10;  // drive cg to the oracle, not just the default
  for (int trial = 0; trial < 20; ++trial) {
    // random matting instances: coherent colors, trimap bands on the contour
    const auto instance = testsupport::random_blob_instance(rng, 8, 8);
    const Planes& image = instance.image;
    const Trimap& trimap = instance.trimap;

    Eigen::MatrixXd system =
        testsupport::dense_matting_laplacian(image, 1, config.epsilon_reg);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(64);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        if (trimap.at(r, c) == TriClass::Unknown) continue;
        system(r * 8 + c, r * 8 + c) += config.constraint_weight;
        rhs(r * 8 + c) = config.constraint_weight *
                         (trimap.at(r, c) == TriClass::Foreground ? 1.0 : 0.0);
      }
    const Eigen::VectorXd direct = system.fullPivLu().solve(rhs);

    const Alpha alpha = solve_alpha(image, trimap, config);
    double worst = 0, worst_known = 0;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        const double oracle = std::clamp(direct(r * 8 + c), 0.0, 1.0);
        worst = std::max(worst, std::abs(alpha(r, c) - oracle));
        if (trimap.at(r, c) != TriClass::Unknown) {
          const double target =
              trimap.at(r, c) == TriClass::Foreground ? 1.0 : 0.0;
          worst_known = std::max(worst_known,
                                 std::abs(direct(r * 8 + c) - target));
        }
      }
    REQUIRE_TRUE(worst < 1e-4);
    REQUIRE_TRUE(worst_known <= 0.01);
  }
  const double elapsed = seconds_since(start);
  REQUIRE_TRUE(elapsed < 30.0);
  detail << "  (20 instances, cg vs dense < 1e-4, known residual <= 0.01, "
         << elapsed << "s)";
}

void criterion_losses(std::ostringstream& detail) {
  std::mt19937 rng(906);
  const Alpha alpha = testsupport::random_alpha(rng, 16, 16);
  const MattingLossTerms self = matting_loss(alpha, alpha, Trimap(16, 16));
  REQUIRE_TRUE(self.total == 0.0);

  REQUIRE_TRUE(std::abs(regularization_loss(Alpha::Constant(10, 10, 0.5),
                                            testsupport::random_alpha(rng, 10, 10)) -
                        std::log(2.0)) < 1e-9);

  const Planes half{Alpha::Constant(10, 10, 0.25), Alpha::Constant(10, 10, 0.5),
                    Alpha::Constant(10, 10, 0.25)};
  REQUIRE_TRUE(std::abs(ghm_trimap_loss(half, Trimap(10, 10)) -
                        (-std::log(0.5) / 10.0)) < 1e-9);

  // weight-sum identity on 50 random instances
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 6, cols = 6, bins = 10, n = rows * cols;
    Planes planes{testsupport::random_alpha(rng, rows, cols, 0.05, 1.0),
                  testsupport::random_alpha(rng, rows, cols, 0.05, 1.0),
                  testsupport::random_alpha(rng, rows, cols, 0.05, 1.0)};
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double sum = planes[0](r, c) + planes[1](r, c) + planes[2](r, c);
        for (auto& p : planes) p(r, c) /= sum;
      }
    Trimap tri(rows, cols);
    std::uniform_int_distribution<int> label(0, 2);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) tri.set(r, c, static_cast<TriClass>(label(rng)));

    std::vector<int> histogram(bins, 0);
    int nonempty = 0;
    double weight_sum = 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double g = 1.0 - planes[static_cast<int>(tri.at(r, c))](r, c);
        histogram[std::min(static_cast<int>(g * bins), bins - 1)] += 1;
      }
    for (int b = 0; b < bins; ++b) nonempty += histogram[b] > 0 ? 1 : 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double g = 1.0 - planes[static_cast<int>(tri.at(r, c))](r, c);
        const int b = std::min(static_cast<int>(g * bins), bins - 1);
        weight_sum += static_cast<double>(n) / (histogram[b] * bins);
      }
    REQUIRE_TRUE(std::abs(weight_sum - nonempty * n / double(bins)) < 1e-9);
  }

  REQUIRE_TRUE(std::abs(total_loss(1.0, 1.0, 1.0) - 1.25) < 1e-12);
  detail << "  (identity, ln2, ghm bin value, weight-sum x50, 1.25)";
}

void criterion_metrics(std::ostringstream& detail) {
  std::mt19937 rng(907);
  const Alpha same = testsupport::random_alpha(rng, 16, 16);
  const PixelMetrics zero = pixel_metrics(same, same);
  REQUIRE_TRUE(zero.sad == 0 && zero.mse == 0 && zero.mad == 0);
  REQUIRE_TRUE(grad_metric(same, same) == 0.0);
  REQUIRE_TRUE(conn_metric(same, same) == 0.0);

  const PixelMetrics offset =
      pixel_metrics(Alpha::Constant(40, 50, 0.5), Alpha::Zero(40, 50));
  REQUIRE_TRUE(std::abs(offset.sad - 1.0) < 1e-12);
  REQUIRE_TRUE(std::abs(offset.mse - 0.25) < 1e-12);
  REQUIRE_TRUE(std::abs(offset.mad - 0.5) < 1e-12);

  const Alpha base = testsupport::random_alpha(rng, 12, 12, 0.0, 0.7);
  REQUIRE_TRUE(grad_metric(base + 0.3, base) < 1e-12);

  // summation and convolution oracles on random pairs
  for (int trial = 0; trial < 10; ++trial) {
    const Alpha pred = testsupport::random_alpha(rng, 16, 16);
    const Alpha gt = testsupport::random_alpha(rng, 16, 16);
    double abs_sum = 0, sq_sum = 0;
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) {
        abs_sum += std::abs(pred(r, c) - gt(r, c));
        sq_sum += (pred(r, c) - gt(r, c)) * (pred(r, c) - gt(r, c));
      }
    const PixelMetrics m = pixel_metrics(pred, gt);
    REQUIRE_TRUE(std::abs(m.sad - abs_sum / 1000) < 1e-8);
    REQUIRE_TRUE(std::abs(m.mse - sq_sum / 256) < 1e-8);
    REQUIRE_TRUE(std::abs(m.mad - abs_sum / 256) < 1e-8);
    REQUIRE_TRUE(std::abs(grad_metric(pred, gt) -
                          testsupport::grad_metric_oracle(pred, gt)) < 1e-8);
    REQUIRE_TRUE(std::abs(conn_metric(pred, gt) -
                          testsupport::conn_metric_oracle(pred, gt)) < 1e-8);
  }
  detail << "  (zeros on identity, 40x50 hand case, offset-blind grad, "
            "sum/conv/flood oracles)";
}

void criterion_imq(std::ostringstream& detail) {
  Alpha a = Alpha::Zero(12, 12);
  for (int r = 1; r <= 4; ++r)
    for (int c = 1; c <= 4; ++c) a(r, c) = 1.0;
  Alpha spurious = Alpha::Zero(12, 12);
  for (int r = 8; r <= 10; ++r)
    for (int c = 8; c <= 10; ++c) spurious(r, c) = 1.0;

  const InstanceSet gt{{1, a}};
  REQUIRE_TRUE(imq({{1, a}}, gt, InstanceMetric::Mad) == 100.0);
  REQUIRE_TRUE(imq({}, gt, InstanceMetric::Mad) == 0.0);
  REQUIRE_TRUE(std::abs(imq({{1, a}, {2, spurious}}, gt, InstanceMetric::Mad) -
                        50.0) < 1e-12);

  const double forward =
      imq({{1, a}, {2, spurious}}, {{1, a}, {2, spurious}}, InstanceMetric::Mad);
  const double reversed =
      imq({{2, spurious}, {1, a}}, {{1, a}, {2, spurious}}, InstanceMetric::Mad);
  REQUIRE_TRUE(forward == reversed);
  REQUIRE_TRUE(forward == 100.0);
  detail << "  (perfect 100, empty 0, one-fp 50, permutation invariant)";
}

int run_cli(const std::string& args) {
  const std::string command = g_cli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_golden_run(std::ostringstream& detail) {
  const auto start = Clock::now();
  const auto root = std::filesystem::temp_directory_path() / "mm_acceptance_golden";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  const auto scene = goldenscene::make_scene(root);

  {
    std::ofstream config(root / "config.json");
    config << "{\n"
           << "  \"images_dir\": \"" << scene.images_dir.string() << "\",\n"
           << "  \"annotations_path\": \"" << scene.annotations.string() << "\",\n"
           << "  \"output_dir\": \"" << (root / "out").string() << "\"\n"
           << "}\n";
  }

  REQUIRE_TRUE(run_cli("build --config " + (root / "config.json").string()) == 0);
  const std::string index_once = goldenscene::read_file(root / "out/index.jsonl");
  const std::string alpha_once =
      goldenscene::read_file(root / "out/alphas/10_100.png");
  REQUIRE_TRUE(!index_once.empty());

  REQUIRE_TRUE(run_cli("build --config " + (root / "config.json").string() +
                       " --workers 3") == 0);
  REQUIRE_TRUE(goldenscene::read_file(root / "out/index.jsonl") == index_once);
  REQUIRE_TRUE(goldenscene::read_file(root / "out/alphas/10_100.png") ==
               alpha_once);

  // the index holds one active record per retained human instance
  int active = 0;
  std::istringstream lines(index_once);
  std::string line;
  while (std::getline(lines, line))
    if (!record_from_jsonl(line).skipped) ++active;
  REQUIRE_TRUE(active == 5);

  REQUIRE_TRUE(run_cli("eval --pred " + (root / "out/alphas").string() +
                       " --gt " + (root / "out/alphas").string() +
                       " --resize-target 64") == 0);
  const MetricReport report =
      evaluate(root / "out/alphas", root / "out/alphas", 64);
  REQUIRE_TRUE(report.aggregate.sad == 0.0);
  REQUIRE_TRUE(report.aggregate.mse == 0.0);
  REQUIRE_TRUE(report.aggregate.mad == 0.0);
  REQUIRE_TRUE(report.aggregate.grad == 0.0);
  REQUIRE_TRUE(report.aggregate.conn == 0.0);

  const double elapsed = seconds_since(start);
  REQUIRE_TRUE(elapsed < 60.0);
  detail << "  (byte-stable across runs, 5 records, self-eval zero, " << elapsed
         << "s)";
}

void criterion_rle(std::ostringstream& detail) {
  std::mt19937 rng(910);
  std::uniform_int_distribution<int> dim(1, 24);
  for (int trial = 0; trial < 500; ++trial) {
    const Mask mask = testsupport::random_mask(rng, dim(rng), dim(rng));
    REQUIRE_TRUE((decode_rle(encode_rle(mask)) == mask).all());
  }
  // fixtures decoded independently of this codebase
  REQUIRE_TRUE(decompress_counts("222") == (std::vector<std::uint32_t>{2, 2, 2}));
  REQUIRE_TRUE(decompress_counts("i0") == (std::vector<std::uint32_t>{25}));
  REQUIRE_TRUE(decompress_counts("`0") == (std::vector<std::uint32_t>{16}));
  REQUIRE_TRUE(decompress_counts("PeQ33PeQ30T[nL") ==
               (std::vector<std::uint32_t>{100000, 3, 100000, 3, 4}));
  REQUIRE_TRUE(decompress_counts("5072mk0ObVO") ==
               (std::vector<std::uint32_t>{5, 0, 7, 2, 900, 1, 86}));
  REQUIRE_TRUE(compress_counts({100000, 3, 100000, 3, 4}) == "PeQ33PeQ30T[nL");
  detail << "  (500 round trips, compressed fixtures)";
}

}  // namespace

int main(int argc, char** argv) {
  g_cli = argc > 1 ? argv[1] : "./tools/maskmatte";

  run_criterion(1, "morphology matches the brute-force oracle with duality",
                criterion_morphology);
  run_criterion(2, "fusion scenes behave as constructed (tau 0.8, kernel 4)",
                criterion_fusion);
  run_criterion(3, "adaptive kernel arithmetic", criterion_adaptive_kernel);
  run_criterion(4, "trimaps partition exactly around the dilated mask",
                criterion_trimap_partition);
  run_criterion(5, "cg solver matches the dense direct solve",
                criterion_solver);
  run_criterion(6, "loss identities", criterion_losses);
  run_criterion(7, "metric identities and oracles", criterion_metrics);
  run_criterion(8, "imq properties", criterion_imq);
  run_criterion(9, "end-to-end golden build is deterministic",
                criterion_golden_run);
  run_criterion(10, "rle round trip and compressed fixtures", criterion_rle);

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
