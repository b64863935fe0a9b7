#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "maskmatte/errors.hpp"
#include "maskmatte/losses.hpp"
#include "maskmatte/trimap.hpp"
#include "test_support.hpp"

using namespace maskmatte;
using testsupport::random_alpha;

namespace {

// ---- independent reimplementation of every matting-loss piece, using direct
// (non-separable) convolutions and explicit loops ----

double mean_abs(const Alpha& a) {
  double sum = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) sum += std::abs(a(r, c));
  return sum / static_cast<double>(a.size());
}

Alpha conv_binomial_2d(const Alpha& a) {
  static const double k[5] = {1, 4, 6, 4, 1};
  Alpha out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      double acc = 0;
      for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
          const Eigen::Index rr = std::clamp<Eigen::Index>(r + i, 0, a.rows() - 1);
          const Eigen::Index cc = std::clamp<Eigen::Index>(c + j, 0, a.cols() - 1);
          acc += k[i + 2] * k[j + 2] / 256.0 * a(rr, cc);
        }
      out(r, c) = acc;
    }
  return out;
}

Alpha down_oracle(const Alpha& a) {
  const Alpha smooth = conv_binomial_2d(a);
  Alpha out((a.rows() + 1) / 2, (a.cols() + 1) / 2);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = smooth(2 * r, 2 * c);
  return out;
}

Alpha up_oracle(const Alpha& a, Eigen::Index rows, Eigen::Index cols) {
  Alpha sparse = Alpha::Zero(rows, cols);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      if (2 * r < rows && 2 * c < cols) sparse(2 * r, 2 * c) = 4.0 * a(r, c);
  return conv_binomial_2d(sparse);
}

std::vector<Alpha> pyramid_oracle(const Alpha& a) {
  std::vector<Alpha> levels;
  Alpha current = a;
  for (int k = 0; k < 5; ++k) {
    const Alpha down = down_oracle(current);
    levels.push_back(current - up_oracle(down, current.rows(), current.cols()));
    current = down;
  }
  return levels;
}

double pyramid_term_oracle(const Alpha& pred, const Alpha& gt) {
  const auto lp = pyramid_oracle(pred);
  const auto lg = pyramid_oracle(gt);
  double total = 0;
  for (int k = 0; k < 5; ++k) total += std::pow(2.0, k) * mean_abs(lg[k] - lp[k]);
  return total;
}

double matting_loss_oracle(const Alpha& pred, const Alpha& gt, const Trimap& tri,
                           double lambda_gp) {
  double known = 0, unknown = 0;
  Eigen::Index nk = 0, nu = 0;
  for (Eigen::Index r = 0; r < gt.rows(); ++r)
    for (Eigen::Index c = 0; c < gt.cols(); ++c) {
      const double d = std::abs(gt(r, c) - pred(r, c));
      if (tri.at(r, c) == TriClass::Unknown) {
        unknown += d;
        ++nu;
      } else {
        known += d;
        ++nk;
      }
    }
  if (nk) known /= nk;
  if (nu) unknown /= nu;

  double gd = 0, gp = 0;
  for (Eigen::Index r = 0; r < gt.rows(); ++r)
    for (Eigen::Index c = 0; c < gt.cols(); ++c) {
      const Eigen::Index r1 = std::min(r + 1, gt.rows() - 1);
      const Eigen::Index c1 = std::min(c + 1, gt.cols() - 1);
      const double gx_gt = gt(r, c1) - gt(r, c), gy_gt = gt(r1, c) - gt(r, c);
      const double gx_p = pred(r, c1) - pred(r, c), gy_p = pred(r1, c) - pred(r, c);
      gd += std::abs(gx_gt - gx_p) + std::abs(gy_gt - gy_p);
      gp += std::abs(gx_gt) + std::abs(gy_gt);
    }
  gd /= static_cast<double>(gt.size());
  gp /= static_cast<double>(gt.size());

  return known + unknown + gd + lambda_gp * gp + pyramid_term_oracle(pred, gt);
}

Trimap all_unknown(Eigen::Index rows, Eigen::Index cols) {
  return Trimap(rows, cols);
}

Planes normalized_probs(std::mt19937& rng, int rows, int cols) {
  Planes planes{random_alpha(rng, rows, cols, 0.05, 1.0),
                random_alpha(rng, rows, cols, 0.05, 1.0),
                random_alpha(rng, rows, cols, 0.05, 1.0)};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double sum = planes[0](r, c) + planes[1](r, c) + planes[2](r, c);
      for (auto& p : planes) p(r, c) /= sum;
    }
  return planes;
}

}  // namespace

TEST_CASE("matting loss of a matte against itself vanishes") {
  std::mt19937 rng(61);
  const Alpha alpha = random_alpha(rng, 16, 16);
  const MattingLossTerms terms = matting_loss(alpha, alpha, all_unknown(16, 16));
  CHECK(terms.known_l1 == 0.0);
  CHECK(terms.unknown_l1 == 0.0);
  CHECK(terms.grad_diff == 0.0);
  CHECK(terms.pyramid == 0.0);
  CHECK(terms.total == 0.0);  // lambda_gp defaults to 0

  LossWeights weights;
  weights.lambda_gp = 0.7;
  const MattingLossTerms weighted = matting_loss(alpha, alpha, all_unknown(16, 16),
                                                 weights);
  CHECK(weighted.total == doctest::Approx(0.7 * weighted.grad_penalty).epsilon(1e-12));
  CHECK(weighted.grad_penalty > 0.0);
}

TEST_CASE("constant offset hits only the region and pyramid terms") {
  std::mt19937 rng(62);
  const Alpha alpha = random_alpha(rng, 16, 16, 0.0, 0.9);
  const Alpha shifted = alpha + 0.1;
  const MattingLossTerms terms = matting_loss(shifted, alpha, all_unknown(16, 16));
  CHECK(terms.known_l1 == 0.0);  // empty region
  CHECK(terms.unknown_l1 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(terms.grad_diff < 1e-12);  // forward differences kill constants
  CHECK(terms.pyramid ==
        doctest::Approx(pyramid_term_oracle(shifted, alpha)).epsilon(1e-9));
}

TEST_CASE("matting loss matches the independent oracle") {
  std::mt19937 rng(63);
  for (int trial = 0; trial < 5; ++trial) {
    const Alpha gt = random_alpha(rng, 16, 16);
    const Alpha pred = random_alpha(rng, 16, 16);
    Trimap tri(16, 16);
    std::uniform_int_distribution<int> label(0, 2);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) tri.set(r, c, static_cast<TriClass>(label(rng)));

    LossWeights weights;
    weights.lambda_gp = 0.4;
    const MattingLossTerms terms = matting_loss(pred, gt, tri, weights);
    const double oracle = matting_loss_oracle(pred, gt, tri, 0.4);
    CHECK(terms.total == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("sum reduction restores raw sums") {
  std::mt19937 rng(64);
  const Alpha gt = random_alpha(rng, 8, 8);
  const Alpha pred = random_alpha(rng, 8, 8);
  LossWeights sums;
  sums.reduction = Reduction::Sum;
  const MattingLossTerms s = matting_loss(pred, gt, all_unknown(8, 8), sums);
  const MattingLossTerms m = matting_loss(pred, gt, all_unknown(8, 8));
  CHECK(s.unknown_l1 == doctest::Approx(m.unknown_l1 * 64).epsilon(1e-12));
  CHECK(regularization_loss(pred, gt, sums) ==
        doctest::Approx(regularization_loss(pred, gt) * 64).epsilon(1e-12));
}

TEST_CASE("bce against the half grid is ln 2") {
  const Alpha half = Alpha::Constant(10, 10, 0.5);
  std::mt19937 rng(65);
  const Alpha p_sam = random_alpha(rng, 10, 10);
  CHECK(regularization_loss(half, p_sam) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("bce saturates at the clamp on exact predictions") {
  std::mt19937 rng(66);
  const Alpha p_sam = random_alpha(rng, 12, 12);
  Alpha labels(12, 12);
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 12; ++c) labels(r, c) = p_sam(r, c) > 0.5 ? 1.0 : 0.0;

  const double perfect = regularization_loss(labels, p_sam);
  CHECK(perfect == doctest::Approx(-std::log(1.0 - 1e-6)).epsilon(1e-6));
  CHECK(perfect < 1.1e-6);

  const Alpha inverted = 1.0 - labels;
  CHECK(regularization_loss(inverted, p_sam) ==
        doctest::Approx(-std::log(1e-6)).epsilon(1e-9));
  CHECK(regularization_loss(inverted, p_sam) == doctest::Approx(13.8155).epsilon(1e-4));
}

TEST_CASE("bce depends on p_sam only through the binarized labels") {
  std::mt19937 rng(67);
  const Alpha p_hat = random_alpha(rng, 9, 9);
  const Alpha p_sam = random_alpha(rng, 9, 9);
  Alpha rescaled(9, 9);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c)
      rescaled(r, c) = p_sam(r, c) > 0.5 ? 0.9 : 0.2;  // same > 0.5 pattern
  CHECK(regularization_loss(p_hat, p_sam) ==
        regularization_loss(p_hat, rescaled));
}

TEST_CASE("ghm loss vanishes on confident correct predictions") {
  Trimap tri(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) tri.set(r, c, static_cast<TriClass>((r + c) % 3));
  Planes planes{Alpha::Zero(8, 8), Alpha::Zero(8, 8), Alpha::Zero(8, 8)};
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) planes[static_cast<int>(tri.at(r, c))](r, c) = 1.0;
  CHECK(ghm_trimap_loss(planes, tri) <= 1e-5);
}

TEST_CASE("uniform half-confidence lands every pixel in one bin") {
  Trimap tri(10, 10);  // all unknown
  const Planes planes{Alpha::Constant(10, 10, 0.25), Alpha::Constant(10, 10, 0.5),
                      Alpha::Constant(10, 10, 0.25)};
  CHECK(ghm_trimap_loss(planes, tri) ==
        doctest::Approx(-std::log(0.5) / 10.0).epsilon(1e-9));
}

TEST_CASE("ghm matches a brute-force two-pass oracle") {
  std::mt19937 rng(68);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 6, cols = 7;
    const Planes planes = normalized_probs(rng, rows, cols);
    Trimap tri(rows, cols);
    std::uniform_int_distribution<int> label(0, 2);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) tri.set(r, c, static_cast<TriClass>(label(rng)));

    // oracle: histogram over g = 1 - p_true, then the weighted mean
    const int bins = 10;
    const int n = rows * cols;
    std::vector<int> histogram(bins, 0);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double g = 1.0 - planes[static_cast<int>(tri.at(r, c))](r, c);
        histogram[std::min(static_cast<int>(g * bins), bins - 1)] += 1;
      }
    double oracle = 0, weight_sum = 0;
    int nonempty = 0;
    for (int b = 0; b < bins; ++b) nonempty += histogram[b] > 0 ? 1 : 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double p = planes[static_cast<int>(tri.at(r, c))](r, c);
        const double g = 1.0 - p;
        const int b = std::min(static_cast<int>(g * bins), bins - 1);
        const double density = static_cast<double>(histogram[b]) * bins / n;
        weight_sum += 1.0 / density;
        oracle += -std::log(std::max(p, 1e-6)) / density;
      }
    oracle /= n;

    CHECK(ghm_trimap_loss(planes, tri) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(weight_sum ==
          doctest::Approx(static_cast<double>(nonempty) * n / bins).epsilon(1e-9));
  }
}

TEST_CASE("unnormalized probabilities are rejected") {
  Trimap tri(4, 4);
  const Planes planes{Alpha::Constant(4, 4, 0.5), Alpha::Constant(4, 4, 0.5),
                      Alpha::Constant(4, 4, 0.5)};
  CHECK_THROWS_AS(ghm_trimap_loss(planes, tri), NotNormalized);
}

TEST_CASE("total loss is the weighted sum") {
  CHECK(total_loss(1.0, 1.0, 1.0) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(total_loss(0.0, 0.0, 0.0) == 0.0);
  CHECK(total_loss(2.0, 0.5, 4.0) == doctest::Approx(2.3).epsilon(1e-12));

  LossWeights weights;
  weights.lambda_r = 0.3;
  weights.lambda_t = 0.1;
  CHECK(total_loss(1.0, 2.0, 3.0, weights) == doctest::Approx(1.9).epsilon(1e-12));

  CHECK_THROWS_AS(total_loss(std::numeric_limits<double>::infinity(), 0, 0),
                  NonFinite);
  CHECK_THROWS_AS(total_loss(0, std::nan(""), 0), NonFinite);
}
