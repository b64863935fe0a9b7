#include "maskmatte/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "maskmatte/errors.hpp"

namespace maskmatte {
namespace {

double reduce(double sum, Eigen::Index count, Reduction reduction) {
  if (reduction == Reduction::Sum) return sum;
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

// forward differences, replicate boundary (zero at the last row/col)
Alpha grad_x(const Alpha& a) {
  Alpha g = Alpha::Zero(a.rows(), a.cols());
  if (a.cols() > 1)
    g.leftCols(a.cols() - 1) = a.rightCols(a.cols() - 1) - a.leftCols(a.cols() - 1);
  return g;
}

Alpha grad_y(const Alpha& a) {
  Alpha g = Alpha::Zero(a.rows(), a.cols());
  if (a.rows() > 1)
    g.topRows(a.rows() - 1) = a.bottomRows(a.rows() - 1) - a.topRows(a.rows() - 1);
  return g;
}

constexpr double kBinomial5[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

Alpha blur5(const Alpha& a) {
  const Eigen::Index rows = a.rows(), cols = a.cols();
  Alpha tmp(rows, cols), out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0;
      for (int t = -2; t <= 2; ++t)
        acc += kBinomial5[t + 2] * a(r, std::clamp<Eigen::Index>(c + t, 0, cols - 1));
      tmp(r, c) = acc;
    }
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0;
      for (int t = -2; t <= 2; ++t)
        acc += kBinomial5[t + 2] * tmp(std::clamp<Eigen::Index>(r + t, 0, rows - 1), c);
      out(r, c) = acc;
    }
  return out;
}

Alpha pyr_down(const Alpha& a) {
  const Alpha smooth = blur5(a);
  Alpha out((a.rows() + 1) / 2, (a.cols() + 1) / 2);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = smooth(2 * r, 2 * c);
  return out;
}

Alpha pyr_up(const Alpha& a, Eigen::Index rows, Eigen::Index cols) {
  Alpha sparse = Alpha::Zero(rows, cols);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      if (2 * r < rows && 2 * c < cols) sparse(2 * r, 2 * c) = 4.0 * a(r, c);
  return blur5(sparse);
}

// laplacian levels: current - up(down(current)), 5 levels
std::vector<Alpha> laplacian_pyramid(const Alpha& a, int levels) {
  std::vector<Alpha> pyramid;
  Alpha current = a;
  for (int k = 0; k < levels; ++k) {
    const Alpha down = pyr_down(current);
    pyramid.push_back(current - pyr_up(down, current.rows(), current.cols()));
    current = down;
  }
  return pyramid;
}

}  // namespace

MattingLossTerms matting_loss(const Alpha& alpha_hat, const Alpha& alpha,
                              const Trimap& trimap, const LossWeights& weights) {
  if (alpha_hat.rows() != alpha.rows() || alpha_hat.cols() != alpha.cols() ||
      alpha.rows() != trimap.rows() || alpha.cols() != trimap.cols())
    throw DimensionMismatch("matting_loss inputs differ in size");

  MattingLossTerms terms;
  const Alpha diff = (alpha - alpha_hat).abs();

  double known_sum = 0, unknown_sum = 0;
  Eigen::Index known_count = 0, unknown_count = 0;
  for (Eigen::Index c = 0; c < alpha.cols(); ++c)
    for (Eigen::Index r = 0; r < alpha.rows(); ++r) {
      if (trimap.at(r, c) == TriClass::Unknown) {
        unknown_sum += diff(r, c);
        ++unknown_count;
      } else {
        known_sum += diff(r, c);
        ++known_count;
      }
    }
  terms.known_l1 = reduce(known_sum, known_count, weights.reduction);
  terms.unknown_l1 = reduce(unknown_sum, unknown_count, weights.reduction);

  const Eigen::Index pixels = alpha.size();
  const Alpha gx = grad_x(alpha), gy = grad_y(alpha);
  const Alpha gxh = grad_x(alpha_hat), gyh = grad_y(alpha_hat);
  terms.grad_diff = reduce(((gx - gxh).abs() + (gy - gyh).abs()).sum(), pixels,
                           weights.reduction);
  terms.grad_penalty = reduce((gx.abs() + gy.abs()).sum(), pixels, weights.reduction);

  const auto pyr_hat = laplacian_pyramid(alpha_hat, 5);
  const auto pyr_gt = laplacian_pyramid(alpha, 5);
  for (int k = 0; k < 5; ++k) {
    const double level = reduce((pyr_gt[k] - pyr_hat[k]).abs().sum(),
                                pyr_gt[k].size(), weights.reduction);
    terms.pyramid += std::ldexp(level, k);  // 2^{k} for level k+1
  }

  terms.total = terms.known_l1 + terms.unknown_l1 + terms.grad_diff +
                weights.lambda_gp * terms.grad_penalty + terms.pyramid;
  return terms;
}

double regularization_loss(const Alpha& p_hat_sam, const Alpha& p_sam,
                           const LossWeights& weights) {
  if (p_hat_sam.rows() != p_sam.rows() || p_hat_sam.cols() != p_sam.cols())
    throw DimensionMismatch("regularization_loss inputs differ in size");
  const double eps = weights.prob_clamp_eps;
  double sum = 0;
  for (Eigen::Index c = 0; c < p_sam.cols(); ++c)
    for (Eigen::Index r = 0; r < p_sam.rows(); ++r) {
      const double y = p_sam(r, c) > 0.5 ? 1.0 : 0.0;
      const double p = std::clamp(p_hat_sam(r, c), eps, 1.0 - eps);
      sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
  return reduce(sum, p_sam.size(), weights.reduction);
}

double ghm_trimap_loss(const Planes& p_hat_mat, const Trimap& y_tri,
                       const GhmConfig& ghm, const LossWeights& weights) {
  if (p_hat_mat.size() != 3)
    throw std::invalid_argument("trimap prediction needs 3 channels");
  for (const Alpha& p : p_hat_mat)
    if (p.rows() != y_tri.rows() || p.cols() != y_tri.cols())
      throw DimensionMismatch("ghm_trimap_loss inputs differ in size");

  const Eigen::Index rows = y_tri.rows(), cols = y_tri.cols();
  const Eigen::Index pixels = rows * cols;
  const int bins = ghm.num_bins;

  // pass 1: gradient-norm density
  std::vector<Eigen::Index> bin_count(bins, 0);
  Eigen::ArrayXXi bin_of(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double sum =
          p_hat_mat[0](r, c) + p_hat_mat[1](r, c) + p_hat_mat[2](r, c);
      if (std::abs(sum - 1.0) > 1e-6)
        throw NotNormalized("channel probabilities sum to " + std::to_string(sum));
      const double p = p_hat_mat[static_cast<int>(y_tri.at(r, c))](r, c);
      const double g = 1.0 - p;
      const int bin = std::clamp(static_cast<int>(std::floor(g * bins)), 0, bins - 1);
      bin_of(r, c) = bin;
      ++bin_count[bin];
    }

  // pass 2: density-weighted cross entropy
  double sum = 0;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double p = p_hat_mat[static_cast<int>(y_tri.at(r, c))](r, c);
      const double density = static_cast<double>(bin_count[bin_of(r, c)]) * bins /
                             static_cast<double>(pixels);
      sum += -std::log(std::max(p, weights.prob_clamp_eps)) / density;
    }
  return reduce(sum, pixels, weights.reduction);
}

double total_loss(double mat, double reg, double trimap, const LossWeights& weights) {
  if (!std::isfinite(mat) || !std::isfinite(reg) || !std::isfinite(trimap))
    throw NonFinite("loss component is not finite");
  return mat + weights.lambda_r * reg + weights.lambda_t * trimap;
}

}  // namespace maskmatte
