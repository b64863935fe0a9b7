#pragma once

#include "maskmatte/types.hpp"

namespace maskmatte {

/// All norm terms are reported as per-pixel (or per-region-pixel) means by
/// default so values are comparable across image sizes; Sum restores the
/// literal unnormalized sums.
enum class Reduction { Mean, Sum };

struct LossWeights {
  double lambda_r = 0.2;          // regularization weight
  double lambda_t = 0.05;         // trimap-loss weight
  double lambda_gp = 0.0;         // gradient-penalty weight on |grad alpha|_1
  double prob_clamp_eps = 1e-6;   // probability clamp for log terms
  Reduction reduction = Reduction::Mean;
};

struct GhmConfig {
  int num_bins = 10;
};

struct MattingLossTerms {
  double known_l1 = 0;      // |alpha - alpha_hat|_1 over FG+BG pixels
  double unknown_l1 = 0;    // same over UNK pixels
  double grad_diff = 0;     // |grad alpha - grad alpha_hat|_1
  double grad_penalty = 0;  // |grad alpha|_1 (ground truth), unweighted
  double pyramid = 0;       // sum_k 2^{k-1} |L^k(alpha) - L^k(alpha_hat)|_1
  double total = 0;         // known + unknown + grad_diff + lambda_gp*grad_penalty + pyramid
};

/// Gradients are first-order forward differences with replicate boundary,
/// L1 taken over both axes. The Laplacian pyramid has 5 levels built with a
/// 5x5 binomial kernel and factor-2 decimation.
MattingLossTerms matting_loss(const Alpha& alpha_hat, const Alpha& alpha,
                              const Trimap& trimap, const LossWeights& weights = {});

/// Binary cross-entropy of p_hat against labels 1[p_sam > 0.5], with
/// probabilities clamped to [eps, 1-eps].
double regularization_loss(const Alpha& p_hat_sam, const Alpha& p_sam,
                           const LossWeights& weights = {});

/// Gradient-harmonized cross entropy of the 3-channel trimap prediction
/// (channel order BG, UNK, FG). Per pixel, with p the probability of the true
/// class and g = 1 - p, the gradient density GD(g) = c_bin * B / N counts the
/// pixels sharing g's bin; the loss is the reduction of (1/GD) * (-log p).
/// Throws NotNormalized when channel sums stray from 1 by more than 1e-6.
double ghm_trimap_loss(const Planes& p_hat_mat, const Trimap& y_tri,
                       const GhmConfig& ghm = {}, const LossWeights& weights = {});

/// L = mat + lambda_r * reg + lambda_t * trimap. Throws NonFinite.
double total_loss(double mat, double reg, double trimap,
                  const LossWeights& weights = {});

}  // namespace maskmatte
