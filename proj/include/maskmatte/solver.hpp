#pragma once

#include <Eigen/Sparse>

#include <filesystem>
#include <string>

#include "maskmatte/types.hpp"

namespace maskmatte {

struct SolverConfig {
  int window_radius = 1;        // (2r+1)^2 local windows
  double epsilon_reg = 1e-7;    // color-covariance regularizer
  double constraint_weight = 100.0;
  double cg_tolerance = 1e-6;   // on the relative residual |Ax-b|/|b|
  int max_iterations = 2000;
};

/// Matting Laplacian over all (2r+1)^2 windows fully inside the image:
///   L_ij = sum_k [ d_ij - (1/|w|) (1 + (I_i-mu_k)^T (S_k + eps/|w| Id)^-1 (I_j-mu_k)) ]
/// Pixels are indexed row-major (r * width + c). The matrix is exactly
/// symmetric and its rows sum to zero up to rounding.
/// Throws ImageTooSmall when either dimension is below 2r+1.
Eigen::SparseMatrix<double> build_matting_laplacian(const Planes& image,
                                                    const SolverConfig& config = {});

/// Solves (L + w D) alpha = w D t by conjugate gradient, where D is the
/// diagonal indicator of known (FG/BG) pixels, t the trimap values, and
/// w = constraint_weight. Starts from alpha0 = trimap values (0.5 on UNK) and
/// clamps the result to [0,1]. A trimap with no unknown pixels is returned
/// verbatim. Throws IllPosed when UNK is non-empty but FG or BG is empty,
/// NotConverged (carrying the relative residual) past max_iterations.
Alpha solve_alpha(const Planes& image, const Trimap& trimap,
                  const SolverConfig& config = {});

struct ExternalBackendConfig {
  std::string command_template;  // must contain {image}, {trimap}, {out}
  double timeout_seconds = 60.0;
};

/// Runs an external matting backend: substitutes the {image}/{trimap}/{out}
/// placeholders, executes the command through the shell, and reads {out} as
/// an 8-bit grayscale PNG scaled to [0,1]. The output must match the trimap's
/// dimensions. Throws ConfigError (missing placeholder), BackendFailed
/// (nonzero exit), Timeout, or BadOutput.
Alpha run_external_backend(const std::filesystem::path& image_path,
                           const std::filesystem::path& trimap_path,
                           const ExternalBackendConfig& config);

}  // namespace maskmatte
