#include "maskmatte/solver.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <thread>
#include <vector>

#include "maskmatte/errors.hpp"
#include "maskmatte/png_io.hpp"

namespace maskmatte {
namespace {

void check_planes(const Planes& image) {
  if (image.size() != 1 && image.size() != 3)
    throw std::invalid_argument("image must have 1 or 3 planes");
  for (const Alpha& p : image)
    if (p.rows() != image[0].rows() || p.cols() != image[0].cols())
      throw DimensionMismatch("image planes differ in size");
}

}  // namespace

Eigen::SparseMatrix<double> build_matting_laplacian(const Planes& image,
                                                    const SolverConfig& config) {
  check_planes(image);
  const int radius = config.window_radius;
  const Eigen::Index rows = image[0].rows(), cols = image[0].cols();
  const int side = 2 * radius + 1;
  if (rows < side || cols < side)
    throw ImageTooSmall("image smaller than one matting window");

  const int channels = static_cast<int>(image.size());
  const int n = side * side;            // pixels per window
  const int span = 4 * radius + 1;      // neighbor offsets reach +-2r
  const int slots = span * span;
  const Eigen::Index size = rows * cols;
  std::vector<double> acc(static_cast<std::size_t>(size) * slots, 0.0);

  const auto index = [cols](Eigen::Index r, Eigen::Index c) { return r * cols + c; };

  std::vector<Eigen::Index> win_pix(n);
  Eigen::MatrixXd colors(channels, n);
  Eigen::MatrixXd centered(channels, n);
  Eigen::MatrixXd projected(channels, n);

  for (Eigen::Index wr = radius; wr < rows - radius; ++wr) {
    for (Eigen::Index wc = radius; wc < cols - radius; ++wc) {
      int p = 0;
      for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc, ++p) {
          win_pix[p] = index(wr + dr, wc + dc);
          for (int ch = 0; ch < channels; ++ch)
            colors(ch, p) = image[ch](wr + dr, wc + dc);
        }
      const Eigen::VectorXd mu = colors.rowwise().mean();
      centered = colors.colwise() - mu;
      Eigen::MatrixXd cov = centered * centered.transpose() / n;
      cov.diagonal().array() += config.epsilon_reg / n;
      projected = cov.inverse() * centered;

      for (int a = 0; a < n; ++a) {
        const Eigen::Index pa = win_pix[a];
        const Eigen::Index ra = pa / cols, ca = pa % cols;
        for (int b = a; b < n; ++b) {
          const double w = (1.0 + centered.col(a).dot(projected.col(b))) / n;
          const double contrib = (a == b ? 1.0 - w : -w);
          const Eigen::Index pb = win_pix[b];
          const Eigen::Index rb = pb / cols, cb = pb % cols;
          const int slot_ab = static_cast<int>((rb - ra + 2 * radius) * span +
                                               (cb - ca + 2 * radius));
          acc[pa * slots + slot_ab] += contrib;
          if (a != b) {
            const int slot_ba = static_cast<int>((ra - rb + 2 * radius) * span +
                                                 (ca - cb + 2 * radius));
            acc[pb * slots + slot_ba] += contrib;
          }
        }
      }
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(acc.size() / 2);
  for (Eigen::Index p = 0; p < size; ++p) {
    const Eigen::Index r = p / cols, c = p % cols;
    for (int s = 0; s < slots; ++s) {
      const double v = acc[p * slots + s];
      if (v == 0.0) continue;
      const Eigen::Index nr = r + s / span - 2 * radius;
      const Eigen::Index nc = c + s % span - 2 * radius;
      triplets.emplace_back(p, index(nr, nc), v);
    }
  }
  Eigen::SparseMatrix<double> laplacian(size, size);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());
  return laplacian;
}

Alpha solve_alpha(const Planes& image, const Trimap& trimap,
                  const SolverConfig& config) {
  check_planes(image);
  if (image[0].rows() != trimap.rows() || image[0].cols() != trimap.cols())
    throw DimensionMismatch("image and trimap differ in size");

  const Eigen::Index unknown = trimap.count(TriClass::Unknown);
  if (unknown == 0) return trimap.values();  // fully constrained
  if (trimap.count(TriClass::Foreground) == 0 ||
      trimap.count(TriClass::Background) == 0)
    throw IllPosed("unknown pixels but no foreground/background constraints");

  const Eigen::Index rows = trimap.rows(), cols = trimap.cols();
  const Eigen::Index size = rows * cols;
  Eigen::SparseMatrix<double> system = build_matting_laplacian(image, config);

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
  Eigen::VectorXd guess(size);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::Index p = r * cols + c;
      const TriClass t = trimap.at(r, c);
      const double value = t == TriClass::Foreground ? 1.0
                           : t == TriClass::Background ? 0.0
                                                       : 0.5;
      guess(p) = value;
      if (t != TriClass::Unknown) {
        system.coeffRef(p, p) += config.constraint_weight;
        rhs(p) = config.constraint_weight * value;
      }
    }

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>
      cg;
  cg.setTolerance(config.cg_tolerance);
  cg.setMaxIterations(config.max_iterations);
  cg.compute(system);
  Eigen::VectorXd x = cg.solveWithGuess(rhs, guess);
  if (cg.info() != Eigen::Success) throw NotConverged(cg.error());

  Alpha alpha(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      alpha(r, c) = std::clamp(x(r * cols + c), 0.0, 1.0);
  return alpha;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s)
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  out += "'";
  return out;
}

void substitute(std::string& text, const std::string& key, const std::string& value) {
  for (std::size_t at = text.find(key); at != std::string::npos;
       at = text.find(key, at + value.size()))
    text.replace(at, key.size(), value);
}

}  // namespace

Alpha run_external_backend(const std::filesystem::path& image_path,
                           const std::filesystem::path& trimap_path,
                           const ExternalBackendConfig& config) {
  for (const char* key : {"{image}", "{trimap}", "{out}"})
    if (config.command_template.find(key) == std::string::npos)
      throw ConfigError(std::string("backend command lacks the ") + key +
                        " placeholder");

  static std::atomic<std::uint64_t> counter{0};
  const std::filesystem::path out_path =
      std::filesystem::temp_directory_path() /
      ("maskmatte-backend-" + std::to_string(::getpid()) + "-" +
       std::to_string(counter.fetch_add(1)) + ".png");

  std::string command = config.command_template;
  substitute(command, "{image}", shell_quote(image_path.string()));
  substitute(command, "{trimap}", shell_quote(trimap_path.string()));
  substitute(command, "{out}", shell_quote(out_path.string()));

  const pid_t pid = ::fork();
  if (pid < 0) throw BackendFailed("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);  // own process group, so a timeout kills the whole tree
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // from both sides; whichever runs first wins

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(config.timeout_seconds);
  int status = 0;
  for (;;) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) throw BackendFailed("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      std::filesystem::remove(out_path);
      throw Timeout("backend exceeded " + std::to_string(config.timeout_seconds) +
                    "s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::filesystem::remove(out_path);
    throw BackendFailed("backend exited with status " +
                        std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }

  if (!std::filesystem::exists(out_path))
    throw BadOutput("backend produced no output file");
  Alpha alpha;
  try {
    alpha = read_png_gray(out_path);
  } catch (const Error& e) {
    std::filesystem::remove(out_path);
    throw BadOutput(std::string("unreadable backend output: ") + e.what());
  }
  std::filesystem::remove(out_path);

  const auto [height, width] = read_png_size(trimap_path);
  if (alpha.rows() != height || alpha.cols() != width)
    throw BadOutput("backend output size does not match the trimap");
  return alpha;
}

}  // namespace maskmatte
