#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "acd/kernels.hpp"
#include "acd/linalg.hpp"
#include "acd/raster.hpp"

namespace acd {

/// The four (beta_x, beta_y) members of the detector family.
enum class Family {
  Rx,           ///< (0, 0)
  Chronochrome_YgivenX,  ///< (0, 1), CLI name "yx"
  Chronochrome_XgivenY,  ///< (1, 0), CLI name "xy"
  Hacd,         ///< (1, 1), hyperbolic
};

std::string_view to_string(Family f);
Family parse_family(std::string_view name);
Family family_from_betas(int beta_x, int beta_y);

enum class Distribution { Gaussian, Elliptical };
enum class Mode { Linear, Kernel };

struct DetectorConfig {
  int beta_x = 0;
  int beta_y = 0;
  Distribution distribution = Distribution::Gaussian;
  double nu = 1.0;  ///< Student-t shape, used when distribution is Elliptical
  Mode mode = Mode::Linear;

  // Linear mode.
  bool center = true;  ///< subtract the training mean inside xi

  // Kernel mode.
  KernelKind kernel = KernelKind::Rbf;
  std::optional<double> sigma;   ///< unset: mean pairwise distance of training z
  std::optional<double> lambda;  ///< unset: 1e-5 / n
  std::optional<std::array<double, 3>> term_sigmas;  ///< per-term (x, y, z) override

  static DetectorConfig make(Family family, Distribution dist, Mode mode);

  Family family() const { return family_from_betas(beta_x, beta_y); }
  /// Short name such as "K-EC-HACD".
  std::string name() const;
  void validate() const;
};

struct LinearTerm {
  Vector mean;
  SpdFactor factor;
};

struct KernelTerm {
  PixelMatrix train;
  KernelSpec spec;
  double lambda = 0.0;
  SpdFactor solve_factor;  ///< Cholesky of K K + lambda I
};

using Term = std::variant<LinearTerm, KernelTerm>;

enum TermIndex : std::size_t { kTermX = 0, kTermY = 1, kTermZ = 2 };

struct FittedDetector {
  DetectorConfig config;  ///< sigma and lambda resolved in kernel mode
  BandStats stats_x;
  BandStats stats_y;
  Eigen::Index d_x = 0;
  Eigen::Index d_y = 0;
  std::array<Term, 3> terms;  ///< indexed by TermIndex
};

/// Mean and covariance factor of `train` (mean zero when !center).
LinearTerm fit_linear_term(const PixelMatrix& train, bool center = true,
                           double ridge_scale = kDefaultRidgeScale);

/// Gram matrix and factor of K K + lambda I. The factorization starts with
/// no extra ridge; lambda is the regularizer.
KernelTerm fit_kernel_term(const PixelMatrix& train, const KernelSpec& spec, double lambda);

/// Standardizes x and y with statistics of the training pixels, then fits
/// the x, y and z = [x, y] terms.
FittedDetector fit(const PixelMatrix& x_train, const PixelMatrix& y_train,
                   const DetectorConfig& config);

double xi_linear(const LinearTerm& term, const Vector& v);
/// k (K K + lambda I)^{-1} k^T, clipped at 0.
double xi_kernel(const KernelTerm& term, const Vector& v);
double xi(const Term& term, const Vector& v);

double score_gaussian(double xi_z, double xi_x, double xi_y, int beta_x, int beta_y);
double score_ec(double xi_z, double xi_x, double xi_y, int beta_x, int beta_y, double nu,
                Eigen::Index d_x, Eigen::Index d_y);

/// Quadratic forms for each pixel: column 0 = xi(x), 1 = xi(y), 2 = xi(z).
/// Terms whose beta is 0 are skipped (left at 0) unless `all_terms`.
Matrix xi_pixels(const FittedDetector& det, const PixelMatrix& x, const PixelMatrix& y,
                 bool all_terms = false);
Matrix xi_pixels_serial(const FittedDetector& det, const PixelMatrix& x, const PixelMatrix& y,
                        bool all_terms = false);

/// Combines a xi_pixels table into scores with the detector's betas and
/// distribution (nu overridable for tuning).
Vector combine_scores(const Matrix& xis, const DetectorConfig& config, Eigen::Index d_x,
                      Eigen::Index d_y);

/// Per-pixel anomalousness; larger is more anomalous. OpenMP over fixed
/// pixel blocks, bit-identical to score_pixels_serial.
Vector score_pixels(const FittedDetector& det, const PixelMatrix& x, const PixelMatrix& y);
Vector score_pixels_serial(const FittedDetector& det, const PixelMatrix& x,
                           const PixelMatrix& y);

}  // namespace acd
