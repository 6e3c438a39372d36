#pragma once

#include "acd/raster.hpp"

namespace acd {

inline constexpr double kDefaultRidgeScale = 1e-8;

/// Lower Cholesky factor of C + ridge * I.
class SpdFactor {
 public:
  SpdFactor() = default;
  /// Wraps an existing factor (used when loading models). The diagonal must
  /// be strictly positive.
  SpdFactor(Matrix lower, double ridge);

  Eigen::Index dim() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }
  double ridge() const noexcept { return ridge_; }

  /// L^{-1} b, by forward substitution.
  Vector whiten(const Vector& b) const;
  /// Column-wise L^{-1} B.
  Matrix whiten(const Matrix& b) const;
  /// b^T (L L^T)^{-1} b.
  double quadratic_form(const Vector& b) const;

 private:
  Matrix lower_;
  double ridge_ = 0.0;
};

/// (1/n) sum (row - mean)(row - mean)^T, symmetrized.
Matrix covariance(const PixelMatrix& m, const Vector& mean);

/// Cholesky of C + eps I with eps = ridge_scale * trace(C) / d. On failure
/// eps is multiplied by 10 (or seeded at 1e-12 * trace/d when zero) and the
/// factorization retried, at most 6 times.
SpdFactor spd_factorize(const Matrix& c, double ridge_scale = kDefaultRidgeScale);

/// (v - mean)^T (L L^T)^{-1} (v - mean).
double mahalanobis(const SpdFactor& f, const Vector& mean, const Vector& v);

}  // namespace acd
