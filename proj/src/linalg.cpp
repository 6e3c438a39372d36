#include "acd/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "acd/error.hpp"

namespace acd {

SpdFactor::SpdFactor(Matrix lower, double ridge) : lower_(std::move(lower)), ridge_(ridge) {
  if (lower_.rows() != lower_.cols()) {
    throw Error(ErrorKind::InvalidArgument, "factor must be square");
  }
  for (Eigen::Index i = 0; i < lower_.rows(); ++i) {
    if (!(lower_(i, i) > 0.0) || !std::isfinite(lower_(i, i))) {
      throw Error(ErrorKind::InvalidArgument, "factor diagonal must be positive");
    }
  }
}

Vector SpdFactor::whiten(const Vector& b) const {
  if (b.size() != dim()) {
    throw Error(ErrorKind::InvalidArgument,
                "dimension mismatch: factor is " + std::to_string(dim()) +
                    ", vector is " + std::to_string(b.size()));
  }
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

Matrix SpdFactor::whiten(const Matrix& b) const {
  if (b.rows() != dim()) {
    throw Error(ErrorKind::InvalidArgument, "dimension mismatch in whiten");
  }
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

double SpdFactor::quadratic_form(const Vector& b) const {
  return whiten(b).squaredNorm();
}

Matrix covariance(const PixelMatrix& m, const Vector& mean) {
  if (m.rows() < 2) {
    throw Error(ErrorKind::InvalidArgument, "covariance needs at least 2 samples");
  }
  if (mean.size() != m.cols()) {
    throw Error(ErrorKind::InvalidArgument, "mean length does not match column count");
  }
  const Matrix centered = m.rowwise() - mean.transpose();
  Matrix c = (centered.transpose() * centered) / static_cast<double>(m.rows());
  return (c + c.transpose()) * 0.5;
}

SpdFactor spd_factorize(const Matrix& c, double ridge_scale) {
  if (c.rows() != c.cols() || c.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "covariance must be square and nonempty");
  }
  const Eigen::Index d = c.rows();
  const double scale = c.trace() / static_cast<double>(d);
  // Zero or non-finite trace leaves nothing to scale a ridge by.
  const double base = scale > 0.0 && std::isfinite(scale) ? scale : 0.0;
  double eps = ridge_scale * scale;
  if (!(eps >= 0.0)) eps = 0.0;

  constexpr int kMaxRetries = 6;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    Matrix shifted = c;
    shifted.diagonal().array() += eps;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) {
      Matrix lower = llt.matrixL();
      const auto diag = lower.diagonal();
      if (diag.allFinite() && (diag.array() > 0.0).all()) {
        return SpdFactor(std::move(lower), eps);
      }
    }
    eps = eps > 0.0 ? eps * 10.0 : 1e-12 * base;
  }
  throw Error(ErrorKind::Numerical, "singular covariance");
}

double mahalanobis(const SpdFactor& f, const Vector& mean, const Vector& v) {
  if (mean.size() != v.size()) {
    throw Error(ErrorKind::InvalidArgument, "dimension mismatch between mean and vector");
  }
  return f.quadratic_form(v - mean);
}

}  // namespace acd
