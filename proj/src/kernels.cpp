#include "acd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "acd/error.hpp"

namespace acd {

void KernelSpec::validate() const {
  if (kind != KernelKind::Linear && !(sigma > 0.0 && std::isfinite(sigma))) {
    throw Error(ErrorKind::InvalidArgument, "kernel sigma must be positive and finite");
  }
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Linear: return "linear";
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Sam: return "sam";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "linear") return KernelKind::Linear;
  if (name == "rbf") return KernelKind::Rbf;
  if (name == "sam") return KernelKind::Sam;
  throw Error(ErrorKind::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

namespace {

double dot(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

double squared_distance(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

// Angle between a and b as 2 atan2(|a^ - b^|, |a^ + b^|) over the unit
// vectors. Same value as acos of the clamped cosine, but well conditioned
// near 0 and pi and exactly 0 for identical inputs.
double spectral_angle(const double* a, const double* b, Eigen::Index d) {
  const double na = std::sqrt(dot(a, a, d));
  const double nb = std::sqrt(dot(b, b, d));
  if (na == 0.0 || nb == 0.0) {
    // cosine 1 when both are zero, 0 otherwise
    return (na == 0.0 && nb == 0.0) ? 0.0 : M_PI / 2.0;
  }
  double diff = 0.0;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double ua = a[k] / na;
    const double ub = b[k] / nb;
    diff += (ua - ub) * (ua - ub);
    sum += (ua + ub) * (ua + ub);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

double distance(KernelKind kind, const double* a, const double* b, Eigen::Index d) {
  return kind == KernelKind::Sam ? spectral_angle(a, b, d) : std::sqrt(squared_distance(a, b, d));
}

// exp(-345) is about 1e-150. Smaller kernel values are flushed to zero so
// that neither they nor their pairwise products are subnormal, which would
// slow every later product by orders of magnitude.
constexpr double kMinExponent = -345.0;

double gaussian_of(double squared, double sigma) {
  const double e = -squared / (2.0 * sigma * sigma);
  return e < kMinExponent ? 0.0 : std::exp(e);
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const double* a, const double* b, Eigen::Index d) {
  switch (spec.kind) {
    case KernelKind::Linear:
      return dot(a, b, d);
    case KernelKind::Rbf:
      return gaussian_of(squared_distance(a, b, d), spec.sigma);
    case KernelKind::Sam: {
      const double t = spectral_angle(a, b, d);
      return gaussian_of(t * t, spec.sigma);
    }
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::InvalidArgument, "kernel arguments differ in length");
  }
  return kernel_eval(spec, a.data(), b.data(), a.size());
}

Matrix gram_serial(const PixelMatrix& rows, const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(spec, rows.row(i).data(), rows.row(j).data(), d);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix gram(const PixelMatrix& rows, const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  Matrix k(n, n);
  // Row i owns entries (i, j) and (j, i) for j <= i.
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(spec, rows.row(i).data(), rows.row(j).data(), d);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix cross_gram(const PixelMatrix& train, const PixelMatrix& probe, const KernelSpec& spec) {
  spec.validate();
  if (train.cols() != probe.cols()) {
    throw Error(ErrorKind::InvalidArgument, "dimension mismatch between training and probe rows");
  }
  const Eigen::Index d = train.cols();
  Matrix k(probe.rows(), train.rows());
  for (Eigen::Index j = 0; j < train.rows(); ++j) {
    for (Eigen::Index i = 0; i < probe.rows(); ++i) {
      k(i, j) = kernel_eval(spec, train.row(j).data(), probe.row(i).data(), d);
    }
  }
  return k;
}

Vector cross_row(const PixelMatrix& train, const Vector& v, const KernelSpec& spec) {
  spec.validate();
  if (v.size() != train.cols()) {
    throw Error(ErrorKind::InvalidArgument,
                "dimension mismatch: training rows have " + std::to_string(train.cols()) +
                    " features, vector has " + std::to_string(v.size()));
  }
  Vector out(train.rows());
  for (Eigen::Index j = 0; j < train.rows(); ++j) {
    out(j) = kernel_eval(spec, train.row(j).data(), v.data(), v.size());
  }
  return out;
}

std::vector<double> pairwise_distances(const PixelMatrix& rows, KernelKind kind) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out.push_back(distance(kind, rows.row(i).data(), rows.row(j).data(), d));
    }
  }
  return out;
}

namespace {

std::vector<double> heuristic_distances(const PixelMatrix& rows, KernelKind kind,
                                        std::uint64_t seed) {
  if (rows.rows() < 2) {
    throw Error(ErrorKind::InvalidArgument, "bandwidth heuristic needs at least 2 rows");
  }
  if (static_cast<std::size_t>(rows.rows()) <= kHeuristicMaxRows) {
    return pairwise_distances(rows, kind);
  }
  const auto idx = sample_pixels(static_cast<std::size_t>(rows.rows()), kHeuristicMaxRows, seed);
  return pairwise_distances(select_rows(rows, idx), kind);
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Linear interpolation between order statistics of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double sigma_heuristic(const PixelMatrix& rows, SigmaHeuristic method, KernelKind kind,
                       std::uint64_t seed) {
  auto dist = heuristic_distances(rows, kind, seed);
  double value = 0.0;
  if (method == SigmaHeuristic::Mean) {
    value = std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(dist.size());
  } else {
    value = median_of(std::move(dist));
  }
  if (!(value > 0.0)) {
    throw Error(ErrorKind::DegenerateData, "zero dispersion");
  }
  return value;
}

std::vector<double> percentile_sigma_grid(const PixelMatrix& rows, KernelKind kind, double lo,
                                          double hi, std::size_t count, std::uint64_t seed) {
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0) || count == 0) {
    throw Error(ErrorKind::InvalidArgument, "invalid percentile range");
  }
  auto dist = heuristic_distances(rows, kind, seed);
  std::sort(dist.begin(), dist.end());
  std::vector<double> grid;
  for (std::size_t i = 0; i < count; ++i) {
    const double p = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    const double v = quantile_sorted(dist, p);
    if (v > 0.0 && (grid.empty() || v > grid.back())) grid.push_back(v);
  }
  if (grid.empty()) {
    throw Error(ErrorKind::DegenerateData, "zero dispersion");
  }
  return grid;
}

}  // namespace acd
