#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "acd/raster.hpp"

namespace acd {

enum class KernelKind { Linear, Rbf, Sam };

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double sigma = 1.0;  ///< ignored for Linear

  /// Throws unless sigma > 0 for rbf and sam.
  void validate() const;
};

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

/// linear: a.b; rbf: exp(-|a-b|^2 / 2 sigma^2);
/// sam: exp(-angle(a, b)^2 / 2 sigma^2). For sam a zero-norm argument gives
/// cosine 1 when both are zero and 0 otherwise.
double kernel_eval(const KernelSpec& spec, const double* a, const double* b, Eigen::Index d);

double kernel_eval(const KernelSpec& spec, const Vector& a, const Vector& b);

/// K[i][j] = k(row i, row j). OpenMP over rows; bit-identical to gram_serial.
Matrix gram(const PixelMatrix& rows, const KernelSpec& spec);
Matrix gram_serial(const PixelMatrix& rows, const KernelSpec& spec);

/// m x n cross-kernel block: entry (i, j) = k(train row j, probe row i).
Matrix cross_gram(const PixelMatrix& train, const PixelMatrix& probe, const KernelSpec& spec);

/// Length-n vector of k(train row j, v).
Vector cross_row(const PixelMatrix& train, const Vector& v, const KernelSpec& spec);

enum class SigmaHeuristic { Mean, Median };

/// Pairwise distances between all i < j. Euclidean, or the spectral angle
/// in radians when kind == Sam.
std::vector<double> pairwise_distances(const PixelMatrix& rows, KernelKind kind = KernelKind::Rbf);

inline constexpr std::size_t kHeuristicMaxRows = 2000;

/// Mean or median pairwise distance. Above kHeuristicMaxRows rows the
/// statistic is taken over kHeuristicMaxRows seeded random rows.
double sigma_heuristic(const PixelMatrix& rows, SigmaHeuristic method,
                       KernelKind kind = KernelKind::Rbf, std::uint64_t seed = 0);

/// `count` sigma candidates at evenly spaced percentiles in [lo, hi] of the
/// pairwise distances, sorted and deduplicated.
std::vector<double> percentile_sigma_grid(const PixelMatrix& rows, KernelKind kind,
                                          double lo = 0.05, double hi = 0.95,
                                          std::size_t count = 60, std::uint64_t seed = 0);

}  // namespace acd
