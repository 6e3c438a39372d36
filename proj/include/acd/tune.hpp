#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "acd/detectors.hpp"

namespace acd {

/// Candidate values per hyperparameter. An empty list means the parameter
/// is not searched (fixed by the config or irrelevant to it).
struct TuneGrid {
  std::vector<double> nu;
  std::vector<double> sigma;  ///< absolute bandwidths
  std::vector<double> lambda;
};

struct TuneParams {
  std::optional<double> nu;
  std::optional<double> sigma;
  std::optional<double> lambda;
};

struct TraceEntry {
  TuneParams params;
  double val_auc = 0.0;
};

struct TuneResult {
  TuneParams best_params;
  double best_val_auc = 0.0;
  std::vector<TraceEntry> trace;  ///< lexicographic (nu, sigma, lambda) order
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

/// `count` values from lo to hi, evenly spaced in log; endpoints exact.
std::vector<double> logspace(double lo, double hi, std::size_t count);

/// nu: 100 points in [1e-5, 1e10] (elliptical only). sigma: 60 multipliers
/// in [1e-3, 1e3] times heuristic_sigma (rbf/sam kernel only). lambda: 30
/// points in [1e-10, 10^2.5] (kernel only).
TuneGrid default_grid(const DetectorConfig& config, double heuristic_sigma);

/// Mean pairwise distance of the standardized, stacked training pixels:
/// the same quantity fit() uses when sigma is left unset.
double training_sigma_heuristic(const PixelMatrix& x_train, const PixelMatrix& y_train,
                                KernelKind kind);

/// default_grid anchored at training_sigma_heuristic. For the sam kernel
/// the sigma axis instead holds `sam_points` percentiles (5% to 95%) of
/// the pairwise spectral angles.
TuneGrid training_grid(const DetectorConfig& config, const PixelMatrix& x_train,
                       const PixelMatrix& y_train, std::size_t sam_points = 60);

/// Returns `config` with the searched parameters replaced by `p`.
DetectorConfig apply_params(DetectorConfig config, const TuneParams& p);

/// Exhaustive search on a fixed split. For each (sigma, lambda) the detector
/// is fit once and every nu is evaluated on the cached quadratic forms. Ties
/// go to the lexicographically smallest (nu, sigma, lambda).
TuneResult grid_search_split(const PixelMatrix& x_train, const PixelMatrix& y_train,
                             const PixelMatrix& x_val, const PixelMatrix& y_val,
                             std::span<const std::uint8_t> val_labels,
                             const DetectorConfig& config, const TuneGrid& grid);

/// Searches several configurations that can share one fit per (sigma,
/// lambda): same mode, kernel, centering and fixed sigma/lambda; betas,
/// distribution and nu may differ. The nu axis applies to elliptical
/// configurations only. Results are in `configs` order.
std::vector<TuneResult> grid_search_split_shared(const PixelMatrix& x_train, const PixelMatrix& y_train,
                                                const PixelMatrix& x_val, const PixelMatrix& y_val,
                                                std::span<const std::uint8_t> val_labels,
                                                std::span<const DetectorConfig> configs,
                                                const TuneGrid& grid);

/// Draws n_train pixels among the label-0 positions, then n_val pixels from
/// the remaining positions (either class), and runs grid_search_split.
TuneResult grid_search(const PixelMatrix& x, const PixelMatrix& y,
                       std::span<const std::uint8_t> labels, const DetectorConfig& config,
                       const TuneGrid& grid, std::size_t n_train, std::size_t n_val,
                       std::uint64_t seed);

/// Draw order shared by grid_search and callers that need the same split.
struct TrainValSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};
TrainValSplit draw_train_val(std::span<const std::uint8_t> labels, std::size_t n_train,
                             std::size_t n_val, Rng& rng);

}  // namespace acd
