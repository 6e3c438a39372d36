#pragma once

#include <cstdint>
#include <vector>

#include "acd/raster.hpp"

namespace acd {

struct SimulationResult {
  ImageCube second_image;
  std::vector<std::uint8_t> labels;  ///< 1 = anomalous change, length H*W
  std::vector<std::size_t> selected;  ///< scrambled pixel indices, ascending
  std::vector<std::size_t> source;    ///< source[i]: pixel whose spectrum moved to selected[i]
};

/// Adds independent N(0, std^2) noise in standardized units: each band's
/// draw is scaled by that band's population std before being added.
/// Draws are taken in BIP order from `rng`.
ImageCube pervasive_noise(const ImageCube& cube, double std, Rng& rng);
ImageCube pervasive_noise(const ImageCube& cube, double std, std::uint64_t seed);

/// Picks k = round(frac * H * W) pixels and moves their spectra around by a
/// uniformly drawn derangement of the selected set. Throws when k < 2.
SimulationResult scramble_anomalies(const ImageCube& cube, double frac, Rng& rng);
SimulationResult scramble_anomalies(const ImageCube& cube, double frac, std::uint64_t seed);

/// Noise first, then scrambling, from one generator.
SimulationResult simulate_change(const ImageCube& cube, double noise_std, double scramble_frac,
                                 std::uint64_t seed);

/// Synthetic test scene: each pixel drawn from one of `components` Gaussian
/// clusters with random means and covariances.
ImageCube gaussian_mixture_cube(std::size_t height, std::size_t width, std::size_t bands,
                                std::size_t components, std::uint64_t seed);

}  // namespace acd
