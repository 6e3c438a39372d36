#include "acd/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acd/error.hpp"

namespace acd {

ImageCube pervasive_noise(const ImageCube& cube, double std, Rng& rng) {
  if (!(std >= 0.0) || !std::isfinite(std)) {
    throw Error(ErrorKind::InvalidArgument, "noise std must be nonnegative");
  }
  if (std == 0.0) return cube;
  const BandStats stats = standardize_fit(flatten(cube));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> data = cube.data();
  const std::size_t bands = cube.bands();
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] += std * stats.std(static_cast<Eigen::Index>(i % bands)) * normal(rng);
  }
  return ImageCube(cube.height(), cube.width(), bands, std::move(data));
}

ImageCube pervasive_noise(const ImageCube& cube, double std, std::uint64_t seed) {
  Rng rng(seed);
  return pervasive_noise(cube, std, rng);
}

namespace {

// Uniform derangement by rejection: shuffle until no fixed point remains.
// Expected ~e attempts.
std::vector<std::size_t> random_derangement(std::size_t k, Rng& rng) {
  std::vector<std::size_t> perm(k);
  for (;;) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = k - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    bool fixed = false;
    for (std::size_t i = 0; i < k && !fixed; ++i) fixed = perm[i] == i;
    if (!fixed) return perm;
  }
}

}  // namespace

SimulationResult scramble_anomalies(const ImageCube& cube, double frac, Rng& rng) {
  if (!(frac > 0.0 && frac <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "scramble fraction must lie in (0, 1]");
  }
  const std::size_t n = cube.pixels();
  const auto k = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  if (k < 2) {
    throw Error(ErrorKind::InvalidArgument, "cannot derange fewer than 2 pixels");
  }
  std::vector<std::size_t> selected = sample_pixels(n, k, rng);
  std::sort(selected.begin(), selected.end());
  const std::vector<std::size_t> perm = random_derangement(k, rng);

  const std::size_t bands = cube.bands();
  std::vector<double> data = cube.data();
  SimulationResult out;
  out.labels.assign(n, 0);
  out.source.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t dst = selected[i];
    const std::size_t src = selected[perm[i]];
    std::copy_n(cube.data().begin() + static_cast<std::ptrdiff_t>(src * bands), bands,
                data.begin() + static_cast<std::ptrdiff_t>(dst * bands));
    out.labels[dst] = 1;
    out.source[i] = src;
  }
  out.selected = std::move(selected);
  out.second_image = ImageCube(cube.height(), cube.width(), bands, std::move(data));
  return out;
}

SimulationResult scramble_anomalies(const ImageCube& cube, double frac, std::uint64_t seed) {
  Rng rng(seed);
  return scramble_anomalies(cube, frac, rng);
}

SimulationResult simulate_change(const ImageCube& cube, double noise_std, double scramble_frac,
                                 std::uint64_t seed) {
  Rng rng(seed);
  const ImageCube noisy = pervasive_noise(cube, noise_std, rng);
  return scramble_anomalies(noisy, scramble_frac, rng);
}

ImageCube gaussian_mixture_cube(std::size_t height, std::size_t width, std::size_t bands,
                                std::size_t components, std::uint64_t seed) {
  if (components == 0 || bands == 0) {
    throw Error(ErrorKind::InvalidArgument, "mixture needs at least one component and band");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(bands);
  std::vector<Vector> means;
  std::vector<Matrix> mixing;
  for (std::size_t c = 0; c < components; ++c) {
    Vector mu(d);
    for (Eigen::Index j = 0; j < d; ++j) mu(j) = 3.0 * normal(rng);
    Matrix a(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index s = 0; s < d; ++s) a(r, s) = 0.5 * normal(rng) / std::sqrt(static_cast<double>(d));
    a.diagonal().array() += 0.3;
    means.push_back(std::move(mu));
    mixing.push_back(std::move(a));
  }
  std::uniform_int_distribution<std::size_t> pick(0, components - 1);
  std::vector<double> data(height * width * bands);
  Vector e(d);
  for (std::size_t p = 0; p < height * width; ++p) {
    const std::size_t c = pick(rng);
    for (Eigen::Index j = 0; j < d; ++j) e(j) = normal(rng);
    const Vector v = means[c] + mixing[c] * e;
    std::copy(v.data(), v.data() + d, data.begin() + static_cast<std::ptrdiff_t>(p * bands));
  }
  return ImageCube(height, width, bands, std::move(data));
}

}  // namespace acd
