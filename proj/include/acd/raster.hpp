#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace acd {

/// n x d matrix of pixel spectra, one pixel per row.
using PixelMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Seeded generator used for every random draw in the library.
using Rng = std::mt19937_64;

/// H x W x D raster, row-major pixel order, band-interleaved-by-pixel.
/// All values are finite; the constructor rejects anything else.
class ImageCube {
 public:
  ImageCube() = default;
  ImageCube(std::size_t height, std::size_t width, std::size_t bands,
            std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  const std::vector<double>& data() const noexcept { return data_; }

  double at(std::size_t row, std::size_t col, std::size_t band) const {
    return data_[(row * width_ + col) * bands_ + band];
  }

  friend bool operator==(const ImageCube&, const ImageCube&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> data_;
};

/// Per-band mean and population standard deviation.
struct BandStats {
  Vector mean;
  Vector std;
};

PixelMatrix flatten(const ImageCube& cube);
ImageCube unflatten(const PixelMatrix& m, std::size_t height,
                    std::size_t width);

/// Row-wise concatenation [x, y]. Throws "unaligned pair" on row mismatch.
PixelMatrix stack_pair(const PixelMatrix& x, const PixelMatrix& y);

/// Selects rows by index, in the order given.
PixelMatrix select_rows(const PixelMatrix& m,
                        const std::vector<std::size_t>& indices);

/// Columns whose std falls below 1e-12 * (|mean| + 1) get std = 1.
BandStats standardize_fit(const PixelMatrix& m);
PixelMatrix standardize_apply(const PixelMatrix& m, const BandStats& s);
PixelMatrix standardize_invert(const PixelMatrix& m, const BandStats& s);

/// k distinct indices in [0, n_total), uniform without replacement
/// (partial Fisher-Yates over the identity permutation).
std::vector<std::size_t> sample_pixels(std::size_t n_total, std::size_t k,
                                       std::uint64_t seed);
std::vector<std::size_t> sample_pixels(std::size_t n_total, std::size_t k,
                                       Rng& rng);

}  // namespace acd
