#include "acd/raster.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "acd/error.hpp"

namespace acd {

ImageCube::ImageCube(std::size_t height, std::size_t width, std::size_t bands,
                     std::vector<double> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
  if (height_ == 0 || width_ == 0 || bands_ == 0) {
    throw Error(ErrorKind::InvalidArgument, "image cube dimensions must be positive");
  }
  if (data_.size() != height_ * width_ * bands_) {
    throw Error(ErrorKind::InvalidArgument,
                "image cube data length " + std::to_string(data_.size()) +
                    " does not match " + std::to_string(height_) + "x" +
                    std::to_string(width_) + "x" + std::to_string(bands_));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::InvalidArgument, "image cube contains non-finite values");
    }
  }
}

PixelMatrix flatten(const ImageCube& cube) {
  PixelMatrix m(cube.pixels(), cube.bands());
  // Row-major storage with BIP layout is the same memory order.
  std::copy(cube.data().begin(), cube.data().end(), m.data());
  return m;
}

ImageCube unflatten(const PixelMatrix& m, std::size_t height, std::size_t width) {
  if (static_cast<std::size_t>(m.rows()) != height * width) {
    throw Error(ErrorKind::InvalidArgument, "pixel count does not match raster shape");
  }
  std::vector<double> data(m.data(), m.data() + m.size());
  return ImageCube(height, width, static_cast<std::size_t>(m.cols()), std::move(data));
}

PixelMatrix stack_pair(const PixelMatrix& x, const PixelMatrix& y) {
  if (x.rows() != y.rows()) {
    throw Error(ErrorKind::InvalidArgument, "unaligned pair");
  }
  PixelMatrix z(x.rows(), x.cols() + y.cols());
  z.leftCols(x.cols()) = x;
  z.rightCols(y.cols()) = y;
  return z;
}

PixelMatrix select_rows(const PixelMatrix& m, const std::vector<std::size_t>& indices) {
  PixelMatrix out(static_cast<Eigen::Index>(indices.size()), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= static_cast<std::size_t>(m.rows())) {
      throw Error(ErrorKind::InvalidArgument, "row index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

BandStats standardize_fit(const PixelMatrix& m) {
  if (m.rows() < 2) {
    throw Error(ErrorKind::InvalidArgument, "standardization needs at least 2 samples");
  }
  const double n = static_cast<double>(m.rows());
  BandStats s;
  s.mean = m.colwise().sum().transpose() / n;
  s.std.resize(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double var = (m.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.std(j) = sd < 1e-12 * (std::abs(s.mean(j)) + 1.0) ? 1.0 : sd;
  }
  return s;
}

namespace {

void check_stats(const PixelMatrix& m, const BandStats& s) {
  if (s.mean.size() != m.cols() || s.std.size() != m.cols()) {
    throw Error(ErrorKind::InvalidArgument,
                "band statistics have " + std::to_string(s.mean.size()) +
                    " bands, data has " + std::to_string(m.cols()));
  }
}

}  // namespace

PixelMatrix standardize_apply(const PixelMatrix& m, const BandStats& s) {
  check_stats(m, s);
  PixelMatrix out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    out.col(j) = (m.col(j).array() - s.mean(j)) / s.std(j);
  }
  return out;
}

PixelMatrix standardize_invert(const PixelMatrix& m, const BandStats& s) {
  check_stats(m, s);
  PixelMatrix out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    out.col(j) = m.col(j).array() * s.std(j) + s.mean(j);
  }
  return out;
}

std::vector<std::size_t> sample_pixels(std::size_t n_total, std::size_t k, Rng& rng) {
  if (k > n_total) {
    throw Error(ErrorKind::InvalidArgument,
                "cannot sample " + std::to_string(k) + " of " + std::to_string(n_total) + " pixels");
  }
  std::vector<std::size_t> idx(n_total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

std::vector<std::size_t> sample_pixels(std::size_t n_total, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  return sample_pixels(n_total, k, rng);
}

}  // namespace acd
