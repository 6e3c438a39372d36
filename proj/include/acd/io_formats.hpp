#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acd/detectors.hpp"
#include "acd/eval.hpp"
#include "acd/raster.hpp"
#include "acd/tune.hpp"

namespace acd {

// Raster: raw little-endian float32, BIP, plus `<path>.json` sidecar
// {"height":H,"width":W,"bands":D,"dtype":"f32","interleave":"bip"}.
void write_raster(const std::filesystem::path& path, const ImageCube& cube);
ImageCube read_raster(const std::filesystem::path& path);

struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;
};

/// Single-band raster with values in {0, 1}.
void write_labels(const std::filesystem::path& path, const LabelMap& map);
LabelMap read_labels(const std::filesystem::path& path);

enum class PgmMode {
  Binary,  ///< {0, 1} -> {0, 255}
  Scaled,  ///< min-max scaled to 0..255; constant input renders as 0
};

/// P5 PGM with maxval 255.
void write_pgm(const std::filesystem::path& path, std::span<const double> values,
               std::size_t height, std::size_t width, PgmMode mode);
/// The bytes write_pgm would produce.
std::vector<std::uint8_t> encode_pgm(std::span<const double> values, std::size_t height,
                                     std::size_t width, PgmMode mode);

/// Header `fpr,tpr,threshold`, 17 significant digits.
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);
/// Header `nu,sigma,lambda,val_auc`; unsearched parameters are left empty.
void write_trace_csv(const std::filesystem::path& path, const TuneResult& result);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kManifestName = "model.json";

struct ModelExtras {
  std::optional<TuneResult> tuning;  ///< best parameters and validation AUC
  std::optional<std::string> metadata_json;  ///< free-form, not part of determinism
};

/// Writes `dir/model.json` plus float64 little-endian blobs referenced by
/// relative path, each with element counts and CRC32.
void save_model(const FittedDetector& det, const std::filesystem::path& dir,
                const ModelExtras& extras = {});
/// Throws CorruptModel ("corrupt model") on checksum or size mismatch and
/// UnsupportedVersion ("unsupported version") on an unknown format_version.
FittedDetector load_model(const std::filesystem::path& dir);

}  // namespace acd
