#include "acd/io_formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <json.hpp>
#include <zlib.h>

#include "acd/error.hpp"

namespace acd {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::Io, "read failed: " + path.string());
  return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T load_le(const std::uint8_t* p) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

fs::path sidecar(const fs::path& path) { return fs::path(path.string() + ".json"); }

ojson parse_json(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return ojson::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

void write_raster(const fs::path& path, const ImageCube& cube) {
  std::vector<std::uint8_t> payload;
  payload.reserve(cube.data().size() * 4);
  for (double v : cube.data()) append_le(payload, static_cast<float>(v));
  write_file(path, payload);
  ojson meta;
  meta["height"] = cube.height();
  meta["width"] = cube.width();
  meta["bands"] = cube.bands();
  meta["dtype"] = "f32";
  meta["interleave"] = "bip";
  write_text(sidecar(path), meta.dump());
}

ImageCube read_raster(const fs::path& path) {
  const ojson meta = parse_json(sidecar(path));
  std::size_t h = 0, w = 0, b = 0;
  try {
    h = meta.at("height").get<std::size_t>();
    w = meta.at("width").get<std::size_t>();
    b = meta.at("bands").get<std::size_t>();
    if (meta.at("dtype").get<std::string>() != "f32" ||
        meta.at("interleave").get<std::string>() != "bip") {
      throw Error(ErrorKind::Io, "unsupported raster layout in " + sidecar(path).string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, "bad raster sidecar " + sidecar(path).string() + ": " + e.what());
  }
  const auto bytes = read_file(path);
  if (bytes.size() != h * w * b * 4) {
    throw Error(ErrorKind::Io, fmt::format("{}: expected {} bytes, found {}", path.string(),
                                           h * w * b * 4, bytes.size()));
  }
  std::vector<double> data(h * w * b);
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = load_le<float>(bytes.data() + 4 * k);
  try {
    return ImageCube(h, w, b, std::move(data));
  } catch (const Error& e) {
    throw Error(ErrorKind::Io, path.string() + ": " + e.what());
  }
}

void write_labels(const fs::path& path, const LabelMap& map) {
  std::vector<double> data(map.labels.begin(), map.labels.end());
  write_raster(path, ImageCube(map.height, map.width, 1, std::move(data)));
}

LabelMap read_labels(const fs::path& path) {
  const ImageCube cube = read_raster(path);
  if (cube.bands() != 1) throw Error(ErrorKind::Io, path.string() + ": label raster must have 1 band");
  LabelMap map{cube.height(), cube.width(), {}};
  map.labels.reserve(cube.pixels());
  for (double v : cube.data()) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorKind::Io, path.string() + ": labels must be 0 or 1");
    map.labels.push_back(v == 1.0 ? 1 : 0);
  }
  return map;
}

std::vector<std::uint8_t> encode_pgm(std::span<const double> values, std::size_t height,
                                     std::size_t width, PgmMode mode) {
  if (values.size() != height * width || values.empty()) {
    throw Error(ErrorKind::InvalidArgument, "PGM value count does not match height x width");
  }
  const std::string header = fmt::format("P5\n{} {}\n255\n", width, height);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + values.size());
  if (mode == PgmMode::Binary) {
    for (double v : values) out.push_back(v != 0.0 ? 255 : 0);
    return out;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (double v : values) {
    const double t = range > 0.0 ? (v - lo) / range : 0.0;
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0)));
  }
  return out;
}

void write_pgm(const fs::path& path, std::span<const double> values, std::size_t height,
               std::size_t width, PgmMode mode) {
  write_file(path, encode_pgm(values, height, width, mode));
}

void write_roc_csv(const fs::path& path, const RocCurve& curve) {
  std::string text = "fpr,tpr,threshold\n";
  for (const auto& p : curve.points) {
    text += fmt::format("{:.17g},{:.17g},{:.17g}\n", p.fpr, p.tpr, p.threshold);
  }
  write_text(path, text);
}

void write_trace_csv(const fs::path& path, const TuneResult& result) {
  const auto field = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.17g}", *v) : std::string();
  };
  std::string text = "nu,sigma,lambda,val_auc\n";
  for (const auto& e : result.trace) {
    text += fmt::format("{},{},{},{:.17g}\n", field(e.params.nu), field(e.params.sigma),
                        field(e.params.lambda), e.val_auc);
  }
  write_text(path, text);
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
    crc = ::crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

// ---------------------------------------------------------------------------
// Model persistence

namespace {

class BlobWriter {
 public:
  explicit BlobWriter(fs::path dir) : dir_(std::move(dir)) {}

  template <typename Derived>
  ojson write(const std::string& name, const Eigen::MatrixBase<Derived>& m) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) append_le(bytes, static_cast<double>(m(r, c)));
    const std::string file = name + ".f64";
    write_file(dir_ / file, bytes);
    ojson ref;
    ref["path"] = file;
    ref["rows"] = m.rows();
    ref["cols"] = m.cols();
    ref["crc32"] = crc32(bytes);
    return ref;
  }

 private:
  fs::path dir_;
};

Matrix read_blob(const fs::path& dir, const ojson& ref) {
  const auto rel = ref.at("path").get<std::string>();
  const fs::path rel_path(rel);
  if (rel_path.is_absolute() || rel.find("..") != std::string::npos) {
    throw Error(ErrorKind::CorruptModel, "corrupt model: blob path escapes model directory");
  }
  const auto rows = ref.at("rows").get<Eigen::Index>();
  const auto cols = ref.at("cols").get<Eigen::Index>();
  const auto expected_crc = ref.at("crc32").get<std::uint32_t>();
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(dir / rel_path);
  } catch (const Error&) {
    throw Error(ErrorKind::CorruptModel, "corrupt model: missing blob " + rel);
  }
  if (rows < 0 || cols < 0 || bytes.size() != static_cast<std::size_t>(rows * cols) * 8) {
    throw Error(ErrorKind::CorruptModel, "corrupt model: size mismatch in " + rel);
  }
  if (crc32(bytes) != expected_crc) {
    throw Error(ErrorKind::CorruptModel, "corrupt model: checksum mismatch in " + rel);
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = load_le<double>(bytes.data() + 8 * static_cast<std::size_t>(r * cols + c));
  return m;
}

ojson config_to_json(const DetectorConfig& c) {
  ojson j;
  j["detector"] = std::string(to_string(c.family()));
  j["beta_x"] = c.beta_x;
  j["beta_y"] = c.beta_y;
  j["distribution"] = c.distribution == Distribution::Gaussian ? "gaussian" : "ec";
  j["nu"] = c.nu;
  j["mode"] = c.mode == Mode::Linear ? "linear" : "kernel";
  j["center"] = c.center;
  j["kernel"] = std::string(to_string(c.kernel));
  j["sigma"] = c.sigma ? ojson(*c.sigma) : ojson(nullptr);
  j["lambda"] = c.lambda ? ojson(*c.lambda) : ojson(nullptr);
  j["term_sigmas"] = c.term_sigmas ? ojson(*c.term_sigmas) : ojson(nullptr);
  return j;
}

DetectorConfig config_from_json(const ojson& j) {
  DetectorConfig c;
  c.beta_x = j.at("beta_x").get<int>();
  c.beta_y = j.at("beta_y").get<int>();
  const auto dist = j.at("distribution").get<std::string>();
  if (dist != "gaussian" && dist != "ec") throw Error(ErrorKind::CorruptModel, "corrupt model: distribution");
  c.distribution = dist == "gaussian" ? Distribution::Gaussian : Distribution::Elliptical;
  c.nu = j.at("nu").get<double>();
  const auto mode = j.at("mode").get<std::string>();
  if (mode != "linear" && mode != "kernel") throw Error(ErrorKind::CorruptModel, "corrupt model: mode");
  c.mode = mode == "linear" ? Mode::Linear : Mode::Kernel;
  c.center = j.at("center").get<bool>();
  c.kernel = parse_kernel_kind(j.at("kernel").get<std::string>());
  if (!j.at("sigma").is_null()) c.sigma = j.at("sigma").get<double>();
  if (!j.at("lambda").is_null()) c.lambda = j.at("lambda").get<double>();
  if (!j.at("term_sigmas").is_null()) c.term_sigmas = j.at("term_sigmas").get<std::array<double, 3>>();
  c.validate();
  return c;
}

ojson params_to_json(const TuneParams& p) {
  ojson j;
  j["nu"] = p.nu ? ojson(*p.nu) : ojson(nullptr);
  j["sigma"] = p.sigma ? ojson(*p.sigma) : ojson(nullptr);
  j["lambda"] = p.lambda ? ojson(*p.lambda) : ojson(nullptr);
  return j;
}

constexpr std::array<const char*, 3> kTermNames{"x", "y", "z"};

}  // namespace

void save_model(const FittedDetector& det, const fs::path& dir, const ModelExtras& extras) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  BlobWriter blobs(dir);

  ojson m;
  m["format_version"] = kModelFormatVersion;
  m["config"] = config_to_json(det.config);
  m["dims"] = {{"d_x", det.d_x}, {"d_y", det.d_y}};
  m["band_stats"] = {
      {"x", {{"mean", blobs.write("stats_x_mean", det.stats_x.mean)},
             {"std", blobs.write("stats_x_std", det.stats_x.std)}}},
      {"y", {{"mean", blobs.write("stats_y_mean", det.stats_y.mean)},
             {"std", blobs.write("stats_y_std", det.stats_y.std)}}},
  };
  ojson terms = ojson::array();
  for (std::size_t t = 0; t < 3; ++t) {
    const std::string prefix = std::string("term_") + kTermNames[t];
    ojson tj;
    tj["name"] = kTermNames[t];
    if (const auto* lin = std::get_if<LinearTerm>(&det.terms[t])) {
      tj["type"] = "linear";
      tj["ridge"] = lin->factor.ridge();
      tj["mean"] = blobs.write(prefix + "_mean", lin->mean);
      tj["factor"] = blobs.write(prefix + "_factor", lin->factor.lower());
    } else {
      const auto& ker = std::get<KernelTerm>(det.terms[t]);
      tj["type"] = "kernel";
      tj["kernel"] = std::string(to_string(ker.spec.kind));
      tj["sigma"] = ker.spec.sigma;
      tj["lambda"] = ker.lambda;
      tj["ridge"] = ker.solve_factor.ridge();
      tj["train"] = blobs.write(prefix + "_train", ker.train);
      tj["factor"] = blobs.write(prefix + "_factor", ker.solve_factor.lower());
    }
    terms.push_back(std::move(tj));
  }
  m["terms"] = std::move(terms);
  if (extras.tuning) {
    m["tuning"] = {{"best_params", params_to_json(extras.tuning->best_params)},
                   {"best_val_auc", extras.tuning->best_val_auc},
                   {"grid_points", extras.tuning->trace.size()}};
  }
  if (extras.metadata_json) {
    try {
      m["metadata"] = ojson::parse(*extras.metadata_json);
    } catch (const nlohmann::json::exception&) {
      m["metadata"] = *extras.metadata_json;
    }
  }
  write_text(dir / kManifestName, m.dump(2) + "\n");
}

FittedDetector load_model(const fs::path& dir) {
  const ojson m = parse_json(dir / kManifestName);
  try {
    const int version = m.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorKind::UnsupportedVersion,
                  "unsupported version: model format " + std::to_string(version));
    }
    FittedDetector det;
    det.config = config_from_json(m.at("config"));
    det.d_x = m.at("dims").at("d_x").get<Eigen::Index>();
    det.d_y = m.at("dims").at("d_y").get<Eigen::Index>();
    const auto& bs = m.at("band_stats");
    det.stats_x = BandStats{read_blob(dir, bs.at("x").at("mean")), read_blob(dir, bs.at("x").at("std"))};
    det.stats_y = BandStats{read_blob(dir, bs.at("y").at("mean")), read_blob(dir, bs.at("y").at("std"))};
    if (det.stats_x.mean.size() != det.d_x || det.stats_y.mean.size() != det.d_y ||
        det.stats_x.std.size() != det.d_x || det.stats_y.std.size() != det.d_y) {
      throw Error(ErrorKind::CorruptModel, "corrupt model: band statistics do not match dims");
    }
    const auto& terms = m.at("terms");
    if (!terms.is_array() || terms.size() != 3) {
      throw Error(ErrorKind::CorruptModel, "corrupt model: expected 3 terms");
    }
    const std::array<Eigen::Index, 3> dims{det.d_x, det.d_y, det.d_x + det.d_y};
    for (std::size_t t = 0; t < 3; ++t) {
      const auto& tj = terms[t];
      const auto type = tj.at("type").get<std::string>();
      const Matrix factor = read_blob(dir, tj.at("factor"));
      const double ridge = tj.at("ridge").get<double>();
      if (type == "linear") {
        const Matrix mean = read_blob(dir, tj.at("mean"));
        if (mean.size() != dims[t] || factor.rows() != dims[t]) {
          throw Error(ErrorKind::CorruptModel, "corrupt model: term dimension mismatch");
        }
        det.terms[t] = LinearTerm{Vector(Eigen::Map<const Vector>(mean.data(), mean.size())),
                                  SpdFactor(factor, ridge)};
      } else if (type == "kernel") {
        KernelSpec spec{parse_kernel_kind(tj.at("kernel").get<std::string>()), tj.at("sigma").get<double>()};
        const Matrix train = read_blob(dir, tj.at("train"));
        if (train.cols() != dims[t] || factor.rows() != train.rows()) {
          throw Error(ErrorKind::CorruptModel, "corrupt model: term dimension mismatch");
        }
        det.terms[t] = KernelTerm{PixelMatrix(train), spec, tj.at("lambda").get<double>(),
                                  SpdFactor(factor, ridge)};
      } else {
        throw Error(ErrorKind::CorruptModel, "corrupt model: unknown term type " + type);
      }
    }
    return det;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::CorruptModel, std::string("corrupt model: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) {
      throw Error(ErrorKind::CorruptModel, std::string("corrupt model: ") + e.what());
    }
    throw;
  }
}

}  // namespace acd
