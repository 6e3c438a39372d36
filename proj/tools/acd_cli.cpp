// acd: anomalous change detection command-line front end.
//
// Exit codes: 0 success, 1 I/O, 2 usage, 3 numerical failure, 4 degenerate
// data.

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "acd/detectors.hpp"
#include "acd/error.hpp"
#include "acd/eval.hpp"
#include "acd/io_formats.hpp"
#include "acd/simulate.hpp"
#include "acd/tune.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int { kOk = 0, kIo = 1, kUsage = 2, kNumerical = 3, kDegenerate = 4 };

int exit_code_for(acd::ErrorKind kind) {
  switch (kind) {
    case acd::ErrorKind::Io:
    case acd::ErrorKind::CorruptModel:
    case acd::ErrorKind::UnsupportedVersion: return kIo;
    case acd::ErrorKind::InvalidArgument: return kUsage;
    case acd::ErrorKind::Numerical: return kNumerical;
    case acd::ErrorKind::DegenerateData: return kDegenerate;
  }
  return kIo;
}

struct Globals {
  std::uint64_t seed = 42;
  int threads = 0;
};

// Parses "auto" or a positive number.
std::optional<double> auto_or_value(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && v > 0.0) return v;
  } catch (const std::exception&) {
  }
  throw acd::Error(acd::ErrorKind::InvalidArgument,
                   fmt::format("{} expects 'auto' or a positive number, got '{}'", flag, text));
}

struct DetectorFlags {
  std::string detector = "hacd";
  std::string dist = "gaussian";
  double nu = 1.0;
  std::string mode = "linear";
  std::string kernel = "rbf";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--detector", detector, "Family member")
        ->check(CLI::IsMember({"rx", "xy", "yx", "hacd"}))
        ->capture_default_str();
    cmd->add_option("--dist", dist, "Distribution")
        ->check(CLI::IsMember({"gaussian", "ec"}))
        ->capture_default_str();
    cmd->add_option("--mode", mode, "Linear or kernel detector")
        ->check(CLI::IsMember({"linear", "kernel"}))
        ->capture_default_str();
    cmd->add_option("--kernel", kernel, "Kernel function (kernel mode)")
        ->check(CLI::IsMember({"linear", "rbf", "sam"}))
        ->capture_default_str();
  }

  acd::DetectorConfig config() const {
    auto c = acd::DetectorConfig::make(
        acd::parse_family(detector),
        dist == "ec" ? acd::Distribution::Elliptical : acd::Distribution::Gaussian,
        mode == "kernel" ? acd::Mode::Kernel : acd::Mode::Linear);
    c.nu = nu;
    c.kernel = acd::parse_kernel_kind(kernel);
    return c;
  }
};

struct ImagePair {
  acd::ImageCube x;
  acd::ImageCube y;
};

ImagePair read_pair(const fs::path& x_path, const fs::path& y_path) {
  ImagePair p{acd::read_raster(x_path), acd::read_raster(y_path)};
  if (p.x.height() != p.y.height() || p.x.width() != p.y.width()) {
    throw acd::Error(acd::ErrorKind::InvalidArgument,
                     fmt::format("unaligned pair: {}x{} vs {}x{}", p.x.height(), p.x.width(),
                                 p.y.height(), p.y.width()));
  }
  return p;
}

std::span<const double> as_span(const acd::Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

acd::Vector read_scores(const fs::path& path, std::size_t& height, std::size_t& width) {
  const acd::ImageCube cube = acd::read_raster(path);
  if (cube.bands() != 1) {
    throw acd::Error(acd::ErrorKind::InvalidArgument, path.string() + ": score raster must have 1 band");
  }
  height = cube.height();
  width = cube.width();
  return Eigen::Map<const acd::Vector>(cube.data().data(), static_cast<Eigen::Index>(cube.pixels()));
}

void require_same_shape(std::size_t h, std::size_t w, const acd::LabelMap& labels) {
  if (labels.height != h || labels.width != w) {
    throw acd::Error(acd::ErrorKind::InvalidArgument, "labels do not match the score raster shape");
  }
}

// --- subcommands -----------------------------------------------------------

struct SynthArgs {
  std::size_t height = 64, width = 64, bands = 8, components = 3;
  fs::path out;
};

int run_synth(const SynthArgs& a, const Globals& g) {
  acd::write_raster(a.out, acd::gaussian_mixture_cube(a.height, a.width, a.bands, a.components, g.seed));
  return kOk;
}

struct SimulateArgs {
  fs::path input, out, labels;
  double noise_std = 0.1;
  double scramble_frac = 0.01;
};

// Draw order: all noise samples in BIP order, then the scrambled pixel
// selection, then the derangement; one generator seeded with --seed.
int run_simulate(const SimulateArgs& a, const Globals& g) {
  if (!(a.scramble_frac > 0.0)) {
    throw acd::Error(acd::ErrorKind::InvalidArgument, "--scramble-frac must be > 0");
  }
  const acd::ImageCube cube = acd::read_raster(a.input);
  const acd::SimulationResult r = acd::simulate_change(cube, a.noise_std, a.scramble_frac, g.seed);
  acd::write_raster(a.out, r.second_image);
  acd::write_labels(a.labels, acd::LabelMap{cube.height(), cube.width(), r.labels});
  std::cout << fmt::format("scrambled {} of {} pixels\n", r.selected.size(), cube.pixels());
  return kOk;
}

struct FitArgs {
  fs::path x, y, model_out;
  std::optional<fs::path> train_labels;
  DetectorFlags det;
  std::string sigma = "auto";
  std::string lambda = "auto";
  std::size_t train_samples = 1000;
};

// Draw order: training pixel sample (background pixels only when labels are
// given).
int run_fit(const FitArgs& a, const Globals& g) {
  acd::DetectorConfig config = a.det.config();
  config.sigma = auto_or_value(a.sigma, "--sigma");
  config.lambda = auto_or_value(a.lambda, "--lambda");
  config.validate();

  const ImagePair img = read_pair(a.x, a.y);
  const std::size_t n_pixels = img.x.pixels();
  std::vector<std::uint8_t> labels(n_pixels, 0);
  if (a.train_labels) {
    const acd::LabelMap lm = acd::read_labels(*a.train_labels);
    require_same_shape(img.x.height(), img.x.width(), lm);
    labels = lm.labels;
  }
  acd::Rng rng(g.seed);
  const auto split = acd::draw_train_val(labels, a.train_samples, 0, rng);
  const acd::PixelMatrix xm = acd::flatten(img.x);
  const acd::PixelMatrix ym = acd::flatten(img.y);
  const acd::FittedDetector det =
      acd::fit(acd::select_rows(xm, split.train), acd::select_rows(ym, split.train), config);
  acd::save_model(det, a.model_out);
  std::cout << fmt::format("fitted {} on {} pixels", det.config.name(), split.train.size());
  if (det.config.mode == acd::Mode::Kernel) {
    std::cout << fmt::format(" (sigma={:.6g}, lambda={:.6g})", *det.config.sigma, *det.config.lambda);
  }
  std::cout << "\n";
  return kOk;
}

struct ScoreArgs {
  fs::path model, x, y, out;
};

int run_score(const ScoreArgs& a, const Globals&) {
  const acd::FittedDetector det = acd::load_model(a.model);
  const ImagePair img = read_pair(a.x, a.y);
  const acd::Vector s = acd::score_pixels(det, acd::flatten(img.x), acd::flatten(img.y));
  acd::write_raster(a.out, acd::ImageCube(img.x.height(), img.x.width(), 1,
                                          std::vector<double>(s.data(), s.data() + s.size())));
  return kOk;
}

struct RocArgs {
  fs::path scores, labels, out;
};

int run_roc(const RocArgs& a, const Globals&) {
  std::size_t h = 0, w = 0;
  const acd::Vector s = read_scores(a.scores, h, w);
  const acd::LabelMap lm = acd::read_labels(a.labels);
  require_same_shape(h, w, lm);
  const acd::RocCurve curve = acd::roc_curve(as_span(s), lm.labels);
  acd::write_roc_csv(a.out, curve);
  std::cout << fmt::format("auc={:.17g}\n", curve.auc);
  return kOk;
}

struct MapArgs {
  fs::path scores, out;
  std::optional<double> threshold, tpr_rate, quantile;
  std::optional<fs::path> labels;
  bool scaled = false;
};

int run_map(const MapArgs& a, const Globals&) {
  const int modes = (a.threshold ? 1 : 0) + (a.tpr_rate ? 1 : 0) + (a.quantile ? 1 : 0) + (a.scaled ? 1 : 0);
  if (modes != 1) {
    throw acd::Error(acd::ErrorKind::InvalidArgument,
                     "give exactly one of --threshold, --tpr-rate, --quantile, --scaled");
  }
  if (a.tpr_rate && !a.labels) {
    throw acd::Error(acd::ErrorKind::InvalidArgument, "--tpr-rate requires --labels");
  }
  std::size_t h = 0, w = 0;
  const acd::Vector s = read_scores(a.scores, h, w);
  if (a.scaled) {
    acd::write_pgm(a.out, as_span(s), h, w, acd::PgmMode::Scaled);
    return kOk;
  }
  double t = 0.0;
  if (a.threshold) {
    t = *a.threshold;
  } else if (a.tpr_rate) {
    const acd::LabelMap lm = acd::read_labels(*a.labels);
    require_same_shape(h, w, lm);
    t = acd::threshold_at_tpr(as_span(s), lm.labels, *a.tpr_rate);
  } else {
    t = acd::threshold_at_quantile(as_span(s), *a.quantile);
  }
  const auto flags = acd::apply_threshold(as_span(s), t);
  const std::vector<double> values(flags.begin(), flags.end());
  acd::write_pgm(a.out, values, h, w, acd::PgmMode::Binary);
  std::size_t flagged = 0;
  for (auto f : flags) flagged += f;
  std::cout << fmt::format("threshold={:.17g} flagged={}\n", t, flagged);
  return kOk;
}

struct TuneArgs {
  fs::path x, y, labels;
  std::optional<fs::path> trace_out, model_out;
  DetectorFlags det;
  std::size_t n_train = 1000, n_val = 4000, sigma_points = 60;
  std::string lambda = "grid";
};

// Draw order: training pixels (background only), then validation pixels
// from the remainder.
int run_tune(const TuneArgs& a, const Globals& g) {
  acd::DetectorConfig config = a.det.config();
  const bool lambda_grid = a.lambda == "grid";
  if (!lambda_grid) config.lambda = auto_or_value(a.lambda, "--lambda");
  config.validate();

  const ImagePair img = read_pair(a.x, a.y);
  const acd::LabelMap lm = acd::read_labels(a.labels);
  require_same_shape(img.x.height(), img.x.width(), lm);
  const acd::PixelMatrix xm = acd::flatten(img.x);
  const acd::PixelMatrix ym = acd::flatten(img.y);

  acd::Rng rng(g.seed);
  const auto split = acd::draw_train_val(lm.labels, a.n_train, a.n_val, rng);
  const acd::PixelMatrix x_train = acd::select_rows(xm, split.train);
  const acd::PixelMatrix y_train = acd::select_rows(ym, split.train);
  std::vector<std::uint8_t> val_labels;
  for (std::size_t i : split.val) val_labels.push_back(lm.labels[i]);

  acd::TuneGrid grid = acd::training_grid(config, x_train, y_train, a.sigma_points);
  if (!lambda_grid) grid.lambda.clear();

  acd::TuneResult result = acd::grid_search_split(
      x_train, y_train, acd::select_rows(xm, split.val), acd::select_rows(ym, split.val),
      val_labels, config, grid);
  result.train_indices = split.train;
  result.val_indices = split.val;

  if (a.trace_out) acd::write_trace_csv(*a.trace_out, result);
  if (a.model_out) {
    const acd::FittedDetector det = acd::fit(x_train, y_train, acd::apply_params(config, result.best_params));
    acd::save_model(det, *a.model_out, acd::ModelExtras{result, std::nullopt});
  }
  const auto show = [](const std::optional<double>& v) { return v ? fmt::format("{:.6g}", *v) : std::string("-"); };
  std::cout << fmt::format("best nu={} sigma={} lambda={} val_auc={:.17g} ({} grid points)\n",
                           show(result.best_params.nu), show(result.best_params.sigma),
                           show(result.best_params.lambda), result.best_val_auc, result.trace.size());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anomalous change detection for co-registered image pairs"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (default: all cores; ACD_THREADS overrides)")
      ->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic Gaussian-mixture raster");
  c_synth->add_option("--height", synth.height)->check(CLI::PositiveNumber)->capture_default_str();
  c_synth->add_option("--width", synth.width)->check(CLI::PositiveNumber)->capture_default_str();
  c_synth->add_option("--bands", synth.bands)->check(CLI::PositiveNumber)->capture_default_str();
  c_synth->add_option("--components", synth.components)->check(CLI::PositiveNumber)->capture_default_str();
  c_synth->add_option("--out", synth.out)->required();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Add pervasive noise and scramble anomalous pixels");
  c_sim->add_option("--input", sim.input)->required();
  c_sim->add_option("--noise-std", sim.noise_std)->check(CLI::NonNegativeNumber)->capture_default_str();
  c_sim->add_option("--scramble-frac", sim.scramble_frac)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_sim->add_option("--out", sim.out)->required();
  c_sim->add_option("--labels", sim.labels)->required();

  FitArgs fitargs;
  auto* c_fit = app.add_subcommand("fit", "Fit a detector on sampled training pixels");
  c_fit->add_option("--x", fitargs.x)->required();
  c_fit->add_option("--y", fitargs.y)->required();
  fitargs.det.add_to(c_fit);
  c_fit->add_option("--nu", fitargs.det.nu, "Student-t shape (ec)")->check(CLI::PositiveNumber)->capture_default_str();
  c_fit->add_option("--sigma", fitargs.sigma, "auto (mean pairwise distance) or a value")->capture_default_str();
  c_fit->add_option("--lambda", fitargs.lambda, "auto (1e-5/n) or a value")->capture_default_str();
  c_fit->add_option("--train-samples", fitargs.train_samples)->check(CLI::PositiveNumber)->capture_default_str();
  c_fit->add_option("--train-labels", fitargs.train_labels, "Restrict training to label-0 pixels");
  c_fit->add_option("--model-out", fitargs.model_out)->required();

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Score every pixel of an image pair");
  c_score->add_option("--model", score.model)->required();
  c_score->add_option("--x", score.x)->required();
  c_score->add_option("--y", score.y)->required();
  c_score->add_option("--out", score.out)->required();

  RocArgs roc;
  auto* c_roc = app.add_subcommand("roc", "ROC curve and AUC of a score raster");
  c_roc->add_option("--scores", roc.scores)->required();
  c_roc->add_option("--labels", roc.labels)->required();
  c_roc->add_option("--out", roc.out)->required();

  MapArgs map;
  auto* c_map = app.add_subcommand("map", "Render a detection map as PGM");
  c_map->add_option("--scores", map.scores)->required();
  c_map->add_option("--threshold", map.threshold);
  c_map->add_option("--tpr-rate", map.tpr_rate)->check(CLI::Range(0.0, 1.0));
  c_map->add_option("--quantile", map.quantile)->check(CLI::Range(0.0, 1.0));
  c_map->add_option("--labels", map.labels);
  c_map->add_flag("--scaled", map.scaled, "Min-max scaled score image instead of a binary map");
  c_map->add_option("--out", map.out)->required();

  TuneArgs tune;
  auto* c_tune = app.add_subcommand("tune", "Grid-search nu, sigma and lambda by validation AUC");
  c_tune->add_option("--x", tune.x)->required();
  c_tune->add_option("--y", tune.y)->required();
  c_tune->add_option("--labels", tune.labels)->required();
  tune.det.add_to(c_tune);
  c_tune->add_option("--n-train", tune.n_train)->check(CLI::PositiveNumber)->capture_default_str();
  c_tune->add_option("--n-val", tune.n_val)->check(CLI::PositiveNumber)->capture_default_str();
  c_tune->add_option("--sigma-points", tune.sigma_points, "Percentile grid size for the sam kernel")
      ->check(CLI::PositiveNumber)->capture_default_str();
  c_tune->add_option("--lambda", tune.lambda, "grid, auto (1e-5/n) or a value")->capture_default_str();
  c_tune->add_option("--trace-out", tune.trace_out);
  c_tune->add_option("--model-out", tune.model_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  int threads = g.threads;
  if (const char* env = std::getenv("ACD_THREADS")) {
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "error: ACD_THREADS must be an integer\n";
      return kUsage;
    }
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*c_synth) return run_synth(synth, g);
    if (*c_sim) return run_simulate(sim, g);
    if (*c_fit) return run_fit(fitargs, g);
    if (*c_score) return run_score(score, g);
    if (*c_roc) return run_roc(roc, g);
    if (*c_map) return run_map(map, g);
    if (*c_tune) return run_tune(tune, g);
  } catch (const acd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}
