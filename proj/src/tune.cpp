#include "acd/tune.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "acd/error.hpp"
#include "acd/eval.hpp"

namespace acd {

std::vector<double> logspace(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi >= lo) || count == 0) {
    throw Error(ErrorKind::InvalidArgument, "logspace needs 0 < lo <= hi and count > 0");
  }
  std::vector<double> out(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = std::exp(a + t * (b - a));
  }
  out.front() = lo;
  if (count > 1) out.back() = hi;
  return out;
}

TuneGrid default_grid(const DetectorConfig& config, double heuristic_sigma) {
  TuneGrid g;
  if (config.distribution == Distribution::Elliptical) {
    g.nu = logspace(1e-5, 1e10, 100);
  }
  if (config.mode == Mode::Kernel) {
    if (config.kernel != KernelKind::Linear) {
      if (!(heuristic_sigma > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "heuristic sigma must be positive");
      }
      g.sigma = logspace(1e-3, 1e3, 60);
      for (double& s : g.sigma) s *= heuristic_sigma;
    }
    g.lambda = logspace(1e-10, std::pow(10.0, 2.5), 30);
  }
  return g;
}

namespace {

PixelMatrix standardized_z(const PixelMatrix& x_train, const PixelMatrix& y_train) {
  return stack_pair(standardize_apply(x_train, standardize_fit(x_train)),
                    standardize_apply(y_train, standardize_fit(y_train)));
}

}  // namespace

double training_sigma_heuristic(const PixelMatrix& x_train, const PixelMatrix& y_train,
                                KernelKind kind) {
  return sigma_heuristic(standardized_z(x_train, y_train), SigmaHeuristic::Mean, kind);
}

TuneGrid training_grid(const DetectorConfig& config, const PixelMatrix& x_train,
                       const PixelMatrix& y_train, std::size_t sam_points) {
  if (config.mode != Mode::Kernel || config.kernel == KernelKind::Linear) {
    return default_grid(config, 0.0);
  }
  const PixelMatrix z = standardized_z(x_train, y_train);
  TuneGrid g = default_grid(config, sigma_heuristic(z, SigmaHeuristic::Mean, config.kernel));
  if (config.kernel == KernelKind::Sam) {
    g.sigma = percentile_sigma_grid(z, KernelKind::Sam, 0.05, 0.95, sam_points);
  }
  return g;
}

DetectorConfig apply_params(DetectorConfig config, const TuneParams& p) {
  if (p.nu) config.nu = *p.nu;
  if (p.sigma) config.sigma = *p.sigma;
  if (p.lambda) config.lambda = *p.lambda;
  return config;
}

namespace {

std::vector<std::optional<double>> axis(const std::vector<double>& values) {
  if (values.empty()) return {std::nullopt};
  return {values.begin(), values.end()};
}

void check_axis(const std::vector<double>& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i]) || (i > 0 && !(v[i] > v[i - 1]))) {
      throw Error(ErrorKind::InvalidArgument,
                  std::string(name) + " grid must be positive, finite and strictly ascending");
    }
  }
}

}  // namespace

std::vector<TuneResult> grid_search_split_shared(const PixelMatrix& x_train, const PixelMatrix& y_train,
                                                const PixelMatrix& x_val, const PixelMatrix& y_val,
                                                std::span<const std::uint8_t> val_labels,
                                                std::span<const DetectorConfig> configs,
                                                const TuneGrid& grid) {
  check_axis(grid.nu, "nu");
  check_axis(grid.sigma, "sigma");
  check_axis(grid.lambda, "lambda");
  if (configs.empty()) throw Error(ErrorKind::InvalidArgument, "no configurations to search");
  for (const auto& c : configs) {
    c.validate();
    const auto& f = configs.front();
    if (c.mode != f.mode || c.kernel != f.kernel || c.center != f.center || c.term_sigmas != f.term_sigmas ||
        c.sigma != f.sigma || c.lambda != f.lambda) {
      throw Error(ErrorKind::InvalidArgument, "configurations do not share a fit");
    }
  }
  if (static_cast<std::size_t>(x_val.rows()) != val_labels.size()) {
    throw Error(ErrorKind::InvalidArgument, "validation labels do not match validation pixels");
  }
  {
    std::size_t pos = 0;
    for (auto l : val_labels) pos += l ? 1 : 0;
    if (pos == 0 || pos == val_labels.size()) {
      throw Error(ErrorKind::DegenerateData, "degenerate labels");
    }
  }

  // nu is only searched for elliptical configurations.
  std::vector<std::vector<std::optional<double>>> nus;
  for (const auto& c : configs) {
    nus.push_back(c.distribution == Distribution::Elliptical ? axis(grid.nu)
                                                             : std::vector<std::optional<double>>{std::nullopt});
  }
  const auto sigmas = axis(grid.sigma);
  const auto lambdas = axis(grid.lambda);
  const std::size_t n_sigma = sigmas.size();
  const std::size_t n_lambda = lambdas.size();
  const std::size_t n_fits = n_sigma * n_lambda;
  const bool marginals = std::any_of(configs.begin(), configs.end(),
                                     [](const DetectorConfig& c) { return c.beta_x || c.beta_y; });

  // aucs[c][(nu * n_sigma + sigma) * n_lambda + lambda], canonical order.
  std::vector<std::vector<double>> aucs;
  for (const auto& nu : nus) aucs.emplace_back(nu.size() * n_fits, 0.0);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t f = 0; f < n_fits; ++f) {
    const std::size_t si = f / n_lambda;
    const std::size_t li = f % n_lambda;
    try {
      const DetectorConfig fit_cfg =
          apply_params(configs.front(), TuneParams{std::nullopt, sigmas[si], lambdas[li]});
      const FittedDetector det = fit(x_train, y_train, fit_cfg);
      const Matrix xis = xi_pixels_serial(det, x_val, y_val, marginals);
      for (std::size_t c = 0; c < configs.size(); ++c) {
        for (std::size_t ni = 0; ni < nus[c].size(); ++ni) {
          DetectorConfig score_cfg = configs[c];
          if (nus[c][ni]) score_cfg.nu = *nus[c][ni];
          const Vector s = combine_scores(xis, score_cfg, det.d_x, det.d_y);
          aucs[c][(ni * n_sigma + si) * n_lambda + li] =
              auc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), val_labels);
        }
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Numerical) {
        // Unfactorizable grid point: excluded from the argmax.
        for (std::size_t c = 0; c < configs.size(); ++c) {
          for (std::size_t ni = 0; ni < nus[c].size(); ++ni) {
            aucs[c][(ni * n_sigma + si) * n_lambda + li] = std::nan("");
          }
        }
      } else {
#pragma omp critical(acd_tune_failure)
        if (!failure) failure = std::current_exception();
      }
    } catch (...) {
#pragma omp critical(acd_tune_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<TuneResult> results(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    TuneResult& result = results[c];
    result.trace.reserve(aucs[c].size());
    std::optional<std::size_t> best;
    for (std::size_t ni = 0; ni < nus[c].size(); ++ni) {
      for (std::size_t si = 0; si < n_sigma; ++si) {
        for (std::size_t li = 0; li < n_lambda; ++li) {
          const std::size_t k = (ni * n_sigma + si) * n_lambda + li;
          result.trace.push_back({TuneParams{nus[c][ni], sigmas[si], lambdas[li]}, aucs[c][k]});
          if (!std::isnan(aucs[c][k]) && (!best || aucs[c][k] > aucs[c][*best])) best = k;
        }
      }
    }
    if (!best) throw Error(ErrorKind::Numerical, "singular covariance at every grid point");
    result.best_params = result.trace[*best].params;
    result.best_val_auc = result.trace[*best].val_auc;
  }
  return results;
}

TuneResult grid_search_split(const PixelMatrix& x_train, const PixelMatrix& y_train,
                             const PixelMatrix& x_val, const PixelMatrix& y_val,
                             std::span<const std::uint8_t> val_labels,
                             const DetectorConfig& config, const TuneGrid& grid) {
  return std::move(grid_search_split_shared(x_train, y_train, x_val, y_val, val_labels,
                                            std::span<const DetectorConfig>(&config, 1), grid)
                       .front());
}

TrainValSplit draw_train_val(std::span<const std::uint8_t> labels, std::size_t n_train,
                             std::size_t n_val, Rng& rng) {
  std::vector<std::size_t> background;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) background.push_back(i);
  }
  if (n_train > background.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "requested " + std::to_string(n_train) + " training pixels but only " +
                    std::to_string(background.size()) + " unchanged pixels exist");
  }
  if (n_train + n_val > labels.size()) {
    throw Error(ErrorKind::InvalidArgument, "n_train + n_val exceeds the pixel count");
  }
  TrainValSplit split;
  for (std::size_t i : sample_pixels(background.size(), n_train, rng)) {
    split.train.push_back(background[i]);
  }
  std::vector<std::uint8_t> taken(labels.size(), 0);
  for (std::size_t i : split.train) taken[i] = 1;
  std::vector<std::size_t> rest;
  rest.reserve(labels.size() - n_train);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!taken[i]) rest.push_back(i);
  }
  for (std::size_t i : sample_pixels(rest.size(), n_val, rng)) {
    split.val.push_back(rest[i]);
  }
  return split;
}

TuneResult grid_search(const PixelMatrix& x, const PixelMatrix& y,
                       std::span<const std::uint8_t> labels, const DetectorConfig& config,
                       const TuneGrid& grid, std::size_t n_train, std::size_t n_val,
                       std::uint64_t seed) {
  if (x.rows() != y.rows()) throw Error(ErrorKind::InvalidArgument, "unaligned pair");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw Error(ErrorKind::InvalidArgument, "labels do not match pixel count");
  }
  Rng rng(seed);
  TrainValSplit split = draw_train_val(labels, n_train, n_val, rng);
  std::vector<std::uint8_t> val_labels;
  val_labels.reserve(split.val.size());
  for (std::size_t i : split.val) val_labels.push_back(labels[i]);
  TuneResult r = grid_search_split(select_rows(x, split.train), select_rows(y, split.train),
                                   select_rows(x, split.val), select_rows(y, split.val),
                                   val_labels, config, grid);
  r.train_indices = std::move(split.train);
  r.val_indices = std::move(split.val);
  return r;
}

}  // namespace acd
