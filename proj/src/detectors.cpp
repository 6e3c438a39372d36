#include "acd/detectors.hpp"

#include <algorithm>
#include <cmath>

#include "acd/error.hpp"

namespace acd {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Rx: return "rx";
    case Family::Chronochrome_YgivenX: return "yx";
    case Family::Chronochrome_XgivenY: return "xy";
    case Family::Hacd: return "hacd";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "rx") return Family::Rx;
  if (name == "yx") return Family::Chronochrome_YgivenX;
  if (name == "xy") return Family::Chronochrome_XgivenY;
  if (name == "hacd") return Family::Hacd;
  throw Error(ErrorKind::InvalidArgument, "unknown detector '" + std::string(name) + "'");
}

Family family_from_betas(int beta_x, int beta_y) {
  if (beta_x == 0 && beta_y == 0) return Family::Rx;
  if (beta_x == 0 && beta_y == 1) return Family::Chronochrome_YgivenX;
  if (beta_x == 1 && beta_y == 0) return Family::Chronochrome_XgivenY;
  if (beta_x == 1 && beta_y == 1) return Family::Hacd;
  throw Error(ErrorKind::InvalidArgument, "betas must be 0 or 1");
}

DetectorConfig DetectorConfig::make(Family family, Distribution dist, Mode mode) {
  DetectorConfig c;
  c.beta_x = (family == Family::Chronochrome_XgivenY || family == Family::Hacd) ? 1 : 0;
  c.beta_y = (family == Family::Chronochrome_YgivenX || family == Family::Hacd) ? 1 : 0;
  c.distribution = dist;
  c.mode = mode;
  return c;
}

std::string DetectorConfig::name() const {
  std::string out;
  if (mode == Mode::Kernel) out += "K-";
  if (distribution == Distribution::Elliptical) out += "EC-";
  std::string fam(to_string(family()));
  std::transform(fam.begin(), fam.end(), fam.begin(), [](unsigned char c) { return std::toupper(c); });
  return out + fam;
}

void DetectorConfig::validate() const {
  family_from_betas(beta_x, beta_y);
  if (distribution == Distribution::Elliptical && !(nu > 0.0 && std::isfinite(nu))) {
    throw Error(ErrorKind::InvalidArgument, "nu must be positive and finite");
  }
  if (mode == Mode::Kernel) {
    if (sigma && !(*sigma > 0.0 && std::isfinite(*sigma))) {
      throw Error(ErrorKind::InvalidArgument, "sigma must be positive");
    }
    if (lambda && !(*lambda > 0.0 && std::isfinite(*lambda))) {
      throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
    }
    if (term_sigmas) {
      for (double s : *term_sigmas) {
        if (!(s > 0.0 && std::isfinite(s))) {
          throw Error(ErrorKind::InvalidArgument, "per-term sigma must be positive");
        }
      }
    }
  }
}

LinearTerm fit_linear_term(const PixelMatrix& train, bool center, double ridge_scale) {
  if (train.rows() < 2) {
    throw Error(ErrorKind::InvalidArgument, "need at least 2 training samples");
  }
  Vector mean = center ? Vector(train.colwise().mean().transpose()) : Vector::Zero(train.cols());
  return LinearTerm{mean, spd_factorize(covariance(train, mean), ridge_scale)};
}

KernelTerm fit_kernel_term(const PixelMatrix& train, const KernelSpec& spec, double lambda) {
  spec.validate();
  if (train.rows() < 1) {
    throw Error(ErrorKind::InvalidArgument, "need at least 1 training sample");
  }
  if (!(lambda >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "lambda must be nonnegative");
  }
  const Matrix k = gram(train, spec);
  // K is symmetric, so K K = K K^T: one triangle, mirrored.
  const Eigen::Index n = k.rows();
  Matrix a = Matrix::Zero(n, n);
  a.selfadjointView<Eigen::Lower>().rankUpdate(k);
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  a.diagonal().array() += lambda;
  return KernelTerm{train, spec, lambda, spd_factorize(a, 0.0)};
}

FittedDetector fit(const PixelMatrix& x_train, const PixelMatrix& y_train,
                   const DetectorConfig& config) {
  config.validate();
  if (x_train.rows() != y_train.rows()) {
    throw Error(ErrorKind::InvalidArgument, "unaligned pair");
  }
  if (x_train.rows() < 2) {
    throw Error(ErrorKind::InvalidArgument, "need at least 2 training samples");
  }
  FittedDetector det;
  det.config = config;
  det.d_x = x_train.cols();
  det.d_y = y_train.cols();
  det.stats_x = standardize_fit(x_train);
  det.stats_y = standardize_fit(y_train);
  const PixelMatrix xs = standardize_apply(x_train, det.stats_x);
  const PixelMatrix ys = standardize_apply(y_train, det.stats_y);
  const PixelMatrix zs = stack_pair(xs, ys);

  if (config.mode == Mode::Linear) {
    det.terms[kTermX] = fit_linear_term(xs, config.center);
    det.terms[kTermY] = fit_linear_term(ys, config.center);
    det.terms[kTermZ] = fit_linear_term(zs, config.center);
    return det;
  }

  const double n = static_cast<double>(x_train.rows());
  if (!det.config.lambda) det.config.lambda = 1e-5 / n;
  if (!det.config.sigma) {
    det.config.sigma = config.kernel == KernelKind::Linear
                           ? 1.0
                           : sigma_heuristic(zs, SigmaHeuristic::Mean, config.kernel);
  }
  std::array<double, 3> sigmas{*det.config.sigma, *det.config.sigma, *det.config.sigma};
  if (config.term_sigmas) sigmas = *config.term_sigmas;
  const std::array<const PixelMatrix*, 3> data{&xs, &ys, &zs};
  for (std::size_t t = 0; t < 3; ++t) {
    det.terms[t] = fit_kernel_term(*data[t], KernelSpec{config.kernel, sigmas[t]}, *det.config.lambda);
  }
  return det;
}

double xi_linear(const LinearTerm& term, const Vector& v) {
  return mahalanobis(term.factor, term.mean, v);
}

double xi_kernel(const KernelTerm& term, const Vector& v) {
  const Vector k = cross_row(term.train, v, term.spec);
  return std::max(term.solve_factor.quadratic_form(k), 0.0);
}

double xi(const Term& term, const Vector& v) {
  return std::visit(
      [&](const auto& t) {
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, LinearTerm>) {
          return xi_linear(t, v);
        } else {
          return xi_kernel(t, v);
        }
      },
      term);
}

double score_gaussian(double xi_z, double xi_x, double xi_y, int beta_x, int beta_y) {
  return xi_z - beta_x * xi_x - beta_y * xi_y;
}

double score_ec(double xi_z, double xi_x, double xi_y, int beta_x, int beta_y, double nu,
                Eigen::Index d_x, Eigen::Index d_y) {
  const auto term = [nu](double dim, double q) { return (dim + nu) * std::log1p(q / nu); };
  double s = term(static_cast<double>(d_x + d_y), xi_z);
  if (beta_x) s -= term(static_cast<double>(d_x), xi_x);
  if (beta_y) s -= term(static_cast<double>(d_y), xi_y);
  return s;
}

namespace {

constexpr Eigen::Index kScoreBlock = 64;

// Squared column norms of L^{-1} B, one per probe row of `probe`.
Vector block_xi(const Term& term, const PixelMatrix& probe) {
  Vector out(probe.rows());
  if (const auto* lin = std::get_if<LinearTerm>(&term)) {
    const Matrix centered = (probe.rowwise() - lin->mean.transpose()).transpose();
    out = lin->factor.whiten(centered).colwise().squaredNorm().transpose();
  } else {
    const auto& ker = std::get<KernelTerm>(term);
    const Matrix kc = cross_gram(ker.train, probe, ker.spec).transpose();
    out = ker.solve_factor.whiten(kc).colwise().squaredNorm().transpose().cwiseMax(0.0);
  }
  return out;
}

struct ScoringInput {
  PixelMatrix xs;
  PixelMatrix ys;
  std::array<bool, 3> needed;
};

ScoringInput prepare(const FittedDetector& det, const PixelMatrix& x, const PixelMatrix& y,
                     bool all_terms) {
  if (x.rows() != y.rows()) {
    throw Error(ErrorKind::InvalidArgument, "unaligned pair");
  }
  if (x.cols() != det.d_x || y.cols() != det.d_y) {
    throw Error(ErrorKind::InvalidArgument,
                "band-count mismatch: model expects " + std::to_string(det.d_x) + "+" +
                    std::to_string(det.d_y) + " bands, got " + std::to_string(x.cols()) + "+" +
                    std::to_string(y.cols()));
  }
  return ScoringInput{standardize_apply(x, det.stats_x), standardize_apply(y, det.stats_y),
                      {all_terms || det.config.beta_x != 0, all_terms || det.config.beta_y != 0, true}};
}

void score_block(const FittedDetector& det, const ScoringInput& in, Eigen::Index begin,
                 Eigen::Index end, Matrix& xis) {
  const Eigen::Index m = end - begin;
  const PixelMatrix xb = in.xs.middleRows(begin, m);
  const PixelMatrix yb = in.ys.middleRows(begin, m);
  if (in.needed[kTermX]) xis.block(begin, kTermX, m, 1) = block_xi(det.terms[kTermX], xb);
  if (in.needed[kTermY]) xis.block(begin, kTermY, m, 1) = block_xi(det.terms[kTermY], yb);
  xis.block(begin, kTermZ, m, 1) = block_xi(det.terms[kTermZ], stack_pair(xb, yb));
}

}  // namespace

Matrix xi_pixels_serial(const FittedDetector& det, const PixelMatrix& x, const PixelMatrix& y,
                        bool all_terms) {
  const ScoringInput in = prepare(det, x, y, all_terms);
  const Eigen::Index n = x.rows();
  Matrix xis = Matrix::Zero(n, 3);
  for (Eigen::Index b = 0; b < n; b += kScoreBlock) {
    score_block(det, in, b, std::min(n, b + kScoreBlock), xis);
  }
  return xis;
}

Matrix xi_pixels(const FittedDetector& det, const PixelMatrix& x, const PixelMatrix& y,
                 bool all_terms) {
  const ScoringInput in = prepare(det, x, y, all_terms);
  const Eigen::Index n = x.rows();
  const Eigen::Index blocks = (n + kScoreBlock - 1) / kScoreBlock;
  Matrix xis = Matrix::Zero(n, 3);
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kScoreBlock;
    score_block(det, in, begin, std::min(n, begin + kScoreBlock), xis);
  }
  return xis;
}

Vector combine_scores(const Matrix& xis, const DetectorConfig& config, Eigen::Index d_x,
                      Eigen::Index d_y) {
  Vector s(xis.rows());
  for (Eigen::Index i = 0; i < xis.rows(); ++i) {
    const double qx = xis(i, kTermX);
    const double qy = xis(i, kTermY);
    const double qz = xis(i, kTermZ);
    s(i) = config.distribution == Distribution::Gaussian
               ? score_gaussian(qz, qx, qy, config.beta_x, config.beta_y)
               : score_ec(qz, qx, qy, config.beta_x, config.beta_y, config.nu, d_x, d_y);
  }
  return s;
}

Vector score_pixels(const FittedDetector& det, const PixelMatrix& x, const PixelMatrix& y) {
  return combine_scores(xi_pixels(det, x, y), det.config, det.d_x, det.d_y);
}

Vector score_pixels_serial(const FittedDetector& det, const PixelMatrix& x,
                           const PixelMatrix& y) {
  return combine_scores(xi_pixels_serial(det, x, y), det.config, det.d_x, det.d_y);
}

}  // namespace acd
