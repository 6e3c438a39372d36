#include "acd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "acd/error.hpp"

namespace acd {

namespace {

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels,
                  std::size_t& positives, std::size_t& negatives) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::InvalidArgument, "scores and labels differ in length");
  }
  positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
    if (std::isnan(scores[i])) throw Error(ErrorKind::InvalidArgument, "NaN score");
    positives += labels[i];
  }
  negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::DegenerateData, "degenerate labels");
  }
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::size_t pos = 0;
  std::size_t neg = 0;
  check_inputs(scores, labels, pos, neg);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  std::size_t tp = 0;
  std::size_t fp = 0;
  // Twice the area in units of (true positive, false positive) pairs.
  double area2 = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp;
    const std::size_t fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (labels[order[i]]) ++tp; else ++fp;
    }
    area2 += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
    curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, s});
  }
  curve.auc = area2 / (2.0 * p * n);
  return curve;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  return roc_curve(scores, labels).auc;
}

double threshold_at_tpr(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        double rate) {
  std::size_t pos = 0;
  std::size_t neg = 0;
  check_inputs(scores, labels, pos, neg);
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "detection rate must lie in (0, 1]");
  }
  std::vector<double> positive;
  positive.reserve(pos);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) positive.push_back(scores[i]);
  }
  std::sort(positive.begin(), positive.end(), std::greater<>());
  // Smallest count of positives reaching the rate; guard against rate * pos
  // landing a hair above an integer.
  auto needed = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(pos) - 1e-9));
  needed = std::clamp<std::size_t>(needed, 1, pos);
  return positive[needed - 1];
}

double threshold_at_quantile(std::span<const double> scores, double q) {
  if (scores.empty()) {
    throw Error(ErrorKind::InvalidArgument, "no scores");
  }
  if (!(q > 0.0 && q < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "quantile must lie in (0, 1)");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size())));
  if (k == 0) return std::nextafter(sorted.front(), std::numeric_limits<double>::infinity());
  return sorted[k - 1];
}

std::vector<std::uint8_t> apply_threshold(std::span<const double> scores, double t) {
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= t ? 1 : 0;
  return out;
}

}  // namespace acd
