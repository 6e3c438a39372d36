#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace acd {

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;  ///< flag when score >= threshold; +inf for the (0, 0) vertex
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Anomalous (label 1) is the positive class and larger scores are more
/// anomalous. One vertex per distinct score, trapezoid area, so tied scores
/// earn half credit. Throws DegenerateData when only one class is present.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Largest threshold t with tpr(t) >= rate, rate in (0, 1].
double threshold_at_tpr(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        double rate);

/// Threshold flagging floor(q * n) pixels when scores are distinct.
double threshold_at_quantile(std::span<const double> scores, double q);

std::vector<std::uint8_t> apply_threshold(std::span<const double> scores, double t);

}  // namespace acd
