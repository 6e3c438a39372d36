#include "acd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "acd/error.hpp"
#include "test_util.hpp"

namespace acd {
namespace {

using testing::mann_whitney_auc;

struct Labeled {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

Labeled random_labeled(std::size_t n, double shift, std::uint64_t seed, bool quantize = false) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  Labeled d;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = coin(rng);
    double s = normal(rng) + (pos ? shift : 0.0);
    if (quantize) s = std::round(s * 2.0) / 2.0;
    d.scores.push_back(s);
    d.labels.push_back(pos ? 1 : 0);
  }
  d.labels[0] = 1;
  d.labels[1] = 0;
  return d;
}

// tpr at threshold t by direct counting.
double tpr_at(const Labeled& d, double t) {
  double hit = 0, pos = 0;
  for (std::size_t i = 0; i < d.scores.size(); ++i) {
    if (!d.labels[i]) continue;
    pos += 1;
    if (d.scores[i] >= t) hit += 1;
  }
  return hit / pos;
}

TEST(Roc, PerfectSeparation) {
  const std::vector<double> s{0.1, 0.2, 0.9, 0.8};
  const std::vector<std::uint8_t> l{0, 0, 1, 1};
  EXPECT_EQ(auc(s, l), 1.0);
}

TEST(Roc, ReversedIsZero) {
  const std::vector<double> s{0.9, 0.8, 0.1, 0.2};
  const std::vector<std::uint8_t> l{0, 0, 1, 1};
  EXPECT_EQ(auc(s, l), 0.0);
}

TEST(Roc, AllTiedIsHalf) {
  const std::vector<double> s(6, 3.0);
  const std::vector<std::uint8_t> l{0, 1, 0, 1, 0, 0};
  EXPECT_EQ(auc(s, l), 0.5);
}

TEST(Roc, DegenerateLabelsThrow) {
  const std::vector<double> s{1, 2, 3};
  try {
    auc(s, std::vector<std::uint8_t>{0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateData);
    EXPECT_STREQ(e.what(), "degenerate labels");
  }
  EXPECT_THROW(auc(s, std::vector<std::uint8_t>{1, 1, 1}), Error);
  EXPECT_THROW(auc(s, std::vector<std::uint8_t>{1, 0}), Error);
}

TEST(Roc, CurveShape) {
  const auto d = random_labeled(300, 1.0, 2, true);
  const RocCurve c = roc_curve(d.scores, d.labels);
  EXPECT_EQ(c.points.front().fpr, 0.0);
  EXPECT_EQ(c.points.front().tpr, 0.0);
  EXPECT_TRUE(std::isinf(c.points.front().threshold));
  EXPECT_EQ(c.points.back().fpr, 1.0);
  EXPECT_EQ(c.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
    EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
    EXPECT_LT(c.points[i].threshold, c.points[i - 1].threshold);
  }
}

TEST(Roc, RandomScoresNearHalf) {
  const auto d = random_labeled(20000, 0.0, 3);
  EXPECT_NEAR(auc(d.scores, d.labels), 0.5, 0.02);
}

TEST(Roc, MatchesMannWhitneyWithTies) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = random_labeled(400, 0.7, 10 + seed, seed % 2 == 0);
    EXPECT_NEAR(auc(d.scores, d.labels), mann_whitney_auc(d.scores, d.labels), 1e-12);
  }
}

TEST(Roc, InvariantUnderMonotoneMaps) {
  const auto d = random_labeled(500, 0.8, 4);
  const double base = auc(d.scores, d.labels);
  std::vector<double> t1, t2;
  for (double s : d.scores) {
    t1.push_back(std::exp(s));
    t2.push_back(3.0 * s + 7.0);
  }
  EXPECT_EQ(auc(t1, d.labels), base);
  EXPECT_EQ(auc(t2, d.labels), base);
}

TEST(Roc, NegationComplements) {
  const auto d = random_labeled(500, 0.8, 5, true);
  std::vector<double> neg;
  for (double s : d.scores) neg.push_back(-s);
  EXPECT_NEAR(auc(neg, d.labels), 1.0 - auc(d.scores, d.labels), 1e-12);
}

TEST(ThresholdTpr, FullRateIsMinimumPositive) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> l{0, 0, 1, 1};
  EXPECT_EQ(threshold_at_tpr(s, l, 1.0), 0.35);
  EXPECT_EQ(threshold_at_tpr(s, l, 0.5), 0.8);
}

TEST(ThresholdTpr, RejectsBadRate) {
  const std::vector<double> s{0.1, 0.9};
  const std::vector<std::uint8_t> l{0, 1};
  EXPECT_THROW(threshold_at_tpr(s, l, 0.0), Error);
  EXPECT_THROW(threshold_at_tpr(s, l, 1.5), Error);
}

TEST(ThresholdTpr, MatchesExhaustiveSweep) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = random_labeled(300, 1.0, 30 + seed, seed % 3 == 0);
    std::vector<double> cand = d.scores;
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (double rate : {0.05, 0.1, 0.333, 0.5, 0.8, 0.9, 1.0}) {
      double best = -std::numeric_limits<double>::infinity();
      for (double t : cand)
        if (tpr_at(d, t) >= rate) best = std::max(best, t);
      const double got = threshold_at_tpr(d.scores, d.labels, rate);
      EXPECT_EQ(got, best) << "seed " << seed << " rate " << rate;
      EXPECT_GE(tpr_at(d, got), rate);
    }
  }
}

TEST(ThresholdQuantile, CountsFlaggedPixels) {
  std::vector<double> s(1000);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(static_cast<double>(i) * 1.7) * 100;
  for (double q : {0.001, 0.01, 0.25, 0.5, 0.99}) {
    const double t = threshold_at_quantile(s, q);
    const auto flagged = apply_threshold(s, t);
    EXPECT_EQ(std::count(flagged.begin(), flagged.end(), 1),
              static_cast<long>(std::floor(q * 1000)));
  }
}

TEST(ThresholdQuantile, TooSmallFlagsNothing) {
  const std::vector<double> s{1.0, 2.0, 3.0};
  const double t = threshold_at_quantile(s, 0.1);
  EXPECT_GT(t, 3.0);
  EXPECT_THROW(threshold_at_quantile(s, 0.0), Error);
  EXPECT_THROW(threshold_at_quantile(s, 1.0), Error);
}

TEST(ApplyThreshold, MatchesRocVertex) {
  const auto d = random_labeled(200, 1.0, 6, true);
  const RocCurve c = roc_curve(d.scores, d.labels);
  double pos = 0, neg = 0;
  for (auto l : d.labels) (l ? pos : neg) += 1;
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    const auto f = apply_threshold(d.scores, c.points[k].threshold);
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] && d.labels[i]) tp += 1;
      if (f[i] && !d.labels[i]) fp += 1;
    }
    EXPECT_DOUBLE_EQ(tp / pos, c.points[k].tpr);
    EXPECT_DOUBLE_EQ(fp / neg, c.points[k].fpr);
  }
}

}  // namespace
}  // namespace acd
