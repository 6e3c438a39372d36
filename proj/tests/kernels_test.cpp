#include "acd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "acd/error.hpp"

namespace acd {
namespace {

PixelMatrix random_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  PixelMatrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// Direct evaluation of the sam formula in extended precision.
long double sam_oracle(const Vector& a, const Vector& b, long double sigma) {
  long double ab = 0, aa = 0, bb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a(i)) * b(i);
    aa += static_cast<long double>(a(i)) * a(i);
    bb += static_cast<long double>(b(i)) * b(i);
  }
  const long double c = std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0L, 1.0L);
  const long double t = std::acos(c);
  return std::exp(-t * t / (2 * sigma * sigma));
}

TEST(KernelEval, RbfZeroDistanceIsOne) {
  const Vector a = Vector::Random(5);
  EXPECT_EQ(kernel_eval(KernelSpec{KernelKind::Rbf, 0.7}, a, a), 1.0);
}

TEST(KernelEval, RbfHandValue) {
  EXPECT_NEAR(kernel_eval(KernelSpec{KernelKind::Rbf, 1.0}, Vector{{0.0, 0.0}}, Vector{{1.0, 1.0}}),
              std::exp(-1.0), 1e-15);
  EXPECT_NEAR(std::exp(-1.0), 0.367879, 1e-6);
}

TEST(KernelEval, LinearIsDot) {
  EXPECT_EQ(kernel_eval(KernelSpec{KernelKind::Linear, 1.0}, Vector{{1.0, 2.0}}, Vector{{3.0, -4.0}}), -5.0);
}

TEST(KernelEval, SamCollinearIsOne) {
  const Vector a{{0.3, -1.2, 2.5, 0.1}};
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec{KernelKind::Sam, 0.2}, a, Vector(2.0 * a)), 1.0);
}

TEST(KernelEval, SamZeroVectorConvention) {
  const KernelSpec spec{KernelKind::Sam, 0.5};
  const Vector z = Vector::Zero(3);
  const Vector a{{1.0, 2.0, 3.0}};
  EXPECT_EQ(kernel_eval(spec, z, z), 1.0);
  // cosine 0 -> angle pi/2
  EXPECT_NEAR(kernel_eval(spec, z, a), std::exp(-(M_PI / 2) * (M_PI / 2) / 0.5), 1e-15);
  EXPECT_EQ(kernel_eval(spec, z, a), kernel_eval(spec, a, z));
}

TEST(KernelEval, SamMatchesDirectFormula) {
  Rng rng(9);
  std::uniform_real_distribution<double> sig(0.05, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const PixelMatrix ab = random_rows(2, 1 + trial % 12, 100 + trial);
    const Vector a = ab.row(0).transpose();
    const Vector b = ab.row(1).transpose();
    const double sigma = sig(rng);
    const double got = kernel_eval(KernelSpec{KernelKind::Sam, sigma}, a, b);
    EXPECT_NEAR(got, static_cast<double>(sam_oracle(a, b, sigma)), 1e-12);
  }
}

TEST(KernelEval, SamScaleInvariant) {
  const PixelMatrix m = random_rows(40, 6, 3);
  const KernelSpec spec{KernelKind::Sam, 0.4};
  for (Eigen::Index i = 0; i + 1 < m.rows(); i += 2) {
    const Vector a = m.row(i).transpose();
    const Vector b = m.row(i + 1).transpose();
    EXPECT_NEAR(kernel_eval(spec, a, b), kernel_eval(spec, Vector(2.0 * a), Vector(3.0 * b)), 1e-12);
  }
}

TEST(KernelSpec, ValidatesSigma) {
  EXPECT_THROW((KernelSpec{KernelKind::Rbf, 0.0}).validate(), Error);
  EXPECT_THROW((KernelSpec{KernelKind::Sam, -1.0}).validate(), Error);
  EXPECT_NO_THROW((KernelSpec{KernelKind::Linear, 0.0}).validate());
}

TEST(Gram, SingleRow) {
  PixelMatrix m(1, 2);
  m << 3, 4;
  const Matrix k = gram(m, KernelSpec{KernelKind::Linear, 1.0});
  ASSERT_EQ(k.rows(), 1);
  EXPECT_EQ(k(0, 0), 25.0);
}

TEST(Gram, UnitDiagonalAndRange) {
  const PixelMatrix m = random_rows(60, 5, 4);
  for (auto kind : {KernelKind::Rbf, KernelKind::Sam}) {
    const Matrix k = gram(m, KernelSpec{kind, 1.3});
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      EXPECT_EQ(k(i, i), 1.0);
      for (Eigen::Index j = 0; j < k.cols(); ++j) {
        EXPECT_GT(k(i, j), 0.0);
        EXPECT_LE(k(i, j), 1.0);
        EXPECT_EQ(k(i, j), k(j, i));
      }
    }
  }
}

TEST(Gram, LinearEqualsMatrixProduct) {
  const PixelMatrix m = random_rows(45, 7, 5);
  const Matrix k = gram(m, KernelSpec{KernelKind::Linear, 1.0});
  const Matrix oracle = m * m.transpose();
  EXPECT_LT((k - oracle).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, oracle.cwiseAbs().maxCoeff()));
}

TEST(Gram, ParallelMatchesSerialBitExactly) {
  const PixelMatrix m = random_rows(301, 9, 6);
  for (auto kind : {KernelKind::Linear, KernelKind::Rbf, KernelKind::Sam}) {
    const KernelSpec spec{kind, 2.0};
    EXPECT_EQ(gram(m, spec), gram_serial(m, spec));
  }
}

TEST(Gram, PositiveSemidefinite) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PixelMatrix m = random_rows(80, 4, 50 + seed);
    for (auto kind : {KernelKind::Linear, KernelKind::Rbf}) {
      const Matrix k = gram(m, KernelSpec{kind, 0.9});
      const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(k).eigenvalues().minCoeff();
      EXPECT_GE(min_eig, -1e-8 * static_cast<double>(m.rows()));
    }
  }
}

// A Gaussian of the geodesic angle is not a positive definite kernel on the
// sphere once sigma is wide. Narrow bandwidths stay PSD, and K K + lambda I
// (what the detector factors) is PSD either way.
TEST(Gram, SamDefinitenessDependsOnBandwidth) {
  const PixelMatrix m = random_rows(80, 4, 60);
  const auto min_eig = [](const Matrix& a) { return Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().minCoeff(); };
  EXPECT_GE(min_eig(gram(m, KernelSpec{KernelKind::Sam, 0.2})), -1e-8 * 80);
  const Matrix wide = gram(m, KernelSpec{KernelKind::Sam, 2.0});
  EXPECT_LT(min_eig(wide), -1e-3);
  EXPECT_GE(min_eig(wide * wide), -1e-8 * 80 * wide.cwiseAbs().maxCoeff() * 80);
}

TEST(Gram, WideRbfApproachesOnes) {
  const Matrix k = gram(random_rows(30, 3, 8), KernelSpec{KernelKind::Rbf, 1e8});
  EXPECT_GT(k.minCoeff(), 1.0 - 1e-10);
}

TEST(CrossRow, TrainingRowGivesOne) {
  const PixelMatrix m = random_rows(20, 3, 9);
  const Vector k = cross_row(m, m.row(7).transpose(), KernelSpec{KernelKind::Rbf, 0.5});
  EXPECT_EQ(k(7), 1.0);
}

TEST(CrossRow, StackedRowsReproduceGram) {
  const PixelMatrix m = random_rows(25, 4, 10);
  for (auto kind : {KernelKind::Linear, KernelKind::Rbf, KernelKind::Sam}) {
    const KernelSpec spec{kind, 0.8};
    const Matrix g = gram(m, spec);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const Vector row = cross_row(m, m.row(i).transpose(), spec);
      EXPECT_LT((row - g.row(i).transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(CrossRow, LinearIsMatrixVector) {
  const PixelMatrix m = random_rows(15, 4, 11);
  const Vector v = Vector::Random(4);
  const Vector k = cross_row(m, v, KernelSpec{KernelKind::Linear, 1.0});
  EXPECT_LT((k - m * v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CrossRow, DimensionMismatchThrows) {
  EXPECT_THROW(cross_row(random_rows(5, 3, 1), Vector::Zero(2), KernelSpec{}), Error);
}

TEST(CrossGram, MatchesCrossRows) {
  const PixelMatrix train = random_rows(30, 5, 12);
  const PixelMatrix probe = random_rows(7, 5, 13);
  const KernelSpec spec{KernelKind::Rbf, 1.1};
  const Matrix k = cross_gram(train, probe, spec);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    EXPECT_EQ(Vector(k.row(i).transpose()), cross_row(train, probe.row(i).transpose(), spec));
  }
}

TEST(SigmaHeuristic, TwoRows) {
  PixelMatrix m(2, 2);
  m << 0, 0, 2, 0;
  EXPECT_DOUBLE_EQ(sigma_heuristic(m, SigmaHeuristic::Mean), 2.0);
  EXPECT_DOUBLE_EQ(sigma_heuristic(m, SigmaHeuristic::Median), 2.0);
}

TEST(SigmaHeuristic, ThreePointsOnALine) {
  PixelMatrix m(3, 1);
  m << 0, 1, 3;
  EXPECT_DOUBLE_EQ(sigma_heuristic(m, SigmaHeuristic::Mean), 2.0);
  EXPECT_DOUBLE_EQ(sigma_heuristic(m, SigmaHeuristic::Median), 2.0);
}

TEST(SigmaHeuristic, EvenCountMedianAveragesMiddle) {
  PixelMatrix m(4, 1);
  m << 0, 1, 3, 10;  // distances 1 3 10 2 9 7 -> sorted 1 2 3 7 9 10
  EXPECT_DOUBLE_EQ(sigma_heuristic(m, SigmaHeuristic::Median), 5.0);
}

TEST(SigmaHeuristic, IdenticalRowsThrow) {
  PixelMatrix m = PixelMatrix::Ones(5, 3);
  try {
    sigma_heuristic(m, SigmaHeuristic::Mean);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateData);
    EXPECT_STREQ(e.what(), "zero dispersion");
  }
}

TEST(SigmaHeuristic, SubsampledCloseToExact) {
  const PixelMatrix m = random_rows(5000, 4, 14);
  // Exact oracle over all 5000 rows, computed independently.
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.rows(); ++j) {
      sum += (m.row(i) - m.row(j)).norm();
      ++count;
    }
  }
  const double exact = sum / static_cast<double>(count);
  EXPECT_NEAR(sigma_heuristic(m, SigmaHeuristic::Mean), exact, 0.1 * exact);
  EXPECT_NEAR(sigma_heuristic(m, SigmaHeuristic::Median), exact, 0.1 * exact);
}

TEST(PercentileGrid, SortedWithinDistanceRange) {
  const PixelMatrix m = random_rows(100, 6, 15);
  const auto grid = percentile_sigma_grid(m, KernelKind::Sam, 0.05, 0.95, 60);
  ASSERT_FALSE(grid.empty());
  EXPECT_LE(grid.size(), 60u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  auto d = pairwise_distances(m, KernelKind::Sam);
  std::sort(d.begin(), d.end());
  EXPECT_GE(grid.front(), d.front());
  EXPECT_LE(grid.back(), d.back());
  EXPECT_LE(grid.back(), M_PI);
}

}  // namespace
}  // namespace acd
