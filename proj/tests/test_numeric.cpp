#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dmlkit/errors.hpp"
#include "dmlkit/numeric.hpp"

using namespace dmlkit;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double sample_std(const Vector& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformStaysInUnitInterval) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, BelowIsRoughlyUniform) {
  Rng rng(11);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, DeriveIgnoresParentPosition) {
  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 17; ++i) b.normal();
  Rng ca = a.derive(9);
  Rng cb = b.derive(9);
  EXPECT_EQ(ca.next_u64(), cb.next_u64());
  EXPECT_NE(a.derive(1).next_u64(), a.derive(2).next_u64());
}

TEST(StandardNormal, FeatureStdsMatchUnitVariance) {
  Rng rng(42);
  const Matrix m = standard_normal_matrix(rng, 1000, 5);
  for (Index j = 0; j < 5; ++j) {
    const double s = sample_std(m.col(j));
    EXPECT_GE(s, 0.90);
    EXPECT_LE(s, 1.10);
  }
}

TEST(StandardNormal, Deterministic) {
  Rng a(99), b(99);
  EXPECT_EQ(standard_normal_matrix(a, 20, 3), standard_normal_matrix(b, 20, 3));
}

TEST(StandardNormal, KolmogorovSmirnovAgainstErfcCdf) {
  Rng rng(2024);
  const Matrix m = standard_normal_matrix(rng, 10000, 1);
  std::vector<double> v(m.data(), m.data() + m.size());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  EXPECT_LT(d, 0.02);
}

TEST(StandardNormal, ZeroDimensionsRejected) {
  Rng rng(1);
  EXPECT_THROW(standard_normal_matrix(rng, 0, 3), InvalidArgument);
  EXPECT_THROW(standard_normal_matrix(rng, 3, 0), InvalidArgument);
}

TEST(TrainTestSplit, EightyTwenty) {
  Rng rng(42);
  const Matrix X = standard_normal_matrix(rng, 1000, 2);
  const Vector y = Vector::LinSpaced(1000, 0, 999);
  Rng split_rng(1);
  const auto s = train_test_split(X, y, 0.2, split_rng);
  EXPECT_EQ(s.X_train.rows(), 800);
  EXPECT_EQ(s.X_test.rows(), 200);
  EXPECT_EQ(s.y_train.size(), 800);
  EXPECT_EQ(s.y_test.size(), 200);
}

TEST(TrainTestSplit, DisjointCoverAndPairingPreserved) {
  for (Index n : {5, 37, 100}) {
    Matrix X(n, 1);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
      X(i, 0) = static_cast<double>(i);
      y[i] = 10.0 * static_cast<double>(i);
    }
    Rng rng(static_cast<std::uint64_t>(n));
    const auto s = train_test_split(X, y, 0.3, rng);
    std::set<Index> all(s.train_idx.begin(), s.train_idx.end());
    for (Index i : s.test_idx) EXPECT_TRUE(all.insert(i).second) << "row " << i << " is in both parts";
    EXPECT_EQ(static_cast<Index>(all.size()), n);
    EXPECT_EQ(*all.rbegin(), n - 1);
    for (Index r = 0; r < s.X_test.rows(); ++r) EXPECT_EQ(s.y_test[r], 10.0 * s.X_test(r, 0));
    for (Index r = 0; r < s.X_train.rows(); ++r) EXPECT_EQ(s.y_train[r], 10.0 * s.X_train(r, 0));
  }
}

TEST(TrainTestSplit, SameSeedSamePartition) {
  const Matrix X = Matrix::Random(50, 2);
  const Vector y = Vector::Random(50);
  Rng a(8), b(8);
  EXPECT_EQ(train_test_split(X, y, 0.2, a).test_idx, train_test_split(X, y, 0.2, b).test_idx);
}

TEST(TrainTestSplit, RowMismatchNamesBothLengths) {
  Rng rng(1);
  try {
    train_test_split(Matrix::Zero(10, 2), Vector::Zero(9), 0.2, rng);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("10"), std::string::npos);
    EXPECT_NE(msg.find("9"), std::string::npos);
  }
}

TEST(KFold, EqualAndRemainderSizes) {
  auto sizes = [](Index n, int k) {
    Rng rng(4);
    std::multiset<std::size_t> out;
    for (const auto& f : kfold_indices(n, k, rng)) out.insert(f.heldout.size());
    return out;
  };
  EXPECT_EQ(sizes(10, 5), (std::multiset<std::size_t>{2, 2, 2, 2, 2}));
  EXPECT_EQ(sizes(1000, 2), (std::multiset<std::size_t>{500, 500}));
  EXPECT_EQ(sizes(7, 3), (std::multiset<std::size_t>{3, 2, 2}));
}

TEST(KFold, HeldoutSetsPartitionRowsAndTrainIsComplement) {
  Rng rng(12);
  const Index n = 53;
  const auto folds = kfold_indices(n, 4, rng);
  std::vector<int> hits(n, 0);
  for (const auto& f : folds) {
    EXPECT_TRUE(std::is_sorted(f.heldout.begin(), f.heldout.end()));
    EXPECT_TRUE(std::is_sorted(f.train.begin(), f.train.end()));
    EXPECT_EQ(static_cast<Index>(f.train.size() + f.heldout.size()), n);
    for (Index i : f.heldout) ++hits[static_cast<std::size_t>(i)];
    std::vector<Index> both;
    std::set_intersection(f.train.begin(), f.train.end(), f.heldout.begin(), f.heldout.end(),
                          std::back_inserter(both));
    EXPECT_TRUE(both.empty());
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(KFold, RejectsBadK) {
  Rng rng(1);
  EXPECT_THROW(kfold_indices(10, 1, rng), InvalidArgument);
  EXPECT_THROW(kfold_indices(3, 4, rng), InvalidArgument);
}

TEST(Metrics, PerfectFit) {
  Vector y(4);
  y << 1, 2, 3, 5;
  const Metrics m = compute_metrics(y, y);
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.r2, 1.0);
}

TEST(Metrics, MeanPredictorHasZeroR2) {
  Vector y(4);
  y << 1, 2, 3, 6;
  const Metrics m = compute_metrics(y, Vector::Constant(4, 3.0));
  EXPECT_NEAR(m.r2, 0.0, 1e-15);
}

TEST(Metrics, HandComputedPair) {
  Vector t(2), p(2);
  t << 0, 2;
  p << 1, 1;
  const Metrics m = compute_metrics(t, p);
  EXPECT_DOUBLE_EQ(m.mse, 1.0);
  EXPECT_DOUBLE_EQ(m.mae, 1.0);
  // SSE = SST = 2, and the prediction equals the mean of y_true.
  EXPECT_DOUBLE_EQ(m.r2, 0.0);
}

TEST(Metrics, MaeNeverExceedsRootMse) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(40));
    const Matrix a = standard_normal_matrix(rng, n, 2);
    const Metrics m = compute_metrics(a.col(0), a.col(1));
    EXPECT_LE(m.mae, std::sqrt(m.mse) + 1e-12);
  }
}

TEST(Metrics, Errors) {
  EXPECT_THROW(compute_metrics(Vector::Zero(3), Vector::Zero(2)), ShapeError);
  EXPECT_THROW(compute_metrics(Vector::Constant(3, 2.0), Vector::Zero(3)), UndefinedMetric);
}

TEST(ColumnSummary, SymmetricSet) {
  Vector v(5);
  v << 3, 1, 5, 2, 4;
  const auto s = column_summary(v);
  EXPECT_EQ(s.count, 5u);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.median, 3.0);
  EXPECT_EQ(s.max, 5.0);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.q1, 2.0);
  EXPECT_EQ(s.q3, 4.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.5));
}

TEST(ColumnSummary, ConstantColumn) {
  const auto s = column_summary(Vector::Constant(4, 5.0));
  EXPECT_EQ(s.std, 0.0);
  EXPECT_EQ(s.q1, 5.0);
  EXPECT_EQ(s.median, 5.0);
  EXPECT_EQ(s.q3, 5.0);
}

TEST(ColumnSummary, InterpolatedQuartiles) {
  Vector v(4);
  v << 1, 2, 3, 4;
  const auto s = column_summary(v);
  EXPECT_DOUBLE_EQ(s.q1, 1.75);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.q3, 3.25);
}

TEST(ColumnSummary, EmptyRejected) { EXPECT_THROW(column_summary(Vector()), InvalidArgument); }

TEST(RankConversions, ColumnRoundTrip) {
  Vector v(3);
  v << 1, 2, 3;
  const Matrix m = as_column(v);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 1);
  EXPECT_EQ(column_vector(m, 0), v);
  EXPECT_EQ(shape_string(m), "(3, 1)");
}
