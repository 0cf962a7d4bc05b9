#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dmlkit/dgp.hpp"
#include "dmlkit/errors.hpp"

using namespace dmlkit;

namespace {

Dataset default_data() { return make_synthetic(DgpSpec{}); }

}  // namespace

TEST(Synthetic, ShapesAndColumnNames) {
  const Dataset d = default_data();
  EXPECT_EQ(d.features.rows(), 1000);
  EXPECT_EQ(d.features.cols(), 5);
  EXPECT_EQ(d.outcome.size(), 1000);
  EXPECT_EQ(d.column_names(), (std::vector<std::string>{"x1", "x2", "x3", "x4", "x5", "y"}));
}

TEST(Synthetic, OutcomeSpreadMatchesDesign) {
  // Var(y) = |beta|^2 + 1 = 16.5.
  const ColumnSummary s = column_summary(default_data().outcome);
  EXPECT_GE(s.std, 3.85);
  EXPECT_LE(s.std, 4.30);
  EXPECT_NEAR(s.mean, 0.0, 0.35);
}

TEST(Synthetic, FeatureRange) {
  const Dataset d = default_data();
  EXPECT_GE(d.features.minCoeff(), -4.5);
  EXPECT_LE(d.features.maxCoeff(), 4.5);
}

TEST(Synthetic, NoiselessIsExactlyLinear) {
  DgpSpec spec;
  spec.noise_std = 0.0;
  const Dataset d = make_synthetic(spec);
  EXPECT_EQ(d.outcome, Vector(d.features * spec.beta));
}

TEST(Synthetic, SameSeedSameData) {
  EXPECT_EQ(default_data().outcome, default_data().outcome);
  DgpSpec other;
  other.seed = 43;
  EXPECT_NE(default_data().outcome, make_synthetic(other).outcome);
}

TEST(Synthetic, ValidationErrors) {
  DgpSpec spec;
  spec.n = 0;
  EXPECT_THROW(make_synthetic(spec), InvalidArgument);
  spec = {};
  spec.noise_std = -1.0;
  EXPECT_THROW(make_synthetic(spec), InvalidArgument);
}

TEST(Partition, DefaultRoles) {
  const Dataset d = default_data();
  const Partition p = partition_columns(d, 3);
  EXPECT_EQ(p.T.cols(), 3);
  EXPECT_EQ(p.X.cols(), 2);
  const Partition q = partition_columns(d, 4);
  EXPECT_EQ(q.T.cols(), 4);
  EXPECT_EQ(q.X.cols(), 1);
  EXPECT_THROW(partition_columns(d, 5), InvalidArgument);
  EXPECT_THROW(partition_columns(d, 0), InvalidArgument);
}

TEST(Partition, ConcatenationRestoresFeatures) {
  const Dataset d = default_data();
  for (Index k = 1; k < 5; ++k) {
    const Partition p = partition_columns(d, k);
    Matrix joined(d.rows(), 5);
    joined << p.T, p.X;
    EXPECT_EQ(joined, d.features);
  }
}

TEST(Histogram, CountsSumAndRange) {
  const Vector col = default_data().outcome;
  const Histogram h = histogram(col, 20);
  EXPECT_EQ(h.counts.size(), 20u);
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(total, 1000u);
  EXPECT_EQ(h.lo, col.minCoeff());
  EXPECT_EQ(h.hi, col.maxCoeff());
  EXPECT_GT(h.counts.back(), 0u);  // the maximum lands in the last bin
}

TEST(Histogram, ConstantColumnUsesOneBin) {
  const Histogram h = histogram(Vector::Constant(7, 2.0), 20);
  EXPECT_EQ(h.counts[0], 7u);
  EXPECT_EQ(h.bin_width, 0.0);
}

TEST(BoxSummary, ConstantColumnHasZeroWidthBox) {
  const BoxSummary b = box_summary(Vector::Constant(7, 2.0));
  EXPECT_EQ(b.q1, b.q3);
  EXPECT_EQ(b.lower_whisker, 2.0);
  EXPECT_EQ(b.upper_whisker, 2.0);
  EXPECT_TRUE(b.outliers.empty());
}

TEST(BoxSummary, TukeyFences) {
  Vector v(9);
  v << 1, 2, 3, 4, 5, 6, 7, 8, 100;
  const BoxSummary b = box_summary(v);
  // q1 = 3, q3 = 7, fences at -3 and 13.
  EXPECT_EQ(b.q1, 3.0);
  EXPECT_EQ(b.q3, 7.0);
  EXPECT_EQ(b.lower_whisker, 1.0);
  EXPECT_EQ(b.upper_whisker, 8.0);
  EXPECT_EQ(b.outliers, std::vector<double>{100.0});
}

TEST(Describe, SixColumnsWithOutcomeLast) {
  const auto cols = describe(default_data());
  ASSERT_EQ(cols.size(), 6u);
  EXPECT_EQ(cols.back().name, "y");
  EXPECT_LT(cols.back().summary.min, -10.0);
  EXPECT_GT(cols.back().summary.max, 10.0);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_GE(cols[j].summary.std, 0.90);
    EXPECT_LE(cols[j].summary.std, 1.10);
  }
}

TEST(Csv, ValuesRoundTripAtFullPrecision) {
  DgpSpec spec;
  spec.n = 30;
  const Dataset d = make_synthetic(spec);
  const std::string csv = dataset_to_csv(d);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x1,x2,x3,x4,x5,y");
  Index row = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (Index j = 0; j < 6; ++j) {
      ASSERT_TRUE(std::getline(cells, cell, ','));
      const double expected = j < 5 ? d.features(row, j) : d.outcome[row];
      EXPECT_EQ(std::stod(cell), expected);
    }
    ++row;
  }
  EXPECT_EQ(row, 30);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  const double awkward = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_double(awkward)), awkward);
}
