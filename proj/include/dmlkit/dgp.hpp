#pragma once

// Synthetic linear-Gaussian benchmark data: y = features * beta + noise.

#include <cstdint>
#include <string>
#include <vector>

#include "dmlkit/numeric.hpp"

namespace dmlkit {

/// Coefficients of the benchmark design; x1..x3 act as treatments, x4 and x5 as controls.
Vector default_beta();

struct DgpSpec {
  Index n = 1000;
  Vector beta = default_beta();
  double noise_std = 1.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct Dataset {
  Matrix features;  // n x d, columns x1..xd
  Vector outcome;   // length n

  Index rows() const { return features.rows(); }
  /// "x1".."xd" followed by "y".
  std::vector<std::string> column_names() const;
};

struct Partition {
  Matrix T;
  Matrix X;
};

Dataset make_synthetic(const DgpSpec& spec);

/// First `treat_count` feature columns become treatments, the rest controls.
Partition partition_columns(const Dataset& data, Index treat_count = 3);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  double bin_width = 0.0;  // zero for a constant column
  std::vector<std::size_t> counts;
};

/// Tukey box: whiskers reach the most extreme observations within 1.5 IQR of the box.
struct BoxSummary {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double lower_whisker = 0.0;
  double upper_whisker = 0.0;
  std::vector<double> outliers;  // ascending
};

struct ColumnDescription {
  std::string name;
  ColumnSummary summary;
  Histogram histogram;
  BoxSummary box;
};

Histogram histogram(const Vector& col, int bins = 20);
BoxSummary box_summary(const Vector& col);

/// Summary, histogram and box data for every feature column and the outcome.
std::vector<ColumnDescription> describe(const Dataset& data, int bins = 20);

/// CSV with header x1,..,xd,y and shortest round-trip decimal values.
std::string dataset_to_csv(const Dataset& data);

/// Shortest decimal text that parses back to exactly `v`; locale independent.
std::string format_double(double v);

}  // namespace dmlkit
