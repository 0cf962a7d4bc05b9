#pragma once

// Dense containers, seeded sampling, splitting and regression metrics.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dmlkit {

/// Dense row-major real matrix. Rows are samples, columns are features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rank-1 real vector. Never interchangeable with an n x 1 Matrix; use
/// `as_column` / `column_vector` to convert explicitly.
using Vector = Eigen::VectorXd;

using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Seeded pseudo-random source.
///
/// Backed by the 64-bit Mersenne Twister, whose output sequence is fixed by
/// the C++ standard. Uniform and normal variates are produced here rather
/// than through <random> distributions, whose algorithms are
/// implementation-defined, so streams are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal draw (Box-Muller, both variates used).
  double normal();

  /// Independent child stream identified by `stream`. Depends only on the
  /// seed and the stream id, never on how far this generator has advanced.
  Rng derive(std::uint64_t stream) const;

  /// Fisher-Yates shuffle of `idx`.
  void shuffle(IndexList& idx);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used for seed derivation.
std::uint64_t mix_seed(std::uint64_t x);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
};

struct ColumnSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

struct TrainTestSplit {
  Matrix X_train;
  Matrix X_test;
  Vector y_train;
  Vector y_test;
  IndexList train_idx;
  IndexList test_idx;
};

struct Fold {
  IndexList train;
  IndexList heldout;
};

Matrix standard_normal_matrix(Rng& rng, Index n, Index d);

TrainTestSplit train_test_split(const Matrix& X, const Vector& y, double test_fraction, Rng& rng);

/// Shuffled K-fold partition of {0..n-1}. Held-out sizes differ by at most one
/// and each fold's index lists are sorted.
std::vector<Fold> kfold_indices(Index n, int k, Rng& rng);

Metrics compute_metrics(const Vector& y_true, const Vector& y_pred);

/// Eight-number summary. Quartiles interpolate linearly between order
/// statistics at position (n - 1) * p.
ColumnSummary column_summary(const Vector& col);

/// Linearly interpolated quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double p);

Matrix take_rows(const Matrix& X, std::span<const Index> rows);
Vector take_rows(const Vector& y, std::span<const Index> rows);

/// Explicit rank conversions.
Matrix as_column(const Vector& v);
Vector column_vector(const Matrix& m, Index col);

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

std::string shape_string(const Matrix& m);

}  // namespace dmlkit
