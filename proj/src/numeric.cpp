#include "dmlkit/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dmlkit/errors.hpp"

namespace dmlkit {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("Rng::below: bound must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Rng Rng::derive(std::uint64_t stream) const {
  return Rng(mix_seed(seed_ ^ mix_seed(stream + 0x632BE59BD9B4E019ULL)));
}

void Rng::shuffle(IndexList& idx) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

Matrix standard_normal_matrix(Rng& rng, Index n, Index d) {
  if (n < 1 || d < 1) {
    throw InvalidArgument("standard_normal_matrix: dimensions must be positive, got " +
                          std::to_string(n) + "x" + std::to_string(d));
  }
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

TrainTestSplit train_test_split(const Matrix& X, const Vector& y, double test_fraction, Rng& rng) {
  if (X.rows() != y.size()) {
    throw ShapeError("train_test_split: X has " + std::to_string(X.rows()) + " rows but y has length " +
                     std::to_string(y.size()));
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("train_test_split: test_fraction must lie in (0, 1)");
  }
  const Index n = X.rows();
  const auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n_test >= n) {
    throw InvalidArgument("train_test_split: split of " + std::to_string(n) + " rows leaves an empty side");
  }
  IndexList perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  rng.shuffle(perm);

  TrainTestSplit out;
  out.test_idx.assign(perm.begin(), perm.begin() + n_test);
  out.train_idx.assign(perm.begin() + n_test, perm.end());
  out.X_train = take_rows(X, out.train_idx);
  out.X_test = take_rows(X, out.test_idx);
  out.y_train = take_rows(y, out.train_idx);
  out.y_test = take_rows(y, out.test_idx);
  return out;
}

std::vector<Fold> kfold_indices(Index n, int k, Rng& rng) {
  if (k < 2 || k > n) {
    throw InvalidArgument("kfold_indices: need 2 <= k <= n, got k=" + std::to_string(k) +
                          ", n=" + std::to_string(n));
  }
  IndexList perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  rng.shuffle(perm);

  std::vector<int> owner(static_cast<std::size_t>(n));
  const Index base = n / k;
  const Index extra = n % k;
  Index pos = 0;
  for (int f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    for (Index i = 0; i < size; ++i) owner[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos++)])] = f;
  }

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) {
    const int f = owner[static_cast<std::size_t>(i)];
    for (int g = 0; g < k; ++g) {
      auto& fold = folds[static_cast<std::size_t>(g)];
      (g == f ? fold.heldout : fold.train).push_back(i);
    }
  }
  return folds;
}

Metrics compute_metrics(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ShapeError("compute_metrics: y_true has length " + std::to_string(y_true.size()) +
                     " but y_pred has length " + std::to_string(y_pred.size()));
  }
  if (y_true.size() < 2) throw InvalidArgument("compute_metrics: need at least 2 samples");
  const double n = static_cast<double>(y_true.size());
  const Vector err = y_true - y_pred;
  const double sse = err.squaredNorm();
  const double sst = (y_true.array() - y_true.mean()).square().sum();
  if (sst == 0.0) throw UndefinedMetric("compute_metrics: r2 is undefined because y_true has zero variance");
  Metrics m;
  m.mse = sse / n;
  m.mae = err.cwiseAbs().sum() / n;
  m.r2 = 1.0 - sse / sst;
  return m;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("sorted_quantile: empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ColumnSummary column_summary(const Vector& col) {
  if (col.size() < 2) throw InvalidArgument("column_summary: need at least 2 values, got " + std::to_string(col.size()));
  std::vector<double> v(col.data(), col.data() + col.size());
  std::sort(v.begin(), v.end());
  ColumnSummary s;
  s.count = v.size();
  s.mean = col.mean();
  s.std = std::sqrt((col.array() - s.mean).square().sum() / static_cast<double>(v.size() - 1));
  s.min = v.front();
  s.max = v.back();
  s.q1 = sorted_quantile(v, 0.25);
  s.median = sorted_quantile(v, 0.5);
  s.q3 = sorted_quantile(v, 0.75);
  return s;
}

Matrix take_rows(const Matrix& X, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = X.row(rows[i]);
  return out;
}

Vector take_rows(const Vector& y, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = y[rows[i]];
  return out;
}

Matrix as_column(const Vector& v) { return Matrix(v); }

Vector column_vector(const Matrix& m, Index col) {
  if (col < 0 || col >= m.cols()) {
    throw ShapeError("column_vector: column " + std::to_string(col) + " out of range for " + shape_string(m));
  }
  return m.col(col);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

std::string shape_string(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + ")";
}

}  // namespace dmlkit
