#include "dmlkit/dgp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "dmlkit/errors.hpp"

namespace dmlkit {

Vector default_beta() {
  Vector beta(5);
  beta << 1.5, -2.0, 0.5, 0.0, 3.0;
  return beta;
}

void DgpSpec::validate() const {
  if (n < 1) throw InvalidArgument("DgpSpec: n must be positive");
  if (beta.size() < 1) throw InvalidArgument("DgpSpec: beta must have at least one coefficient");
  if (!beta.allFinite()) throw InvalidArgument("DgpSpec: beta must be finite");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw InvalidArgument("DgpSpec: noise_std must be finite and >= 0");
}

std::vector<std::string> Dataset::column_names() const {
  std::vector<std::string> names;
  for (Index j = 0; j < features.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  names.emplace_back("y");
  return names;
}

Dataset make_synthetic(const DgpSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Dataset data;
  data.features = standard_normal_matrix(rng, spec.n, spec.beta.size());
  Vector noise(spec.n);
  for (Index i = 0; i < spec.n; ++i) noise[i] = rng.normal();
  data.outcome = data.features * spec.beta + spec.noise_std * noise;
  return data;
}

Partition partition_columns(const Dataset& data, Index treat_count) {
  const Index d = data.features.cols();
  if (treat_count < 1 || treat_count >= d) {
    throw InvalidArgument("partition_columns: treat_count must lie in [1, " + std::to_string(d - 1) + "], got " +
                          std::to_string(treat_count));
  }
  return {data.features.leftCols(treat_count), data.features.rightCols(d - treat_count)};
}

Histogram histogram(const Vector& col, int bins) {
  if (bins < 1) throw InvalidArgument("histogram: bins must be positive");
  if (col.size() < 1) throw InvalidArgument("histogram: empty column");
  Histogram h;
  h.lo = col.minCoeff();
  h.hi = col.maxCoeff();
  h.bin_width = (h.hi - h.lo) / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (Index i = 0; i < col.size(); ++i) {
    std::size_t b = 0;
    if (h.bin_width > 0.0) {
      const auto raw = static_cast<long long>(std::floor((col[i] - h.lo) / h.bin_width));
      b = static_cast<std::size_t>(std::clamp<long long>(raw, 0, bins - 1));
    }
    ++h.counts[b];
  }
  return h;
}

BoxSummary box_summary(const Vector& col) {
  const ColumnSummary s = column_summary(col);
  BoxSummary box;
  box.q1 = s.q1;
  box.median = s.median;
  box.q3 = s.q3;
  const double iqr = s.q3 - s.q1;
  const double low_fence = s.q1 - 1.5 * iqr;
  const double high_fence = s.q3 + 1.5 * iqr;
  box.lower_whisker = s.q1;
  box.upper_whisker = s.q3;
  std::vector<double> sorted(col.data(), col.data() + col.size());
  std::sort(sorted.begin(), sorted.end());
  bool have_low = false;
  for (double v : sorted) {
    if (v < low_fence || v > high_fence) {
      box.outliers.push_back(v);
      continue;
    }
    if (!have_low) {
      box.lower_whisker = v;
      have_low = true;
    }
    box.upper_whisker = v;
  }
  return box;
}

std::vector<ColumnDescription> describe(const Dataset& data, int bins) {
  if (data.rows() < 2) throw InvalidArgument("describe: need at least 2 rows");
  const auto names = data.column_names();
  std::vector<ColumnDescription> out;
  for (Index j = 0; j <= data.features.cols(); ++j) {
    const Vector col = j < data.features.cols() ? Vector(data.features.col(j)) : data.outcome;
    out.push_back({names[static_cast<std::size_t>(j)], column_summary(col), histogram(col, bins), box_summary(col)});
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  const auto names = data.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out += ',';
    out += names[j];
  }
  out += '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.features.cols(); ++j) {
      out += format_double(data.features(i, j));
      out += ',';
    }
    out += format_double(data.outcome[i]);
    out += '\n';
  }
  return out;
}

}  // namespace dmlkit
