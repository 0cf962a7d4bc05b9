#pragma once

// Learner comparison harness over the synthetic design. Three tracks:
//   dml      - fit DML on an 80/20 split, score effect(X_test, 0 -> 1)
//              against raw y_test (effect-vs-outcome protocol)
//   plain    - fit the outcome learner on all features, score test predictions
//              and record 5-fold CV r2 on the training rows
//   recovery - fit DML on all rows and compare the mean constant marginal
//              effects with the known treatment coefficients

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmlkit/dgp.hpp"
#include "dmlkit/dml.hpp"
#include "dmlkit/learners.hpp"

namespace dmlkit {

enum class Track { kDml, kPlain, kRecovery };

std::string_view track_name(Track t);
Track parse_track(std::string_view name);

struct BenchEntry {
  std::string name;
  RegressorSpec model_y;
  RegressorSpec model_t;
  /// Tracks this entry takes part in; empty means every requested track.
  std::vector<Track> tracks;
};

/// Six DML entries (random forest, MLP, two boosted-tree rows, lasso, ridge)
/// plus an OLS entry for the plain track; every entry also runs recovery.
std::vector<BenchEntry> default_suite();

struct BenchConfig {
  std::vector<BenchEntry> suite = default_suite();
  Index n = 1000;
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  double noise_std = 1.0;
  Vector beta = default_beta();  // ground truth for the recovery track
  Index treat_count = 3;
  std::vector<Track> tracks = {Track::kDml, Track::kPlain, Track::kRecovery};
  int dml_folds = 2;
  int cv_folds = 5;
  bool heterogeneity = true;
  bool measure_time = true;
  /// Run one discarded fit first for MLP and boosted-tree entries.
  bool warmup = true;

  void validate() const;
  bool runs(const BenchEntry& entry, Track t) const;
};

struct BenchRow {
  std::string name;
  Track track = Track::kDml;
  double train_time_s = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;  // NaN when undefined
  std::optional<double> cv_r2;
  std::optional<Vector> theta_hat;
  std::optional<double> max_abs_error;
};

struct BenchReport {
  BenchConfig config;
  std::vector<BenchRow> rows;
  std::string environment;
};

/// Dataset the config describes (seeded by `config.seed`).
Dataset bench_dataset(const BenchConfig& config);

BenchRow run_dml_track(const BenchEntry& entry, std::size_t entry_index, const Dataset& data, const BenchConfig& config);
BenchRow run_plain_track(const BenchEntry& entry, std::size_t entry_index, const Dataset& data,
                         const BenchConfig& config);
BenchRow run_recovery_track(const BenchEntry& entry, std::size_t entry_index, const Dataset& data,
                            const BenchConfig& config);

/// Every (entry, track) pair the config requests, in suite order then track order.
BenchReport run_bench(const BenchConfig& config, const Dataset& data);
BenchReport run_bench(const BenchConfig& config);

enum class ReportFormat { kMarkdown, kCsv, kJson };
ReportFormat parse_report_format(std::string_view name);

/// Fixed four-decimal, locale-independent rendering.
std::string render_report(const BenchReport& report, ReportFormat format);

/// Fixed-point text with `decimals` places; never emits "-0.0000".
std::string format_fixed(double v, int decimals = 4);

}  // namespace dmlkit
