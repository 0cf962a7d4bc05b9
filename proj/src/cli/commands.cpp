#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "dmlkit/cli.hpp"
#include "dmlkit/errors.hpp"

namespace dmlkit::cli {

namespace {

using nlohmann::ordered_json;

struct GenerateFlags {
  Index n = 1000;
  std::uint64_t seed = 42;
  double noise_std = 1.0;
  std::string out;
};

struct DescribeFlags {
  std::string data;
  std::string y_col = "y";
  int bins = 20;
  std::string bins_out;
};

struct BenchFlags {
  std::string config;
  std::string format = "markdown";
  std::optional<Index> n;
  std::optional<std::uint64_t> seed;
  std::string data;
  bool no_timing = false;
};

struct FitFlags {
  std::string data;
  std::string y_col = "y";
  std::string t_cols;
  std::string x_cols;
  std::string model_y = "random_forest";
  std::string model_t = "random_forest";
  int folds = 2;
  std::uint64_t seed = 42;
  bool no_heterogeneity = false;
  std::string out;
  double t0 = 0.0;
  double t1 = 1.0;
};

// Learner flag: a kind name, or inline JSON starting with '{'.
RegressorSpec spec_from_flag(const std::string& text) {
  if (!text.empty() && text.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("learner spec is not valid JSON: ") + e.what());
    }
    return spec_from_json(j);
  }
  return spec_from_json(nlohmann::json(text));
}

void run_generate(const GenerateFlags& f, std::ostream& out, std::ostream& err) {
  DgpSpec spec;
  spec.n = f.n;
  spec.seed = f.seed;
  spec.noise_std = f.noise_std;
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const std::string csv = dataset_to_csv(make_synthetic(spec));
  if (f.out.empty()) {
    out << csv;
    return;
  }
  write_text_file(f.out, csv);
  err << "wrote " << spec.n << " rows to " << f.out << '\n';
}

void run_describe(const DescribeFlags& f, std::ostream& out, std::ostream& err) {
  if (f.bins < 1) throw UsageError("--bins must be positive");
  const NamedDataset named = read_dataset_csv(f.data, f.y_col);
  auto cols = describe(named.data, f.bins);
  for (std::size_t i = 0; i < cols.size(); ++i) cols[i].name = named.names[i];

  out << "| column | count | mean | std | min | 25% | 50% | 75% | max |\n";
  out << "|---|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& c : cols) {
    const auto& s = c.summary;
    out << "| " << c.name << " | " << s.count << " | " << format_fixed(s.mean) << " | " << format_fixed(s.std)
        << " | " << format_fixed(s.min) << " | " << format_fixed(s.q1) << " | " << format_fixed(s.median) << " | "
        << format_fixed(s.q3) << " | " << format_fixed(s.max) << " |\n";
  }
  out << "\n| column | lower_whisker | q1 | median | q3 | upper_whisker | outliers |\n";
  out << "|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& c : cols) {
    const auto& b = c.box;
    out << "| " << c.name << " | " << format_fixed(b.lower_whisker) << " | " << format_fixed(b.q1) << " | "
        << format_fixed(b.median) << " | " << format_fixed(b.q3) << " | " << format_fixed(b.upper_whisker) << " | "
        << b.outliers.size() << " |\n";
  }

  if (!f.bins_out.empty()) {
    std::string csv = "column,bin,lo,hi,count\n";
    for (const auto& c : cols) {
      const auto& h = c.histogram;
      for (std::size_t k = 0; k < h.counts.size(); ++k) {
        const double lo = h.lo + static_cast<double>(k) * h.bin_width;
        const double hi = k + 1 == h.counts.size() ? h.hi : lo + h.bin_width;
        csv += c.name + ',' + std::to_string(k) + ',' + format_double(lo) + ',' + format_double(hi) + ',' +
               std::to_string(h.counts[k]) + '\n';
      }
    }
    write_text_file(f.bins_out, csv);
    err << "wrote histogram bins to " << f.bins_out << '\n';
  }
}

void run_bench_command(const BenchFlags& f, std::ostream& out, std::ostream& err) {
  ReportFormat format;
  try {
    format = parse_report_format(f.format);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  BenchConfig config;
  std::string data_path;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw DataError("cannot open '" + f.config + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("'" + f.config + "' is not valid JSON: " + e.what());
    }
    config = bench_config_from_json(j, std::filesystem::path(f.config).parent_path().string(), data_path);
  }
  if (f.n) config.n = *f.n;
  if (f.seed) config.seed = *f.seed;
  if (!f.data.empty()) data_path = f.data;
  if (f.no_timing) config.measure_time = false;
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  BenchReport report;
  if (data_path.empty()) {
    report = run_bench(config);
  } else {
    const NamedDataset named = read_dataset_csv(data_path);
    config.n = named.data.rows();
    report = run_bench(config, named.data);
  }
  out << render_report(report, format);
  err << "bench: " << report.rows.size() << " rows; " << report.environment << '\n';
}

struct FitSession {
  ValidatedData data;
  std::vector<std::string> t_names;
  std::vector<std::string> x_names;
  DmlConfig config;
  FittedDml model;
};

FitSession fit_session(const FitFlags& f, std::ostream& err) {
  FitSession s;
  s.t_names = split_list(f.t_cols);
  s.x_names = split_list(f.x_cols);
  if (s.t_names.empty()) throw UsageError("--t-cols needs at least one column name");
  if (s.x_names.empty()) throw UsageError("--x-cols needs at least one column name");
  s.config.model_y = spec_from_flag(f.model_y);
  s.config.model_t = spec_from_flag(f.model_t);
  s.config.n_folds = f.folds;
  s.config.heterogeneity = !f.no_heterogeneity;
  try {
    s.config.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  s.data = load_dataset_csv(f.data, f.y_col, s.t_names, s.x_names);
  Rng rng(f.seed);
  s.model = fit_dml(s.data.Y, s.data.T, s.data.X, s.config, rng);
  for (const auto& w : s.model.warnings) err << "warning: " << w << '\n';
  return s;
}

ordered_json fit_report(const FitFlags& f, const FitSession& s) {
  ordered_json j;
  j["data"] = {{"path", f.data}, {"rows", s.data.Y.size()}, {"y_col", f.y_col}, {"t_cols", s.t_names},
               {"x_cols", s.x_names}};
  j["config"] = {{"model_y", spec_to_json(s.config.model_y)},
                 {"model_t", spec_to_json(s.config.model_t)},
                 {"folds", s.config.n_folds},
                 {"seed", f.seed},
                 {"heterogeneity", s.config.heterogeneity}};
  ordered_json treatments = ordered_json::array();
  for (Index t = 0; t < s.model.d_t; ++t) {
    const Index at = s.model.intercept_index(t);
    const EffectInterval ci = analytic_coef_interval(s.model, t);
    ordered_json slopes = ordered_json::object();
    for (Index m = 0; m < s.model.d_x; ++m) {
      slopes[s.x_names[static_cast<std::size_t>(m)]] = s.model.slopes(t, m);
    }
    treatments.push_back({{"name", s.t_names[static_cast<std::size_t>(t)]},
                          {"intercept", s.model.intercepts[t]},
                          {"intercept_std_error", std::sqrt(std::max(0.0, s.model.covariance(at, at)))},
                          {"intercept_ci95", {ci.lower, ci.upper}},
                          {"slopes", slopes}});
  }
  j["treatments"] = treatments;
  j["residual_variance"] = s.model.residual_variance;
  j["warnings"] = s.model.warnings;
  return j;
}

void run_fit(const FitFlags& f, std::ostream& out, std::ostream& err) {
  const FitSession s = fit_session(f, err);
  write_text_file(f.out, fit_report(f, s).dump(2) + '\n');
  err << "wrote fit report to " << f.out << '\n';

  out << "| treatment | intercept | std_error | ci_lower | ci_upper |";
  for (const auto& x : s.x_names) out << " slope_" << x << " |";
  out << "\n|---|---:|---:|---:|---:|";
  for (std::size_t m = 0; m < s.x_names.size(); ++m) out << "---:|";
  out << '\n';
  for (Index t = 0; t < s.model.d_t; ++t) {
    const Index at = s.model.intercept_index(t);
    const EffectInterval ci = analytic_coef_interval(s.model, t);
    out << "| " << s.t_names[static_cast<std::size_t>(t)] << " | " << format_fixed(s.model.intercepts[t]) << " | "
        << format_fixed(std::sqrt(std::max(0.0, s.model.covariance(at, at)))) << " | " << format_fixed(ci.lower)
        << " | " << format_fixed(ci.upper) << " |";
    for (Index m = 0; m < s.model.d_x; ++m) out << ' ' << format_fixed(s.model.slopes(t, m)) << " |";
    out << '\n';
  }
}

void run_effect(const FitFlags& f, std::ostream& out, std::ostream& err) {
  const FitSession s = fit_session(f, err);
  const Matrix& X = s.data.X;
  const Matrix theta = const_marginal_effect(s.model, X);
  const Matrix per_treatment = theta * (f.t1 - f.t0);
  const Vector total = effect(s.model, X, f.t0, f.t1);

  std::string csv = "row,effect";
  for (const auto& t : s.t_names) csv += ",cate_" + t;
  csv += '\n';
  for (Index i = 0; i < X.rows(); ++i) {
    csv += std::to_string(i) + ',' + format_double(total[i]);
    for (Index t = 0; t < theta.cols(); ++t) csv += ',' + format_double(theta(i, t));
    csv += '\n';
  }
  write_text_file(f.out, csv);
  err << "wrote per-row effects to " << f.out << '\n';

  out << "ATE (T0=" << format_fixed(f.t0) << ", T1=" << format_fixed(f.t1) << "): " << format_fixed(total.mean())
      << '\n';
  for (Index t = 0; t < s.model.d_t; ++t) {
    const EffectInterval d = dispersion_interval(per_treatment, t);
    const EffectInterval a = analytic_coef_interval(s.model, t);
    out << "ATE for " << s.t_names[static_cast<std::size_t>(t)] << ": " << format_fixed(d.mean) << '\n';
    out << "  dispersion interval (mean +/- 1.96 std of per-row effects): [" << format_fixed(d.lower) << ", "
        << format_fixed(d.upper) << "]\n";
    out << "  analytic 95% interval for the intercept coefficient: [" << format_fixed(a.lower) << ", "
        << format_fixed(a.upper) << "]\n";
  }
}

void add_fit_options(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--data", f.data, "Input CSV with a header row")->required();
  cmd->add_option("--y-col", f.y_col, "Outcome column")->capture_default_str();
  cmd->add_option("--t-cols", f.t_cols, "Comma-separated treatment columns")->required();
  cmd->add_option("--x-cols", f.x_cols, "Comma-separated control columns")->required();
  cmd->add_option("--model-y", f.model_y, "Outcome learner (kind name or JSON object)")->capture_default_str();
  cmd->add_option("--model-t", f.model_t, "Treatment learner (kind name or JSON object)")->capture_default_str();
  cmd->add_option("--folds", f.folds, "Cross-fitting folds")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  cmd->add_flag("--no-heterogeneity", f.no_heterogeneity, "Fit a constant effect per treatment");
  cmd->add_option("--out", f.out, "Output path")->required();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Double machine learning toolkit", "dmlkit"};
  app.require_subcommand(1, 1);

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  generate->add_option("--n", gen.n, "Rows")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  generate->add_option("--noise-std", gen.noise_std, "Noise standard deviation")->capture_default_str();
  generate->add_option("--out", gen.out, "Output CSV (stdout when omitted)");

  DescribeFlags desc;
  auto* describe_cmd = app.add_subcommand("describe", "Summary statistics for a dataset CSV");
  describe_cmd->add_option("--data", desc.data, "Input CSV")->required();
  describe_cmd->add_option("--y-col", desc.y_col, "Outcome column")->capture_default_str();
  describe_cmd->add_option("--bins", desc.bins, "Histogram bins")->capture_default_str();
  describe_cmd->add_option("--bins-out", desc.bins_out, "Write histogram bins as CSV");

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "Run the learner comparison suite");
  bench->add_option("--config", bf.config, "JSON config file");
  bench->add_option("--format", bf.format, "markdown, csv or json")->capture_default_str();
  bench->add_option("--n", bf.n, "Override the dataset size");
  bench->add_option("--seed", bf.seed, "Override the seed");
  bench->add_option("--data", bf.data, "Use a dataset CSV instead of generating one");
  bench->add_flag("--no-timing", bf.no_timing, "Report NA instead of wall-clock training times");

  FitFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "Fit DML and write a JSON report");
  add_fit_options(fit, fit_flags);

  FitFlags effect_flags;
  auto* effect_cmd = app.add_subcommand("effect", "Per-row effects, ATE and intervals");
  add_fit_options(effect_cmd, effect_flags);
  effect_cmd->add_option("--t0", effect_flags.t0, "Baseline treatment level")->capture_default_str();
  effect_cmd->add_option("--t1", effect_flags.t1, "Target treatment level")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    if (generate->parsed()) run_generate(gen, out, err);
    else if (describe_cmd->parsed()) run_describe(desc, out, err);
    else if (bench->parsed()) run_bench_command(bf, out, err);
    else if (fit->parsed()) run_fit(fit_flags, out, err);
    else if (effect_cmd->parsed()) run_effect(effect_flags, out, err);
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dmlkit::cli
