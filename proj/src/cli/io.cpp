#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dmlkit/cli.hpp"
#include "dmlkit/errors.hpp"

namespace dmlkit::cli {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw DataError("column '" + name + "' not found in CSV header");
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record.front().empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) throw DataError("CSV: stray quote inside an unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw DataError("CSV: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();

  if (records.empty()) throw DataError("CSV: missing header row");
  CsvTable table;
  table.header = std::move(records.front());
  std::set<std::string> seen;
  for (const auto& name : table.header) {
    if (!seen.insert(name).second) throw DataError("CSV: duplicate column name '" + name + "'");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError("CSV: row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields but the header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

double numeric_cell(const CsvTable& table, std::size_t row, std::size_t col) {
  const std::string& cell = table.rows.at(row).at(col);
  std::size_t b = 0;
  std::size_t e = cell.size();
  while (b < e && cell[b] == ' ') ++b;
  while (e > b && cell[e - 1] == ' ') --e;
  double v = 0.0;
  const char* first = cell.data() + b;
  if (b < e && *first == '+') ++first;
  const auto res = std::from_chars(first, cell.data() + e, v);
  if (b == e || res.ec != std::errc() || res.ptr != cell.data() + e || !std::isfinite(v)) {
    throw DataError("non-numeric value '" + cell + "' at row " + std::to_string(row + 1) + ", column '" +
                    table.header[col] + "'");
  }
  return v;
}

ValidatedData load_dataset_csv(const CsvTable& table, const std::string& y_col, const std::vector<std::string>& t_cols,
                               const std::vector<std::string>& x_cols) {
  if (t_cols.empty()) throw DataError("no treatment columns given");
  if (x_cols.empty()) throw DataError("no control columns given");
  std::set<std::string> used{y_col};
  for (const auto* group : {&t_cols, &x_cols}) {
    for (const auto& name : *group) {
      if (!used.insert(name).second) throw DataError("column '" + name + "' is assigned to more than one role");
    }
  }

  const std::size_t y_at = table.column(y_col);
  std::vector<std::size_t> t_at;
  std::vector<std::size_t> x_at;
  for (const auto& name : t_cols) t_at.push_back(table.column(name));
  for (const auto& name : x_cols) x_at.push_back(table.column(name));

  const auto n = static_cast<Index>(table.rows.size());
  Vector Y(n);
  Matrix T(n, static_cast<Index>(t_at.size()));
  Matrix X(n, static_cast<Index>(x_at.size()));
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    Y[i] = numeric_cell(table, r, y_at);
    for (std::size_t j = 0; j < t_at.size(); ++j) T(i, static_cast<Index>(j)) = numeric_cell(table, r, t_at[j]);
    for (std::size_t j = 0; j < x_at.size(); ++j) X(i, static_cast<Index>(j)) = numeric_cell(table, r, x_at[j]);
  }
  return validate_shapes(NdArray::from(Y), NdArray::from(T), NdArray::from(X));
}

ValidatedData load_dataset_csv(const std::string& path, const std::string& y_col, const std::vector<std::string>& t_cols,
                               const std::vector<std::string>& x_cols) {
  return load_dataset_csv(read_csv_file(path), y_col, t_cols, x_cols);
}

NamedDataset read_dataset_csv(const std::string& path, const std::string& y_col) {
  const CsvTable table = read_csv_file(path);
  const std::size_t y_at = table.column(y_col);
  if (table.header.size() < 2) throw DataError("'" + path + "' needs at least one feature column besides '" + y_col + "'");
  const auto n = static_cast<Index>(table.rows.size());
  const auto d = static_cast<Index>(table.header.size() - 1);

  NamedDataset out;
  out.data.features.resize(n, d);
  out.data.outcome.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index j = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const double v = numeric_cell(table, static_cast<std::size_t>(i), c);
      if (c == y_at) out.data.outcome[i] = v;
      else out.data.features(i, j++) = v;
    }
  }
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (c != y_at) out.names.push_back(table.header[c]);
  out.names.push_back(y_col);
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write '" + path + "'");
  file << text;
  if (!file) throw DataError("failed writing '" + path + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw UsageError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

RegressorSpec spec_from_json(const json& j) {
  try {
    if (j.is_string()) return RegressorSpec::defaults(parse_learner_kind(j.get<std::string>()));
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
      throw UsageError("learner spec must be a kind name or an object with a \"kind\" field");
    }
    const LearnerKind kind = parse_learner_kind(j["kind"].get<std::string>());
    const std::string where = "learner " + std::string(learner_name(kind));
    switch (kind) {
      case LearnerKind::kOls:
        reject_unknown(j, {"kind"}, where);
        return RegressorSpec::ols();
      case LearnerKind::kRidge: {
        reject_unknown(j, {"kind", "alpha"}, where);
        RidgeParams p;
        read_opt(j, "alpha", p.alpha, where);
        return RegressorSpec::ridge(p);
      }
      case LearnerKind::kLassoCv:
      case LearnerKind::kMultiTaskLassoCv: {
        reject_unknown(j, {"kind", "folds", "n_lambdas", "lambda_ratio", "tol", "max_iter"}, where);
        LassoCvParams p;
        read_opt(j, "folds", p.folds, where);
        read_opt(j, "n_lambdas", p.n_lambdas, where);
        read_opt(j, "lambda_ratio", p.lambda_ratio, where);
        read_opt(j, "tol", p.tol, where);
        read_opt(j, "max_iter", p.max_iter, where);
        return kind == LearnerKind::kLassoCv ? RegressorSpec::lasso_cv(p) : RegressorSpec::multitask_lasso_cv(p);
      }
      case LearnerKind::kRandomForest: {
        reject_unknown(j, {"kind", "n_trees", "max_depth", "min_samples_leaf", "max_features", "bootstrap"}, where);
        ForestParams p;
        read_opt(j, "n_trees", p.n_trees, where);
        read_opt(j, "max_depth", p.max_depth, where);
        read_opt(j, "min_samples_leaf", p.min_samples_leaf, where);
        read_opt(j, "max_features", p.max_features, where);
        read_opt(j, "bootstrap", p.bootstrap, where);
        return RegressorSpec::random_forest(p);
      }
      case LearnerKind::kGradientBoostedTrees: {
        reject_unknown(j, {"kind", "n_rounds", "learning_rate", "max_depth", "min_samples_leaf"}, where);
        BoostingParams p;
        read_opt(j, "n_rounds", p.n_rounds, where);
        read_opt(j, "learning_rate", p.learning_rate, where);
        read_opt(j, "max_depth", p.max_depth, where);
        read_opt(j, "min_samples_leaf", p.min_samples_leaf, where);
        return RegressorSpec::gradient_boosted_trees(p);
      }
      case LearnerKind::kMlp: {
        reject_unknown(j, {"kind", "hidden", "learning_rate", "beta1", "beta2", "epsilon", "epochs", "l2"}, where);
        MlpParams p;
        read_opt(j, "hidden", p.hidden, where);
        read_opt(j, "learning_rate", p.learning_rate, where);
        read_opt(j, "beta1", p.beta1, where);
        read_opt(j, "beta2", p.beta2, where);
        read_opt(j, "epsilon", p.epsilon, where);
        read_opt(j, "epochs", p.epochs, where);
        read_opt(j, "l2", p.l2, where);
        return RegressorSpec::mlp(p);
      }
    }
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  throw UsageError("unsupported learner spec");
}

json spec_to_json(const RegressorSpec& spec) {
  json j;
  j["kind"] = std::string(learner_name(spec.kind()));
  switch (spec.kind()) {
    case LearnerKind::kOls: break;
    case LearnerKind::kRidge: j["alpha"] = spec.get<RidgeParams>().alpha; break;
    case LearnerKind::kLassoCv:
    case LearnerKind::kMultiTaskLassoCv: {
      const auto& p = spec.get<LassoCvParams>();
      j["folds"] = p.folds;
      j["n_lambdas"] = p.n_lambdas;
      j["lambda_ratio"] = p.lambda_ratio;
      j["tol"] = p.tol;
      j["max_iter"] = p.max_iter;
      break;
    }
    case LearnerKind::kRandomForest: {
      const auto& p = spec.get<ForestParams>();
      j["n_trees"] = p.n_trees;
      j["max_depth"] = p.max_depth;
      j["min_samples_leaf"] = p.min_samples_leaf;
      j["max_features"] = p.max_features;
      j["bootstrap"] = p.bootstrap;
      break;
    }
    case LearnerKind::kGradientBoostedTrees: {
      const auto& p = spec.get<BoostingParams>();
      j["n_rounds"] = p.n_rounds;
      j["learning_rate"] = p.learning_rate;
      j["max_depth"] = p.max_depth;
      j["min_samples_leaf"] = p.min_samples_leaf;
      break;
    }
    case LearnerKind::kMlp: {
      const auto& p = spec.get<MlpParams>();
      j["hidden"] = p.hidden;
      j["learning_rate"] = p.learning_rate;
      j["beta1"] = p.beta1;
      j["beta2"] = p.beta2;
      j["epsilon"] = p.epsilon;
      j["epochs"] = p.epochs;
      j["l2"] = p.l2;
      break;
    }
  }
  return j;
}

BenchConfig bench_config_from_json(const json& j, const std::string& base_dir, std::string& data_path) {
  if (!j.is_object()) throw UsageError("bench config must be a JSON object");
  const std::string where = "bench config";
  reject_unknown(j,
                 {"n", "seed", "test_fraction", "noise_std", "beta", "treat_count", "tracks", "dml_folds", "cv_folds",
                  "heterogeneity", "measure_time", "warmup", "data", "suite"},
                 where);
  BenchConfig c;
  read_opt(j, "n", c.n, where);
  read_opt(j, "seed", c.seed, where);
  read_opt(j, "test_fraction", c.test_fraction, where);
  read_opt(j, "noise_std", c.noise_std, where);
  read_opt(j, "treat_count", c.treat_count, where);
  read_opt(j, "dml_folds", c.dml_folds, where);
  read_opt(j, "cv_folds", c.cv_folds, where);
  read_opt(j, "heterogeneity", c.heterogeneity, where);
  read_opt(j, "measure_time", c.measure_time, where);
  read_opt(j, "warmup", c.warmup, where);
  if (j.contains("beta")) {
    std::vector<double> beta;
    read_opt(j, "beta", beta, where);
    c.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
  }

  auto tracks_of = [&](const json& node, const std::string& at) {
    std::vector<std::string> names;
    read_opt(node, "tracks", names, at);
    std::vector<Track> out;
    try {
      for (const auto& name : names) out.push_back(parse_track(name));
    } catch (const InvalidArgument& e) {
      throw UsageError(at + ": " + e.what());
    }
    return out;
  };
  if (j.contains("tracks")) c.tracks = tracks_of(j, where);

  if (j.contains("suite")) {
    if (!j["suite"].is_array()) throw UsageError(where + ": 'suite' must be an array");
    c.suite.clear();
    for (const auto& e : j["suite"]) {
      if (!e.is_object()) throw UsageError(where + ": suite entries must be objects");
      reject_unknown(e, {"name", "model_y", "model_t", "tracks"}, "suite entry");
      if (!e.contains("name") || !e["name"].is_string()) throw UsageError("suite entry: missing 'name'");
      const std::string name = e["name"].get<std::string>();
      if (!e.contains("model_y")) throw UsageError("suite entry '" + name + "': missing 'model_y'");
      const RegressorSpec model_y = spec_from_json(e["model_y"]);
      const RegressorSpec model_t = e.contains("model_t") ? spec_from_json(e["model_t"]) : model_y;
      c.suite.push_back({name, model_y, model_t, tracks_of(e, "suite entry '" + name + "'")});
    }
  }

  data_path.clear();
  if (j.contains("data")) {
    if (!j["data"].is_string()) throw UsageError(where + ": 'data' must be a path string");
    std::filesystem::path p = j["data"].get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    data_path = p.string();
  }

  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return c;
}

}  // namespace dmlkit::cli
