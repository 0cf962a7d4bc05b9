#pragma once

// Command-line surface: CSV persistence, JSON bench configs and dispatch.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmlkit/bench.hpp"
#include "dmlkit/dgp.hpp"
#include "dmlkit/dml.hpp"

namespace dmlkit::cli {

/// Bad flags or config contents; reported with exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or incomplete input files; reported with exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by name; throws DataError naming the column when absent.
  std::size_t column(const std::string& name) const;
};

/// RFC 4180-style parsing: comma separated, optional double quotes, LF or CRLF.
/// Every row must have as many fields as the header.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv_file(const std::string& path);

/// Parses cell (row, col) as a finite double; the error names the data row
/// (1-based, header excluded) and the column.
double numeric_cell(const CsvTable& table, std::size_t row, std::size_t col);

/// Resolves the named columns and routes them through validate_shapes.
/// A column may play only one role.
ValidatedData load_dataset_csv(const std::string& path, const std::string& y_col,
                               const std::vector<std::string>& t_cols, const std::vector<std::string>& x_cols);
ValidatedData load_dataset_csv(const CsvTable& table, const std::string& y_col,
                               const std::vector<std::string>& t_cols, const std::vector<std::string>& x_cols);

struct NamedDataset {
  Dataset data;
  std::vector<std::string> names;  // feature names followed by the outcome name
};

/// Reads a dataset CSV: column `y_col` is the outcome, every other column a feature.
NamedDataset read_dataset_csv(const std::string& path, const std::string& y_col = "y");

void write_text_file(const std::string& path, const std::string& text);

RegressorSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const RegressorSpec& spec);

/// Bench configuration from JSON. Unknown keys are rejected. A relative
/// "data" path is resolved against `base_dir`; the resolved path is returned
/// through `data_path` (empty when the config generates its own data).
BenchConfig bench_config_from_json(const nlohmann::json& j, const std::string& base_dir, std::string& data_path);

std::vector<std::string> split_list(const std::string& text);

/// Runs one command line (args excludes the program name). Returns the exit
/// code: 0 success, 1 runtime or shape error, 2 usage error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmlkit::cli
