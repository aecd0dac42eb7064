#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace countdiag {

struct NumericColumn {
  std::vector<double> values;
};

/// Factor with an explicit level order; the first level is the reference
/// for treatment contrasts.
struct CategoricalColumn {
  std::vector<std::string> levels;
  std::vector<int> codes;  // index into levels, one per row
};

struct Column {
  std::string name;
  std::variant<NumericColumn, CategoricalColumn> data;

  bool is_numeric() const { return std::holds_alternative<NumericColumn>(data); }
  std::size_t size() const;
};

class DataTable {
 public:
  DataTable() = default;

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return columns_.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }

  void add_numeric(std::string name, std::vector<double> values);
  void add_categorical(std::string name, std::vector<std::string> levels,
                       std::vector<int> codes);
  /// Replaces the values of an existing numeric column, or appends one.
  void set_numeric(const std::string& name, std::vector<double> values);

  bool has(const std::string& name) const;
  const Column& column(const std::string& name) const;
  const std::vector<double>& numeric(const std::string& name) const;

  /// New table with rows taken in the given order (repeats allowed).
  DataTable select_rows(std::span<const std::size_t> rows) const;

 private:
  void check_length(const std::string& name, std::size_t n);

  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

/// Column-type hints for read_table. A listed column is categorical; an
/// empty level list means first-appearance order.
struct TableSchema {
  std::map<std::string, std::vector<std::string>> categorical;
};

/// Loads `{"categorical": {"col": ["ref", "other", ...]}}`.
TableSchema read_schema(const std::string& path);

/// Reads a comma-separated file with a header row. Columns whose every
/// field parses as a number are numeric unless the schema says otherwise.
DataTable read_table(const std::string& path, const TableSchema& schema = {});

/// Same as read_table but from in-memory text; `source` names it in errors.
DataTable parse_table(const std::string& text, const TableSchema& schema = {},
                      const std::string& source = "<memory>");

}  // namespace countdiag
