#include "countdiag/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "countdiag/error.hpp"

namespace countdiag {

namespace {

std::string row_context(const std::string& source, std::size_t line) {
  return source + ", row " + std::to_string(line);
}

// Splits one CSV record. Double-quoted fields may contain commas and
// doubled quotes; surrounding blanks of unquoted fields are trimmed.
std::vector<std::string> split_record(const std::string& line,
                                      const std::string& where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError("unterminated quote in " + where);
  fields.push_back(std::move(cur));
  if (!was_quoted) {
    for (auto& f : fields) {
      const auto b = f.find_first_not_of(" \t");
      const auto e = f.find_last_not_of(" \t");
      f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
    }
  }
  return fields;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

}  // namespace

std::size_t Column::size() const {
  return std::visit(
      [](const auto& c) {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, NumericColumn>) {
          return c.values.size();
        } else {
          return c.codes.size();
        }
      },
      data);
}

void DataTable::check_length(const std::string& name, std::size_t n) {
  if (has(name)) throw DataError("duplicate column '" + name + "'");
  if (!columns_.empty() && n != n_rows_) {
    throw DataError("column '" + name + "' has " + std::to_string(n) +
                    " rows, table has " + std::to_string(n_rows_));
  }
  n_rows_ = n;
}

void DataTable::add_numeric(std::string name, std::vector<double> values) {
  check_length(name, values.size());
  columns_.push_back({std::move(name), NumericColumn{std::move(values)}});
}

void DataTable::add_categorical(std::string name, std::vector<std::string> levels,
                                std::vector<int> codes) {
  for (int c : codes) {
    if (c < 0 || static_cast<std::size_t>(c) >= levels.size()) {
      throw DataError("categorical code out of range in column '" + name + "'");
    }
  }
  check_length(name, codes.size());
  columns_.push_back(
      {std::move(name), CategoricalColumn{std::move(levels), std::move(codes)}});
}

void DataTable::set_numeric(const std::string& name, std::vector<double> values) {
  for (auto& c : columns_) {
    if (c.name == name) {
      if (values.size() != n_rows_) throw DataError("length mismatch for '" + name + "'");
      c.data = NumericColumn{std::move(values)};
      return;
    }
  }
  add_numeric(name, std::move(values));
}

bool DataTable::has(const std::string& name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const Column& c) { return c.name == name; });
}

const Column& DataTable::column(const std::string& name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return c;
  }
  throw DataError("no column named '" + name + "'");
}

const std::vector<double>& DataTable::numeric(const std::string& name) const {
  const auto& c = column(name);
  if (!c.is_numeric()) throw DataError("column '" + name + "' is not numeric");
  return std::get<NumericColumn>(c.data).values;
}

DataTable DataTable::select_rows(std::span<const std::size_t> rows) const {
  DataTable out;
  for (std::size_t r : rows) {
    if (r >= n_rows_) throw DataError("row index out of range");
  }
  for (const auto& c : columns_) {
    if (c.is_numeric()) {
      const auto& v = std::get<NumericColumn>(c.data).values;
      std::vector<double> sel;
      sel.reserve(rows.size());
      for (std::size_t r : rows) sel.push_back(v[r]);
      out.add_numeric(c.name, std::move(sel));
    } else {
      const auto& cat = std::get<CategoricalColumn>(c.data);
      std::vector<int> sel;
      sel.reserve(rows.size());
      for (std::size_t r : rows) sel.push_back(cat.codes[r]);
      out.add_categorical(c.name, cat.levels, std::move(sel));
    }
  }
  if (columns_.empty()) out.n_rows_ = rows.size();
  return out;
}

TableSchema read_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file '" + path + "'");
  TableSchema schema;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.contains("categorical")) {
      for (const auto& [name, levels] : doc.at("categorical").items()) {
        schema.categorical[name] = levels.get<std::vector<std::string>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid schema file '" + path + "': " + e.what());
  }
  return schema;
}

DataTable parse_table(const std::string& text, const TableSchema& schema,
                      const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    header = split_record(line, row_context(source, line_no));
    break;
  }
  if (header.empty()) throw DataError(source + ": empty file, no header row");
  for (const auto& h : header) {
    if (h.empty()) throw DataError(source + ": empty column name in header");
  }

  std::vector<std::vector<std::string>> cells(header.size());
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_record(line, row_context(source, line_no));
    if (fields.size() != header.size()) {
      throw DataError(row_context(source, line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        throw DataError(row_context(source, line_no) + ": empty field in column '" +
                        header[c] + "'");
      }
      cells[c].push_back(std::move(fields[c]));
    }
    ++n_rows;
  }
  if (n_rows == 0) throw DataError(source + ": no data rows");

  for (const auto& [name, levels] : schema.categorical) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw DataError(source + ": schema names unknown column '" + name + "'");
    }
  }

  DataTable table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    const auto hint = schema.categorical.find(name);
    if (hint == schema.categorical.end()) {
      std::vector<double> values(n_rows);
      bool numeric = true;
      for (std::size_t r = 0; r < n_rows && numeric; ++r) {
        numeric = parse_number(cells[c][r], values[r]);
      }
      if (numeric) {
        table.add_numeric(name, std::move(values));
        continue;
      }
    }
    std::vector<std::string> levels =
        hint == schema.categorical.end() ? std::vector<std::string>{} : hint->second;
    const bool fixed = !levels.empty();
    std::vector<int> codes(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      auto it = std::find(levels.begin(), levels.end(), cells[c][r]);
      if (it == levels.end()) {
        if (fixed) {
          throw DataError(row_context(source, r + 2) + ": level '" + cells[c][r] +
                          "' of column '" + name + "' not declared in schema");
        }
        levels.push_back(cells[c][r]);
        it = levels.end() - 1;
      }
      codes[r] = static_cast<int>(it - levels.begin());
    }
    table.add_categorical(name, std::move(levels), std::move(codes));
  }
  return table;
}

DataTable read_table(const std::string& path, const TableSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open data file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str(), schema, path);
}

}  // namespace countdiag
