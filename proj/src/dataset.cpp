#include "cartqubo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "cartqubo/error.hpp"
#include "cartqubo/rng.hpp"

namespace cartqubo {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::binary: return "binary";
  }
  return "numeric";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "binary") return ColumnKind::binary;
  throw Error("unknown column kind '" + std::string(text) + "'");
}

std::optional<std::int32_t> ColumnSchema::find_category(std::string_view label) const {
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == label) return static_cast<std::int32_t>(i);
  return std::nullopt;
}

Dataset::Dataset(std::vector<Column> columns, std::string response_name, std::vector<double> response)
    : columns_(std::move(columns)), response_name_(std::move(response_name)), response_(std::move(response)) {
  if (response_.empty()) throw Error("dataset has no rows");
  for (const auto& c : columns_) {
    if (c.size() != response_.size())
      throw Error("column '" + c.schema.name + "' has " + std::to_string(c.size()) + " rows, response has " +
                  std::to_string(response_.size()));
    if (c.is_categorical()) {
      const auto m = static_cast<std::int32_t>(c.schema.categories.size());
      for (auto code : c.codes)
        if (code < 0 || code >= m) throw Error("column '" + c.schema.name + "' has an out-of-range category code");
    } else if (c.schema.kind == ColumnKind::binary) {
      for (double v : c.values)
        if (v != 0.0 && v != 1.0) throw Error("binary column '" + c.schema.name + "' holds a value other than 0/1");
    }
  }
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    for (std::size_t j = i + 1; j < columns_.size(); ++j)
      if (columns_[i].schema.name == columns_[j].schema.name)
        throw Error("duplicate column '" + columns_[i].schema.name + "'");
    const auto& cats = columns_[i].schema.categories;
    for (std::size_t a = 0; a < cats.size(); ++a)
      for (std::size_t b = a + 1; b < cats.size(); ++b)
        if (cats[a] == cats[b]) throw Error("column '" + columns_[i].schema.name + "' repeats label '" + cats[a] + "'");
  }
}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].schema.name == name) return i;
  return std::nullopt;
}

std::vector<ColumnSchema> Dataset::schema() const {
  std::vector<ColumnSchema> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.schema);
  return out;
}

Dataset Dataset::subset(std::span<const RowIndex> rows) const {
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column out{c.schema, {}, {}};
    if (c.is_categorical()) {
      out.codes.reserve(rows.size());
      for (auto r : rows) out.codes.push_back(c.codes.at(r));
    } else {
      out.values.reserve(rows.size());
      for (auto r : rows) out.values.push_back(c.values.at(r));
    }
    cols.push_back(std::move(out));
  }
  std::vector<double> y;
  y.reserve(rows.size());
  for (auto r : rows) y.push_back(response_.at(r));
  return Dataset(std::move(cols), response_name_, std::move(y));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Reads one RFC-4180 record; quoted fields may span lines. Returns false at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_no;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  std::size_t i = 0;
  for (;;) {
    if (i >= line.size()) {
      if (quoted) {
        std::string more;
        if (!std::getline(in, more)) throw Error("unterminated quoted field at line " + std::to_string(line_no));
        ++line_no;
        field.push_back('\n');
        line = std::move(more);
        i = 0;
        continue;
      }
      break;
    }
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && trim(field).empty()) {
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
    ++i;
  }
  fields.push_back(was_quoted ? field : std::string(trim(field)));
  return true;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\n\r") != std::string_view::npos || (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

void write_field(std::ostream& out, std::string_view s) {
  if (!needs_quotes(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char ch : s) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

std::vector<ColumnSchema> parse_schema_spec(std::string_view spec) {
  std::vector<ColumnSchema> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = spec.find(',', pos);
    const auto item = trim(spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (item.empty()) throw Error("empty entry in schema '" + std::string(spec) + "'");
    const auto colon = item.rfind(':');
    if (colon == std::string_view::npos || colon == 0)
      throw Error("schema entry '" + std::string(item) + "' is not name:kind");
    ColumnSchema col;
    col.name = std::string(trim(item.substr(0, colon)));
    col.kind = parse_column_kind(trim(item.substr(colon + 1)));
    out.push_back(std::move(col));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<ColumnSchema> infer_csv_schema(const std::string& path, std::string_view response_column) {
  auto in = open_input(path);
  std::vector<std::string> header, fields;
  std::size_t line_no = 0;
  if (!read_record(in, header, line_no)) throw Error("'" + path + "' is empty");
  std::vector<bool> numeric(header.size(), true), binary(header.size(), true);
  while (read_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size())
      throw Error("'" + path + "' line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                  " fields, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!numeric[j]) continue;
      const auto v = parse_number(fields[j]);
      if (!v) {
        numeric[j] = false;
        binary[j] = false;
      } else if (*v != 0.0 && *v != 1.0) {
        binary[j] = false;
      }
    }
  }
  std::vector<ColumnSchema> out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == response_column) continue;
    ColumnSchema col;
    col.name = header[j];
    col.kind = !numeric[j] ? ColumnKind::categorical : binary[j] ? ColumnKind::binary : ColumnKind::numeric;
    out.push_back(std::move(col));
  }
  return out;
}

Dataset read_csv(std::istream& in, const std::vector<ColumnSchema>& schema, std::string_view response_column,
                 const std::string& source) {
  std::vector<std::string> header, fields;
  std::size_t line_no = 0;
  if (!read_record(in, header, line_no)) throw Error(source + ": missing header row");

  auto locate = [&](std::string_view name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(source + ": schema mismatch, no column named '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const bool has_response = !response_column.empty();
  const std::size_t response_pos = has_response ? locate(response_column) : 0;
  std::vector<std::size_t> positions;
  std::vector<Column> columns;
  std::vector<std::unordered_map<std::string, std::int32_t>> lookup(schema.size());
  std::vector<bool> closed(schema.size(), false);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].name == response_column)
      throw Error(source + ": column '" + schema[c].name + "' is both a feature and the response");
    positions.push_back(locate(schema[c].name));
    columns.push_back(Column{schema[c], {}, {}});
    closed[c] = !schema[c].categories.empty();
    for (std::size_t k = 0; k < schema[c].categories.size(); ++k)
      lookup[c].emplace(schema[c].categories[k], static_cast<std::int32_t>(k));
  }

  std::vector<double> response;
  std::size_t row = 0;
  while (read_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size())
      throw Error(source + " line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                  " fields, got " + std::to_string(fields.size()));
    const auto y = has_response ? parse_number(fields[response_pos]) : std::optional<double>(0.0);
    if (!y)
      throw Error(source + " row " + std::to_string(row) + ": response '" + std::string(response_column) +
                  "' is not numeric ('" + fields[response_pos] + "')");
    response.push_back(*y);
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const std::string& cell = fields[positions[c]];
      Column& col = columns[c];
      if (col.is_categorical()) {
        if (cell.empty())
          throw Error(source + " row " + std::to_string(row) + ": missing value in '" + col.schema.name + "'");
        auto it = lookup[c].find(cell);
        if (it == lookup[c].end()) {
          if (closed[c])
            throw Error(source + " row " + std::to_string(row) + ": category '" + cell + "' of column '" +
                        col.schema.name + "' is not in the schema");
          const auto code = static_cast<std::int32_t>(col.schema.categories.size());
          col.schema.categories.push_back(cell);
          it = lookup[c].emplace(cell, code).first;
        }
        col.codes.push_back(it->second);
      } else {
        const auto v = parse_number(cell);
        if (!v)
          throw Error(source + " row " + std::to_string(row) + ": column '" + col.schema.name +
                      "' is not numeric ('" + cell + "')");
        if (col.schema.kind == ColumnKind::binary && *v != 0.0 && *v != 1.0)
          throw Error(source + " row " + std::to_string(row) + ": binary column '" + col.schema.name +
                      "' holds '" + cell + "'");
        col.values.push_back(*v);
      }
    }
    ++row;
  }
  if (response.empty()) throw Error(source + ": no data rows");
  return Dataset(std::move(columns), std::string(response_column), std::move(response));
}

std::vector<std::string> read_csv_header(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> header;
  std::size_t line_no = 0;
  if (!read_record(in, header, line_no)) throw Error("'" + path + "' is empty");
  return header;
}

Dataset load_csv(const std::string& path, const std::vector<ColumnSchema>& schema, std::string_view response_column) {
  auto in = open_input(path);
  return read_csv(in, schema, response_column, path);
}

void write_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t c = 0; c < data.column_count(); ++c) {
    write_field(out, data.column(c).schema.name);
    out << ',';
  }
  write_field(out, data.response_name());
  out << '\n';
  const auto y = data.response();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t c = 0; c < data.column_count(); ++c) {
      const Column& col = data.column(c);
      if (col.is_categorical())
        write_field(out, col.schema.categories[static_cast<std::size_t>(col.codes[i])]);
      else
        out << format_double(col.values[i]);
      out << ',';
    }
    out << format_double(y[i]) << '\n';
  }
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(data, out);
  if (!out) throw Error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Partitioning

Partition partition(const Dataset& data, const SplitSpecification& spec) {
  const double fr[3] = {spec.train, spec.validation, spec.test};
  for (double f : fr)
    if (!(f > 0.0)) throw Error("partition fractions must be positive");
  if (std::abs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-12) throw Error("partition fractions must sum to 1");
  const std::size_t n = data.rows();
  if (n < 4) throw Error("partition needs at least 4 rows");

  const auto n_val = static_cast<std::size_t>(std::floor(spec.validation * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::floor(spec.test * static_cast<double>(n)));
  if (n_val + n_test >= n) throw Error("partition leaves no training rows");

  std::vector<std::pair<std::uint64_t, RowIndex>> keyed(n);
  for (std::size_t i = 0; i < n; ++i)
    keyed[i] = {mix64(spec.seed ^ mix64(static_cast<std::uint64_t>(i))), static_cast<RowIndex>(i)};
  std::sort(keyed.begin(), keyed.end());

  Partition out;
  const std::size_t n_train = n - n_val - n_test;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dest = k < n_train ? out.train_rows : k < n_train + n_val ? out.validation_rows : out.test_rows;
    dest.push_back(keyed[k].second);
  }
  for (auto* rows : {&out.train_rows, &out.validation_rows, &out.test_rows}) std::sort(rows->begin(), rows->end());
  out.train = data.subset(out.train_rows);
  if (!out.validation_rows.empty()) out.validation = data.subset(out.validation_rows);
  if (!out.test_rows.empty()) out.test = data.subset(out.test_rows);
  return out;
}

}  // namespace cartqubo
