#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cartqubo {

enum class ColumnKind { numeric, categorical, binary };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  /// Ordered category labels (categorical only). An empty list given to
  /// load_csv means "discover in first-appearance order"; a non-empty list is
  /// treated as closed and unknown labels are rejected.
  std::vector<std::string> categories;

  std::optional<std::int32_t> find_category(std::string_view label) const;
};

/// One feature column. Numeric and binary columns use `values`; categorical
/// columns use `codes`, indices into `schema.categories`.
struct Column {
  ColumnSchema schema;
  std::vector<double> values;
  std::vector<std::int32_t> codes;

  bool is_categorical() const { return schema.kind == ColumnKind::categorical; }
  std::size_t size() const { return is_categorical() ? codes.size() : values.size(); }
};

using RowIndex = std::uint32_t;

/// Immutable training substrate: typed feature columns plus a numeric response.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::vector<Column> columns, std::string response_name, std::vector<double> response);

  std::size_t rows() const { return response_.size(); }
  std::size_t column_count() const { return columns_.size(); }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  const std::vector<Column>& columns() const { return columns_; }
  std::optional<std::size_t> find_column(std::string_view name) const;
  std::vector<ColumnSchema> schema() const;

  const std::string& response_name() const { return response_name_; }
  std::span<const double> response() const { return response_; }

  /// Rows in the given order; category lists are kept whole.
  Dataset subset(std::span<const RowIndex> rows) const;

private:
  std::vector<Column> columns_;
  std::string response_name_;
  std::vector<double> response_;
};

/// "Brand:categorical,Mileage_km:numeric,HasClaim:binary"
std::vector<ColumnSchema> parse_schema_spec(std::string_view spec);

/// Kinds guessed from the cells: any non-numeric cell makes a column
/// categorical, numeric columns holding only 0/1 are binary.
std::vector<ColumnSchema> infer_csv_schema(const std::string& path, std::string_view response_column);

std::vector<std::string> read_csv_header(const std::string& path);

/// An empty `response_column` loads features only; the response is then all
/// zeros.
Dataset load_csv(const std::string& path, const std::vector<ColumnSchema>& schema,
                 std::string_view response_column);
Dataset read_csv(std::istream& in, const std::vector<ColumnSchema>& schema,
                 std::string_view response_column, const std::string& source = "<stream>");

/// Feature columns in schema order followed by the response.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::string& path);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

struct SplitSpecification {
  double train = 0.5;
  double validation = 0.25;
  double test = 0.25;
  std::uint64_t seed = 1;
};

struct Partition {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::vector<RowIndex> train_rows;
  std::vector<RowIndex> validation_rows;
  std::vector<RowIndex> test_rows;
};

/// Validation and test get floor(fraction * N) rows, train the remainder.
/// Membership depends only on (seed, row index).
Partition partition(const Dataset& data, const SplitSpecification& spec);

/// Synthetic insurance claims with a structured severity (Brand, Color,
/// Mileage_km, HasClaim -> ClaimAmount).
Dataset generate_df(std::size_t n, std::uint64_t seed);
/// Synthetic insurance claims with lognormal severities and a heavy tail.
Dataset generate_datagen(std::size_t n, std::uint64_t seed);

}  // namespace cartqubo
