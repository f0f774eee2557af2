#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cartqubo/dataset.hpp"

namespace cartqubo {

/// Sufficient statistics of a set of responses.
struct NodeStats {
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  /// Clamped population variance, 0 for an empty node.
  double variance() const;
  double mean() const { return n > 0.0 ? sum / n : 0.0; }
  /// n * variance, the node's sum of squared deviations.
  double sse() const { return n * variance(); }

  NodeStats& operator+=(const NodeStats& other);
};

NodeStats make_node_stats(std::span<const double> values);

/// Population variance sum_sq/n - (sum/n)^2, clamped at zero. Throws on n = 0.
double node_variance(const NodeStats& stats);

/// (1 / 2N^2) * sum_i sum_j (y_i - y_j)^2. Quadratic; used as a test oracle.
double pairwise_variance(std::span<const double> values);

/// Per-category statistics at a node. `category` is the code in the column's
/// schema, so categories absent from the node simply do not appear.
struct CategoryAggregate {
  std::int32_t category = 0;
  double n = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  /// Sum of squared deviations from the category mean (two-pass).
  double m2 = 0.0;

  double mean() const { return sum / n; }
};

struct NodeAggregates {
  std::vector<CategoryAggregate> categories;
  NodeStats node;
};

/// Aggregates the responses of `rows` by the categories of `column`, in
/// ascending category-code order, dropping empty categories.
NodeAggregates aggregate_categories(const Dataset& data, std::size_t column, std::span<const RowIndex> rows);
/// Same, for bare (code, response) pairs.
NodeAggregates aggregate_categories(std::span<const std::int32_t> codes, std::span<const double> responses);

/// Symmetric M x M matrix of half pairwise squared response differences
/// between categories: V[a][b] = 1/2 sum_{i in a} sum_{j in b} (y_i - y_j)^2.
class VMatrix {
public:
  VMatrix() = default;
  explicit VMatrix(std::size_t m) : m_(m), v_(m * m, 0.0) {}

  std::size_t size() const { return m_; }
  double operator()(std::size_t a, std::size_t b) const { return v_[a * m_ + b]; }
  double& operator()(std::size_t a, std::size_t b) { return v_[a * m_ + b]; }
  std::span<const double> row(std::size_t a) const { return {v_.data() + a * m_, m_}; }
  std::span<double> row(std::size_t a) { return {v_.data() + a * m_, m_}; }

private:
  std::size_t m_ = 0;
  std::vector<double> v_;
};

/// O(M^2) construction from sufficient statistics.
VMatrix build_v_matrix(std::span<const CategoryAggregate> aggs);

}  // namespace cartqubo
