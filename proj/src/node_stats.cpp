#include "cartqubo/node_stats.hpp"

#include <algorithm>

#include "cartqubo/error.hpp"
#include "cartqubo/kernels.hpp"

namespace cartqubo {

double NodeStats::variance() const {
  if (n <= 0.0) return 0.0;
  const double m = sum / n;
  return std::max(0.0, sum_sq / n - m * m);
}

NodeStats& NodeStats::operator+=(const NodeStats& other) {
  n += other.n;
  sum += other.sum;
  sum_sq += other.sum_sq;
  return *this;
}

NodeStats make_node_stats(std::span<const double> values) {
  const auto m = kernels::moments(values);
  return NodeStats{static_cast<double>(values.size()), m.sum, m.sum_sq};
}

double node_variance(const NodeStats& stats) {
  if (stats.n < 1.0) throw Error("node_variance: empty node");
  return stats.variance();
}

double pairwise_variance(std::span<const double> values) {
  if (values.empty()) throw Error("pairwise_variance: empty sample");
  double acc = 0.0;
  for (double a : values)
    for (double b : values) acc += (a - b) * (a - b);
  const double n = static_cast<double>(values.size());
  return acc / (2.0 * n * n);
}

NodeAggregates aggregate_categories(std::span<const std::int32_t> codes, std::span<const double> responses) {
  if (codes.size() != responses.size()) throw Error("aggregate_categories: length mismatch");
  if (codes.empty()) throw Error("aggregate_categories: empty node");
  std::int32_t max_code = 0;
  for (auto c : codes) {
    if (c < 0) throw Error("aggregate_categories: negative category code");
    max_code = std::max(max_code, c);
  }
  // Gather responses per category so the compensated kernel sees contiguous data.
  const auto m = static_cast<std::size_t>(max_code) + 1;
  std::vector<std::size_t> count(m, 0);
  for (auto c : codes) ++count[static_cast<std::size_t>(c)];
  std::vector<std::size_t> offset(m + 1, 0);
  for (std::size_t k = 0; k < m; ++k) offset[k + 1] = offset[k] + count[k];
  std::vector<double> grouped(codes.size());
  std::vector<std::size_t> cursor(offset.begin(), offset.end() - 1);
  for (std::size_t i = 0; i < codes.size(); ++i) grouped[cursor[static_cast<std::size_t>(codes[i])]++] = responses[i];

  NodeAggregates out;
  for (std::size_t k = 0; k < m; ++k) {
    if (count[k] == 0) continue;
    const std::span<double> part(grouped.data() + offset[k], count[k]);
    const auto mom = kernels::moments(part);
    const double n = static_cast<double>(count[k]);
    const double mean = mom.sum / n;
    for (double& y : part) y -= mean;
    const auto centered = kernels::moments(part);
    const double m2 = std::max(0.0, centered.sum_sq - centered.sum * centered.sum / n);
    out.categories.push_back(CategoryAggregate{static_cast<std::int32_t>(k), n, mom.sum, mom.sum_sq, m2});
  }
  out.node = make_node_stats(responses);
  return out;
}

NodeAggregates aggregate_categories(const Dataset& data, std::size_t column, std::span<const RowIndex> rows) {
  const Column& col = data.column(column);
  if (!col.is_categorical()) throw Error("aggregate_categories: column '" + col.schema.name + "' is not categorical");
  std::vector<std::int32_t> codes;
  std::vector<double> y;
  codes.reserve(rows.size());
  y.reserve(rows.size());
  const auto resp = data.response();
  for (auto r : rows) {
    codes.push_back(col.codes[r]);
    y.push_back(resp[r]);
  }
  return aggregate_categories(codes, y);
}

VMatrix build_v_matrix(std::span<const CategoryAggregate> aggs) {
  const std::size_t m = aggs.size();
  if (m == 0) throw Error("build_v_matrix: no categories");
  // Centred form: V_ab = 1/2 (N_b M2_a + N_a M2_b + N_a N_b (mean_a - mean_b)^2),
  // algebraically equal to 1/2 (N_b Q_a - 2 S_a S_b + N_a Q_b) without its
  // cancellation.
  std::vector<double> n(m), mean(m), m2(m);
  for (std::size_t a = 0; a < m; ++a) {
    n[a] = aggs[a].n;
    mean[a] = aggs[a].mean();
    m2[a] = aggs[a].m2;
  }
  const auto& k = kernels::table(kernels::active_isa());
  VMatrix v(m);
  for (std::size_t a = 0; a < m; ++a) {
    // Only b >= a is computed; the lower triangle mirrors it exactly.
    k.v_row(v.row(a).data() + a, n[a], mean[a], m2[a], n.data() + a, mean.data() + a, m2.data() + a, m - a);
    v(a, a) = std::max(0.0, v(a, a));
    for (std::size_t b = a + 1; b < m; ++b) {
      v(a, b) = std::max(0.0, v(a, b));
      v(b, a) = v(a, b);
    }
  }
  return v;
}

}  // namespace cartqubo
