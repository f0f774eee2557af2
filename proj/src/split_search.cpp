#include "cartqubo/split_search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cartqubo/error.hpp"
#include "cartqubo/kernels.hpp"
#include "cartqubo/parallel.hpp"

namespace cartqubo {

bool SplitRule::in_left(std::int32_t code) const {
  return std::binary_search(left_categories.begin(), left_categories.end(), code);
}

bool SplitRule::in_right(std::int32_t code) const {
  return std::binary_search(right_categories.begin(), right_categories.end(), code);
}

std::string_view to_string(CategoricalMethod method) {
  switch (method) {
    case CategoricalMethod::qubo: return "qubo";
    case CategoricalMethod::exhaustive: return "exhaustive";
    case CategoricalMethod::greedy: return "greedy";
  }
  return "qubo";
}

CategoricalMethod parse_categorical_method(std::string_view text) {
  if (text == "qubo") return CategoricalMethod::qubo;
  if (text == "exhaustive") return CategoricalMethod::exhaustive;
  if (text == "greedy") return CategoricalMethod::greedy;
  throw Error("unknown categorical split method '" + std::string(text) + "'");
}

BinaryAssignment canonical_orientation(const CategoricalNode& node, BinaryAssignment q) {
  std::size_t lowest = 0;
  for (std::size_t a = 1; a < node.size(); ++a)
    if (node.categories[a].mean() < node.categories[lowest].mean()) lowest = a;
  return q[lowest] ? q : q.complement();
}

CategoricalChoice choose_partition_qubo(const CategoricalNode& node, const SolverConfig& solver,
                                        const DinkelbachConfig& dk) {
  CategoricalChoice out;
  auto result = dinkelbach_split(node, solver, dk);
  out.q = canonical_orientation(node, result.q);
  out.cost = partition_sse(node, out.q);
  out.dinkelbach = std::move(result);
  return out;
}

CategoricalChoice choose_partition_exhaustive(const CategoricalNode& node, std::size_t max_size) {
  const std::size_t m = node.size();
  if (m < 2 || m > max_size)
    throw Error("exhaustive partition search needs 2.." + std::to_string(max_size) + " categories, got " +
                std::to_string(m));
  const std::uint64_t top = std::uint64_t{1} << (m - 1);
  std::uint64_t best_mask = top;
  double best = eval_fractional(node, BinaryAssignment::from_mask(top, m)).ratio();
  const double tol = 1e-12 * std::max(1.0, lambda_upper_bound(node.node));
  for (std::uint64_t mask = top + 1; mask < 2 * top - 1; ++mask) {
    const double r = eval_fractional(node, BinaryAssignment::from_mask(mask, m)).ratio();
    if (r < best - tol) {
      best = r;
      best_mask = mask;
    }
  }
  CategoricalChoice out;
  out.q = canonical_orientation(node, BinaryAssignment::from_mask(best_mask, m));
  out.cost = partition_sse(node, out.q);
  return out;
}

CategoricalChoice choose_partition_greedy(const CategoricalNode& node) {
  const std::size_t m = node.size();
  if (m < 2) throw Error("greedy partition search needs at least 2 categories");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return node.categories[a].mean() < node.categories[b].mean();
  });
  BinaryAssignment q(m), best_q;
  double best = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    q.set(order[k], true);
    const double cost = partition_sse(node, q);
    if (best_q.size() == 0 || cost < best) {
      best = cost;
      best_q = q;
    }
  }
  CategoricalChoice out;
  out.q = canonical_orientation(node, best_q);
  out.cost = partition_sse(node, out.q);
  return out;
}

namespace {

CategoricalNode categorical_node(const Dataset& data, std::span<const RowIndex> rows, std::size_t column) {
  const Column& col = data.column(column);
  if (!col.is_categorical()) throw Error("column '" + col.schema.name + "' is not categorical");
  if (rows.empty()) throw Error("split search on an empty node");
  auto node = make_categorical_node(aggregate_categories(data, column, rows));
  if (node.size() < 2)
    throw Error("column '" + col.schema.name + "' has fewer than 2 categories at this node");
  return node;
}

SplitCandidate to_candidate(const Dataset& data, std::size_t column, const CategoricalNode& node,
                            const CategoricalChoice& choice) {
  SplitCandidate c;
  c.rule.variable = data.column(column).schema.name;
  c.rule.column = column;
  c.rule.kind = SplitKind::subset;
  for (std::size_t a = 0; a < node.size(); ++a) {
    const auto& cat = node.categories[a];
    if (choice.q[a]) {
      c.rule.left_categories.push_back(cat.category);
      c.n_left += static_cast<std::size_t>(cat.n);
    } else {
      c.rule.right_categories.push_back(cat.category);
      c.n_right += static_cast<std::size_t>(cat.n);
    }
  }
  c.cost = choice.cost;
  if (choice.dinkelbach) {
    c.trace = choice.dinkelbach->trace;
    c.converged = choice.dinkelbach->converged;
  }
  return c;
}

}  // namespace

SplitCandidate best_categorical_split_qubo(const Dataset& data, std::span<const RowIndex> rows, std::size_t column,
                                           const SolverConfig& solver, const DinkelbachConfig& dk) {
  const auto node = categorical_node(data, rows, column);
  return to_candidate(data, column, node, choose_partition_qubo(node, solver, dk));
}

SplitCandidate best_categorical_split_exhaustive(const Dataset& data, std::span<const RowIndex> rows,
                                                 std::size_t column) {
  const auto node = categorical_node(data, rows, column);
  return to_candidate(data, column, node, choose_partition_exhaustive(node));
}

SplitCandidate best_categorical_split_greedy(const Dataset& data, std::span<const RowIndex> rows, std::size_t column) {
  const auto node = categorical_node(data, rows, column);
  return to_candidate(data, column, node, choose_partition_greedy(node));
}

std::optional<SplitCandidate> best_numeric_split(const Dataset& data, std::span<const RowIndex> rows,
                                                 std::size_t column, std::size_t min_bucket) {
  const Column& col = data.column(column);
  if (col.is_categorical()) throw Error("column '" + col.schema.name + "' is categorical");
  const std::size_t n = rows.size();
  if (n == 0) throw Error("split search on an empty node");
  min_bucket = std::max<std::size_t>(min_bucket, 1);

  const auto resp = data.response();
  std::vector<std::pair<double, double>> xy(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    xy[i] = {col.values[rows[i]], resp[rows[i]]};
    y[i] = xy[i].second;
  }
  std::sort(xy.begin(), xy.end());
  if (xy.front().first == xy.back().first)
    throw Error("column '" + col.schema.name + "' is constant at this node");

  // Centred responses keep the prefix sums of squares well conditioned.
  const double mean = kernels::moments(y).sum / static_cast<double>(n);
  std::vector<double> suffix_s(n + 1, 0.0), suffix_q(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const double c = xy[i].second - mean;
    suffix_s[i] = suffix_s[i + 1] + c;
    suffix_q[i] = suffix_q[i + 1] + c * c;
  }
  auto sse = [](double s, double q, double k) { return std::max(0.0, q - s * s / k); };

  std::optional<SplitCandidate> best;
  double left_s = 0.0, left_q = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double c = xy[i].second - mean;
    left_s += c;
    left_q += c * c;
    const std::size_t n_left = i + 1;
    if (xy[i].first == xy[i + 1].first) continue;
    if (n_left < min_bucket || n - n_left < min_bucket) continue;
    const double cost = sse(left_s, left_q, static_cast<double>(n_left)) +
                        sse(suffix_s[i + 1], suffix_q[i + 1], static_cast<double>(n - n_left));
    if (!best || cost < best->cost) {
      const double lo = xy[i].first, hi = xy[i + 1].first;
      double t = lo + (hi - lo) / 2.0;
      if (!(t > lo)) t = hi;
      SplitCandidate cand;
      cand.rule.variable = col.schema.name;
      cand.rule.column = column;
      cand.rule.kind = SplitKind::threshold;
      cand.rule.threshold = t;
      cand.cost = cost;
      cand.n_left = n_left;
      cand.n_right = n - n_left;
      best = std::move(cand);
    }
  }
  return best;
}

std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const RowIndex> rows, const SplitConfig& cfg) {
  if (rows.size() < 2) return std::nullopt;
  const std::size_t min_bucket = std::max<std::size_t>(cfg.min_bucket, 1);
  std::vector<std::optional<SplitCandidate>> per_column(data.column_count());

  auto search = [&](std::size_t j) {
    const Column& col = data.column(j);
    if (col.is_categorical()) {
      auto node = make_categorical_node(aggregate_categories(data, j, rows));
      if (node.size() < 2) return;
      CategoricalChoice choice;
      switch (cfg.method) {
        case CategoricalMethod::qubo:
          choice = choose_partition_qubo(node, cfg.solver, cfg.dinkelbach);
          if (cfg.observer && choice.dinkelbach) cfg.observer(col.schema.name, *choice.dinkelbach);
          break;
        case CategoricalMethod::exhaustive: choice = choose_partition_exhaustive(node); break;
        case CategoricalMethod::greedy: choice = choose_partition_greedy(node); break;
      }
      auto cand = to_candidate(data, j, node, choice);
      if (cand.n_left >= min_bucket && cand.n_right >= min_bucket) per_column[j] = std::move(cand);
    } else {
      const double first = col.values[rows.front()];
      bool constant = true;
      for (auto r : rows)
        if (col.values[r] != first) {
          constant = false;
          break;
        }
      if (!constant) per_column[j] = best_numeric_split(data, rows, j, min_bucket);
    }
  };

  if (rows.size() >= 4096 && data.column_count() > 1)
    parallel_for(data.column_count(), search);
  else
    for (std::size_t j = 0; j < data.column_count(); ++j) search(j);

  std::optional<SplitCandidate> best;
  for (auto& cand : per_column)
    if (cand && (!best || cand->cost < best->cost)) best = std::move(cand);
  return best;
}

}  // namespace cartqubo
