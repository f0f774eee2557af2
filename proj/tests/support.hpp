#pragma once
// Independent reference computations and fixtures shared by the test binaries.
// Nothing here calls into the library's numerical paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cartqubo/dataset.hpp"

namespace oracle {

using Groups = std::vector<std::vector<double>>;

inline double mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / static_cast<long double>(v.size()));
}

/// Two-pass sum of squared deviations in long double.
inline double sse(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  long double s = 0;
  for (double x : v) s += x;
  const long double m = s / static_cast<long double>(v.size());
  long double acc = 0;
  for (double x : v) acc += (x - m) * (x - m);
  return static_cast<double>(acc);
}

inline double variance(const std::vector<double>& v) { return sse(v) / static_cast<double>(v.size()); }

/// V_ab = 1/2 sum_{i in a} sum_{j in b} (y_i - y_j)^2 by double loop.
inline double naive_v(const std::vector<double>& a, const std::vector<double>& b) {
  long double acc = 0;
  for (double x : a)
    for (double y : b) acc += static_cast<long double>(x - y) * (x - y);
  return static_cast<double>(acc / 2);
}

/// Child SSE sum of the split given by q (q[a] = 1 puts category a left).
inline double split_sse(const Groups& g, const std::vector<int>& q) {
  std::vector<double> left, right;
  for (std::size_t a = 0; a < g.size(); ++a)
    for (double y : g[a]) (q[a] ? left : right).push_back(y);
  return sse(left) + sse(right);
}

inline std::vector<int> bits_of(std::uint64_t mask, std::size_t m) {
  std::vector<int> q(m);
  for (std::size_t a = 0; a < m; ++a) q[a] = static_cast<int>((mask >> a) & 1u);
  return q;
}

struct BruteSplit {
  double cost = std::numeric_limits<double>::infinity();
  /// Every minimiser (within tolerance) with q[0] = 1.
  std::vector<std::vector<int>> argmins;
};

/// Minimum child SSE over all 2^M - 2 non-trivial vectors.
inline BruteSplit brute_split(const Groups& g, double rel_tol = 1e-9) {
  const std::size_t m = g.size();
  const std::uint64_t full = (std::uint64_t{1} << m) - 1;
  std::vector<std::pair<double, std::uint64_t>> all;
  for (std::uint64_t mask = 1; mask < full; ++mask) all.emplace_back(split_sse(g, bits_of(mask, m)), mask);
  BruteSplit out;
  for (const auto& [c, mask] : all) out.cost = std::min(out.cost, c);
  std::vector<double> every;
  for (const auto& gr : g) every.insert(every.end(), gr.begin(), gr.end());
  const double tol = rel_tol * std::max(1.0, sse(every));
  for (const auto& [c, mask] : all)
    if (c <= out.cost + tol && (mask & 1u)) out.argmins.push_back(bits_of(mask, m));
  return out;
}

/// Minimum of q^T H q over non-trivial q by full double-loop evaluation.
struct BruteQubo {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> argmins;
};

inline double qubo_value(const std::vector<double>& h, std::size_t m, const std::vector<int>& q) {
  long double acc = 0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) acc += static_cast<long double>(h[a * m + b]) * q[a] * q[b];
  return static_cast<double>(acc);
}

inline BruteQubo brute_qubo(const std::vector<double>& h, std::size_t m, double abs_tol) {
  const std::uint64_t full = (std::uint64_t{1} << m) - 1;
  BruteQubo out;
  std::vector<std::pair<double, std::uint64_t>> all;
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    const double v = qubo_value(h, m, bits_of(mask, m));
    all.emplace_back(v, mask);
    out.objective = std::min(out.objective, v);
  }
  for (const auto& [v, mask] : all)
    if (v <= out.objective + abs_tol) out.argmins.push_back(bits_of(mask, m));
  return out;
}

struct Threshold {
  bool found = false;
  double threshold = 0.0;
  double cost = std::numeric_limits<double>::infinity();
};

/// O(N^2) scan: every midpoint between consecutive distinct values, children
/// rebuilt from scratch.
inline Threshold naive_threshold(const std::vector<double>& x, const std::vector<double>& y,
                                 std::size_t min_bucket = 1) {
  std::vector<double> xs = x;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  Threshold best;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double t = xs[k] + (xs[k + 1] - xs[k]) / 2;
    std::vector<double> l, r;
    for (std::size_t i = 0; i < x.size(); ++i) (x[i] < t ? l : r).push_back(y[i]);
    if (l.size() < min_bucket || r.size() < min_bucket) continue;
    const double c = sse(l) + sse(r);
    if (!best.found || c < best.cost - 1e-9 * std::max(1.0, best.cost)) best = {true, t, c};
  }
  return best;
}

/// Random categorical node: m categories each with 1..max_per observations.
inline Groups random_groups(std::mt19937_64& gen, std::size_t m, std::size_t max_per, double scale) {
  std::uniform_int_distribution<std::size_t> count(1, max_per);
  std::uniform_real_distribution<double> centre(0.0, scale), spread(0.0, scale / 4);
  Groups g(m);
  for (auto& grp : g) {
    const double c = centre(gen), s = spread(gen);
    std::normal_distribution<double> noise(c, s);
    const std::size_t k = count(gen);
    for (std::size_t i = 0; i < k; ++i) grp.push_back(std::round(noise(gen) * 100) / 100);
  }
  return g;
}

/// One-column dataset "C" (labels C1..CM) with response "y".
inline cartqubo::Dataset groups_dataset(const Groups& g) {
  cartqubo::Column col;
  col.schema.name = "C";
  col.schema.kind = cartqubo::ColumnKind::categorical;
  std::vector<double> y;
  for (std::size_t a = 0; a < g.size(); ++a) {
    col.schema.categories.push_back("C" + std::to_string(a + 1));
    for (double v : g[a]) {
      col.codes.push_back(static_cast<std::int32_t>(a));
      y.push_back(v);
    }
  }
  return cartqubo::Dataset({col}, "y", std::move(y));
}

/// The six-row reference node: C1 {0,2}, C2 {10}, C3 {12,14}, C4 {1}.
inline Groups worked_groups() { return {{0, 2}, {10}, {12, 14}, {1}}; }

inline cartqubo::Dataset worked_dataset() {
  // Rows interleaved so category order differs from row order.
  cartqubo::Column col;
  col.schema.name = "C";
  col.schema.kind = cartqubo::ColumnKind::categorical;
  col.schema.categories = {"C1", "C2", "C3", "C4"};
  col.codes = {0, 0, 1, 2, 2, 3};
  return cartqubo::Dataset({col}, "y", {0, 2, 10, 12, 14, 1});
}

inline bool close_rel(double a, double b, double rel) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace oracle
