#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cartqubo/node_stats.hpp"

namespace cartqubo {

/// One bit per category: bit a set means category a goes to the left child.
class BinaryAssignment {
public:
  BinaryAssignment() = default;
  explicit BinaryAssignment(std::size_t m) : bits_(m, 0) {}
  explicit BinaryAssignment(std::vector<std::uint8_t> bits);
  BinaryAssignment(std::initializer_list<int> bits);

  /// Bit a is the (m - 1 - a)-th least significant bit of `mask`, so integer
  /// order on masks equals lexicographic order on bit vectors.
  static BinaryAssignment from_mask(std::uint64_t mask, std::size_t m);
  std::uint64_t mask() const;

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t a) const { return bits_[a] != 0; }
  void set(std::size_t a, bool v) { bits_[a] = v ? 1 : 0; }
  void flip(std::size_t a) { bits_[a] ^= 1; }
  std::size_t count() const;
  /// All zeros or all ones.
  bool is_trivial() const;
  BinaryAssignment complement() const;
  std::span<const std::uint8_t> bits() const { return bits_; }

  /// "(1,0,0,1)"
  std::string to_string() const;
  static BinaryAssignment parse(const std::string& text);

  friend bool operator==(const BinaryAssignment&, const BinaryAssignment&) = default;
  /// Lexicographic, bit 0 most significant.
  friend auto operator<=>(const BinaryAssignment& a, const BinaryAssignment& b) { return a.bits_ <=> b.bits_; }

private:
  std::vector<std::uint8_t> bits_;
};

/// Everything a categorical split needs: per-category aggregates, node totals
/// and the pairwise V matrix.
struct CategoricalNode {
  std::vector<CategoryAggregate> categories;
  NodeStats node;
  VMatrix v;

  std::size_t size() const { return categories.size(); }
};

CategoricalNode make_categorical_node(NodeAggregates aggs);

/// min_q q^T H q with H symmetric; linear terms live on the diagonal.
class QuboProblem {
public:
  QuboProblem() = default;
  QuboProblem(std::size_t m, std::vector<double> h, double lambda = 0.0);

  std::size_t size() const { return m_; }
  double lambda() const { return lambda_; }
  double operator()(std::size_t a, std::size_t b) const { return h_[a * m_ + b]; }
  std::span<const double> row(std::size_t a) const { return {h_.data() + a * m_, m_}; }
  std::span<const double> data() const { return h_; }
  double max_abs() const;

  double evaluate(const BinaryAssignment& q) const;

private:
  std::size_t m_ = 0;
  std::vector<double> h_;
  double lambda_ = 0.0;
};

/// Parametric QUBO whose objective is F(lambda, q) = n(q) - lambda * d(q).
QuboProblem build_qubo(const CategoricalNode& node, double lambda);

struct FractionalParts {
  double numerator = 0.0;    ///< n(q)
  double denominator = 0.0;  ///< d(q) = N_L * N_R
  double n_left = 0.0;
  double n_right = 0.0;

  /// n(q) / d(q); only meaningful for non-trivial q.
  double ratio() const { return numerator / denominator; }
};

/// n(q) and d(q) evaluated straight from the V matrix (not through H).
FractionalParts eval_fractional(const CategoricalNode& node, const BinaryAssignment& q);

/// R(q) = n(q)/d(q) = N_L Var_L + N_R Var_R. Throws for trivial q.
double split_cost(const CategoricalNode& node, const BinaryAssignment& q);

/// N_L Var_L + N_R Var_R from the children's sufficient statistics. All
/// categorical searchers report their cost through this one routine so that
/// equal partitions always compare equal.
double partition_sse(const CategoricalNode& node, const BinaryAssignment& q);

/// Plain-text interop format: a header line "qubo <M>" followed by one
/// "i j c" line per non-zero upper-triangular coefficient, where the energy is
/// sum_{i<=j} c_ij q_i q_j (so c_ij = 2 H_ij off the diagonal).
void write_triplets(const QuboProblem& problem, std::ostream& out);
QuboProblem read_triplets(std::istream& in);

}  // namespace cartqubo
