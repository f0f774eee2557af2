#include "cartqubo/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "cartqubo/dataset.hpp"
#include "cartqubo/error.hpp"
#include "cartqubo/kernels.hpp"

namespace cartqubo {

BinaryAssignment::BinaryAssignment(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_)
    if (b > 1) throw Error("binary assignment holds a value other than 0/1");
}

BinaryAssignment::BinaryAssignment(std::initializer_list<int> bits) {
  for (int b : bits) {
    if (b != 0 && b != 1) throw Error("binary assignment holds a value other than 0/1");
    bits_.push_back(static_cast<std::uint8_t>(b));
  }
}

BinaryAssignment BinaryAssignment::from_mask(std::uint64_t mask, std::size_t m) {
  if (m > 64) throw Error("from_mask: more than 64 bits");
  BinaryAssignment q(m);
  for (std::size_t a = 0; a < m; ++a) q.bits_[a] = static_cast<std::uint8_t>((mask >> (m - 1 - a)) & 1U);
  return q;
}

std::uint64_t BinaryAssignment::mask() const {
  if (bits_.size() > 64) throw Error("mask: more than 64 bits");
  std::uint64_t out = 0;
  for (auto b : bits_) out = (out << 1) | b;
  return out;
}

std::size_t BinaryAssignment::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryAssignment::is_trivial() const {
  const auto c = count();
  return c == 0 || c == bits_.size();
}

BinaryAssignment BinaryAssignment::complement() const {
  BinaryAssignment out(*this);
  for (auto& b : out.bits_) b ^= 1;
  return out;
}

std::string BinaryAssignment::to_string() const {
  std::string out = "(";
  for (std::size_t a = 0; a < bits_.size(); ++a) {
    if (a) out += ',';
    out += bits_[a] ? '1' : '0';
  }
  return out + ")";
}

BinaryAssignment BinaryAssignment::parse(const std::string& text) {
  std::vector<std::uint8_t> bits;
  for (char ch : text) {
    if (ch == '0' || ch == '1')
      bits.push_back(static_cast<std::uint8_t>(ch - '0'));
    else if (ch != '(' && ch != ')' && ch != ',' && ch != ' ')
      throw Error("cannot parse binary vector '" + text + "'");
  }
  return BinaryAssignment(std::move(bits));
}

CategoricalNode make_categorical_node(NodeAggregates aggs) {
  CategoricalNode out;
  out.v = build_v_matrix(aggs.categories);
  out.categories = std::move(aggs.categories);
  out.node = aggs.node;
  return out;
}

QuboProblem::QuboProblem(std::size_t m, std::vector<double> h, double lambda)
    : m_(m), h_(std::move(h)), lambda_(lambda) {
  if (h_.size() != m_ * m_) throw Error("QUBO matrix has the wrong number of entries");
  for (std::size_t a = 0; a < m_; ++a)
    for (std::size_t b = a + 1; b < m_; ++b)
      if (h_[a * m_ + b] != h_[b * m_ + a]) throw Error("QUBO matrix is not symmetric");
}

double QuboProblem::max_abs() const {
  double out = 0.0;
  for (double x : h_) out = std::max(out, std::fabs(x));
  return out;
}

double QuboProblem::evaluate(const BinaryAssignment& q) const {
  if (q.size() != m_) throw Error("assignment length does not match the QUBO size");
  std::vector<double> x(m_);
  for (std::size_t a = 0; a < m_; ++a) x[a] = q[a] ? 1.0 : 0.0;
  const auto& k = kernels::table(kernels::active_isa());
  double total = 0.0;
  for (std::size_t a = 0; a < m_; ++a)
    if (q[a]) total += k.dot(h_.data() + a * m_, x.data(), m_);
  return total;
}

namespace {

std::vector<double> row_sums(const VMatrix& v) {
  std::vector<double> r(v.size());
  const std::vector<double> ones(v.size(), 1.0);
  const auto& k = kernels::table(kernels::active_isa());
  for (std::size_t a = 0; a < v.size(); ++a) r[a] = k.dot(v.row(a).data(), ones.data(), v.size());
  return r;
}

// N_S^2 Var_S computed as the sum of all V entries, which is the same quantity
// by the pairwise variance identity but cancels exactly against the other
// V-sums in F(lambda, 1).
double weighted_total(const std::vector<double>& r) {
  double t = 0.0;
  for (double x : r) t += x;
  return t;
}

}  // namespace

QuboProblem build_qubo(const CategoricalNode& node, double lambda) {
  const std::size_t m = node.size();
  if (m < 2) throw Error("build_qubo: need at least 2 categories");
  if (!(lambda >= 0.0)) throw Error("build_qubo: lambda must be non-negative");
  std::vector<double> n(m);
  for (std::size_t a = 0; a < m; ++a) n[a] = node.categories[a].n;
  const auto r = row_sums(node.v);
  const double total_n = node.node.n;
  const double weighted = weighted_total(r);

  const auto& k = kernels::table(kernels::active_isa());
  std::vector<double> q(m * m);
  for (std::size_t a = 0; a < m; ++a)
    k.qubo_row(q.data() + a * m, total_n, n[a], r[a], lambda, node.v.row(a).data(), n.data(), r.data(), m);

  std::vector<double> h(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    h[a * m + a] = q[a * m + a] + (weighted - total_n * lambda) * n[a];
    for (std::size_t b = a + 1; b < m; ++b) h[a * m + b] = h[b * m + a] = 0.5 * (q[a * m + b] + q[b * m + a]);
  }
  return QuboProblem(m, std::move(h), lambda);
}

FractionalParts eval_fractional(const CategoricalNode& node, const BinaryAssignment& q) {
  const std::size_t m = node.size();
  if (q.size() != m) throw Error("eval_fractional: assignment length does not match the category count");
  const auto r = row_sums(node.v);
  const double total_n = node.node.n;
  const double weighted = weighted_total(r);

  FractionalParts out;
  double linear_n = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    if (q[a])
      out.n_left += node.categories[a].n;
    else
      out.n_right += node.categories[a].n;
    if (q[a]) linear_n += node.categories[a].n;
  }
  double quad = 0.0;
  double quad_d = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    if (!q[a]) continue;
    const double na = node.categories[a].n;
    for (std::size_t b = 0; b < m; ++b) {
      if (!q[b]) continue;
      const double nb = node.categories[b].n;
      quad += total_n * node.v(a, b) - nb * r[a] - na * r[b];
      quad_d += na * nb;
    }
  }
  out.numerator = std::max(0.0, quad + weighted * linear_n);
  out.denominator = total_n * linear_n - quad_d;
  if (q.is_trivial()) {
    out.numerator = 0.0;
    out.denominator = 0.0;
  }
  return out;
}

double split_cost(const CategoricalNode& node, const BinaryAssignment& q) {
  if (q.size() != node.size()) throw Error("split_cost: assignment length does not match the category count");
  if (q.is_trivial()) throw Error("split_cost: trivial assignment " + q.to_string());
  return eval_fractional(node, q).ratio();
}

double partition_sse(const CategoricalNode& node, const BinaryAssignment& q) {
  if (q.size() != node.size()) throw Error("partition_sse: assignment length does not match the category count");
  // Per side: within-category M2 plus the spread of category means around
  // the side mean.
  double n[2] = {0.0, 0.0}, s[2] = {0.0, 0.0};
  for (std::size_t a = 0; a < node.size(); ++a) {
    n[q[a]] += node.categories[a].n;
    s[q[a]] += node.categories[a].sum;
  }
  double sse[2] = {0.0, 0.0};
  for (std::size_t a = 0; a < node.size(); ++a) {
    const auto& c = node.categories[a];
    const int side = q[a];
    const double d = c.mean() - s[side] / n[side];
    sse[side] += c.m2 + c.n * d * d;
  }
  return sse[0] + sse[1];
}

void write_triplets(const QuboProblem& problem, std::ostream& out) {
  const std::size_t m = problem.size();
  out << "qubo " << m << '\n';
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      const double c = a == b ? problem(a, a) : 2.0 * problem(a, b);
      if (c != 0.0) out << a << ' ' << b << ' ' << format_double(c) << '\n';
    }
}

QuboProblem read_triplets(std::istream& in) {
  std::string tag;
  std::size_t m = 0;
  if (!(in >> tag >> m) || tag != "qubo") throw Error("triplet file must start with 'qubo <M>'");
  std::vector<double> h(m * m, 0.0);
  std::size_t a, b;
  std::string coef;
  while (in >> a >> b >> coef) {
    if (a >= m || b >= m || b < a) throw Error("triplet index out of range");
    const double c = std::stod(coef);
    if (a == b) {
      h[a * m + a] += c;
    } else {
      h[a * m + b] += 0.5 * c;
      h[b * m + a] += 0.5 * c;
    }
  }
  return QuboProblem(m, std::move(h));
}

}  // namespace cartqubo
