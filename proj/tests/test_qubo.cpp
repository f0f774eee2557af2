#include <random>
#include <sstream>

#include "cartqubo/error.hpp"
#include "cartqubo/qubo.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cartqubo;

namespace {

CategoricalNode node_of(const oracle::Groups& g) {
  const Dataset d = oracle::groups_dataset(g);
  std::vector<RowIndex> rows(d.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<RowIndex>(i);
  return make_categorical_node(aggregate_categories(d, 0, rows));
}

}  // namespace

TEST_CASE("BinaryAssignment: masks, text and order") {
  const BinaryAssignment q{1, 0, 0, 1};
  CHECK(q.mask() == 0b1001);
  CHECK(BinaryAssignment::from_mask(0b1001, 4) == q);
  CHECK(BinaryAssignment::from_mask(0b1000, 4) == BinaryAssignment{1, 0, 0, 0});
  CHECK(q.to_string() == "(1,0,0,1)");
  CHECK(BinaryAssignment::parse("(1,0,0,1)") == q);
  CHECK(q.complement() == BinaryAssignment{0, 1, 1, 0});
  CHECK(BinaryAssignment{0, 0, 0}.is_trivial());
  CHECK(BinaryAssignment{1, 1, 1}.is_trivial());
  CHECK(!q.is_trivial());
  CHECK(q.count() == 2);
  CHECK(BinaryAssignment{0, 1, 1} < BinaryAssignment{1, 0, 0});
  CHECK_THROWS_AS(BinaryAssignment::parse("(1,2)"), Error);
}

TEST_CASE("build_qubo: worked node at the upper bound") {
  const CategoricalNode node = node_of(oracle::worked_groups());
  const double lambda = 191.5;
  const QuboProblem p = build_qubo(node, lambda);
  CHECK(p.evaluate(BinaryAssignment{0, 0, 0, 0}) == 0.0);
  CHECK(p.evaluate(BinaryAssignment{1, 1, 1, 1}) == doctest::Approx(0.0).epsilon(1e-12).scale(1e4));
  const BinaryAssignment q{1, 0, 0, 1};
  const FractionalParts f = eval_fractional(node, q);
  CHECK(f.numerator == doctest::Approx(90.0));
  CHECK(f.denominator == 9.0);
  CHECK(p.evaluate(q) == doctest::Approx(f.numerator - lambda * f.denominator).epsilon(1e-12));
  CHECK(p.evaluate(q) == doctest::Approx(-1633.5).epsilon(1e-12));
  // Left {0,2,12,14}, right {10,1}: d = 4 * 2 = 8, R = 148 + 40.5.
  const FractionalParts f2 = eval_fractional(node, BinaryAssignment{1, 0, 1, 0});
  CHECK(f2.denominator == 8.0);
  CHECK(f2.ratio() == doctest::Approx(188.5));
  CHECK(p.evaluate(BinaryAssignment{1, 0, 1, 0}) == doctest::Approx(8.0 * (188.5 - 191.5)).epsilon(1e-11));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) CHECK(p(a, b) == p(b, a));
  CHECK_THROWS_AS(build_qubo(node, -1.0), Error);
  CHECK_THROWS_AS(build_qubo(node_of({{1, 2}}), 1.0), Error);
}

TEST_CASE("eval_fractional and split_cost: worked node") {
  const CategoricalNode node = node_of(oracle::worked_groups());
  const FractionalParts f = eval_fractional(node, BinaryAssignment{1, 0, 0, 1});
  CHECK(f.n_left == 3);
  CHECK(f.n_right == 3);
  CHECK(f.ratio() == doctest::Approx(10.0));
  const FractionalParts t = eval_fractional(node, BinaryAssignment{1, 1, 1, 1});
  CHECK(t.numerator == 0.0);
  CHECK(t.denominator == 0.0);
  CHECK(t.n_left == 6);
  CHECK(t.n_right == 0);
  CHECK(split_cost(node, BinaryAssignment{1, 1, 0, 0}) == doctest::Approx(154.0));
  CHECK(split_cost(node, BinaryAssignment{1, 0, 0, 1}) == doctest::Approx(10.0));
  CHECK(split_cost(node, BinaryAssignment{0, 1, 1, 0}) == doctest::Approx(10.0));
  CHECK(split_cost(node, BinaryAssignment{1, 0, 1, 0}) == doctest::Approx(188.5));
  CHECK(partition_sse(node, BinaryAssignment{1, 0, 0, 1}) == doctest::Approx(10.0));
  CHECK_THROWS_AS(split_cost(node, BinaryAssignment{0, 0, 0, 0}), Error);
  const CategoricalNode flat = node_of({{3, 3}, {3}, {3, 3, 3}});
  CHECK(split_cost(flat, BinaryAssignment{1, 0, 1}) == 0.0);
}

TEST_CASE("QUBO identity, symmetry and bounds on random nodes") {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 150; ++t) {
    const auto g = oracle::random_groups(gen, 2 + t % 9, 10, 1e3);
    const CategoricalNode node = node_of(g);
    const std::size_t m = node.size();
    std::vector<double> all;
    for (const auto& grp : g) all.insert(all.end(), grp.begin(), grp.end());
    const double upper = static_cast<double>(all.size()) * oracle::variance(all);
    const auto brute = oracle::brute_split(g);
    CHECK(brute.cost <= upper * (1 + 1e-12) + 1e-9);
    std::uniform_real_distribution<double> lam(0.0, upper);
    const double lambda = lam(gen);
    const QuboProblem p = build_qubo(node, lambda);
    const double scale = std::max(1.0, upper * static_cast<double>(all.size() * all.size()));
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
      const BinaryAssignment q = BinaryAssignment::from_mask(mask, m);
      const FractionalParts f = eval_fractional(node, q);
      CHECK(std::fabs(p.evaluate(q) - (f.numerator - lambda * f.denominator)) <= 1e-9 * scale);
      CHECK(std::fabs(p.evaluate(q) - p.evaluate(q.complement())) <= 1e-9 * scale);
      if (!q.is_trivial()) {
        std::vector<int> bits(m);
        for (std::size_t a = 0; a < m; ++a) bits[a] = q[a];
        CHECK(oracle::close_rel(f.ratio(), oracle::split_sse(g, bits), 1e-9));
        CHECK(f.numerator >= 0.0);
      }
    }
    // Below the optimum every non-trivial F is positive; at the upper bound the
    // non-trivial minimum is non-positive.
    const QuboProblem below = build_qubo(node, std::max(0.0, brute.cost - 1.0));
    const QuboProblem at_upper = build_qubo(node, upper);
    double min_below = 1e300, min_upper = 1e300;
    for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << m); ++mask) {
      min_below = std::min(min_below, below.evaluate(BinaryAssignment::from_mask(mask, m)));
      min_upper = std::min(min_upper, at_upper.evaluate(BinaryAssignment::from_mask(mask, m)));
    }
    if (brute.cost >= 1.0) CHECK(min_below > -1e-9 * scale);
    CHECK(min_upper <= 1e-9 * scale);
  }
}

TEST_CASE("triplet format round trip") {
  const CategoricalNode node = node_of(oracle::worked_groups());
  const QuboProblem p = build_qubo(node, 10.0);
  std::stringstream ss;
  write_triplets(p, ss);
  CHECK(ss.str().rfind("qubo 4\n", 0) == 0);
  const QuboProblem back = read_triplets(ss);
  REQUIRE(back.size() == 4);
  for (std::uint64_t mask = 0; mask < 16; ++mask) {
    const auto q = BinaryAssignment::from_mask(mask, 4);
    CHECK(back.evaluate(q) == doctest::Approx(p.evaluate(q)).epsilon(1e-14));
  }
}
