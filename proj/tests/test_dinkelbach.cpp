#include <random>
#include <sstream>

#include "cartqubo/dinkelbach.hpp"
#include "cartqubo/error.hpp"
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

TEST_CASE("dinkelbach: worked node from the upper bound") {
  const CategoricalNode node = node_of(oracle::worked_groups());
  CHECK(lambda_upper_bound(node.node) == doctest::Approx(191.5).epsilon(1e-14));
  const DinkelbachResult r = dinkelbach_split(node, {}, {});
  CHECK(r.converged);
  CHECK(r.lambda_star == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(r.q == BinaryAssignment{1, 0, 0, 1});
  REQUIRE(r.trace.rows.size() == 2);
  CHECK(r.trace.rows[0].lambda_in == doctest::Approx(191.5));
  CHECK(r.trace.rows[0].q == BinaryAssignment{1, 0, 0, 1});
  CHECK(r.trace.rows[0].f_value == doctest::Approx(-1633.5));
  CHECK(r.trace.rows[0].lambda_out == doctest::Approx(10.0));
  CHECK(r.trace.rows[1].q == BinaryAssignment{1, 0, 0, 1});
  CHECK(std::fabs(r.trace.rows[1].f_value) < 1e-9);
}

TEST_CASE("dinkelbach: zero start records a trivial first row") {
  const CategoricalNode node = node_of(oracle::worked_groups());
  DinkelbachConfig cfg;
  cfg.init = LambdaInit::zero;
  const DinkelbachResult r = dinkelbach_split(node, {}, cfg);
  REQUIRE(r.trace.rows.size() == 3);
  CHECK(r.trace.rows[0].lambda_in == 0.0);
  CHECK(r.trace.rows[0].q == BinaryAssignment{0, 0, 0, 0});
  CHECK(r.trace.rows[0].lambda_out == doctest::Approx(191.5));
  CHECK(r.trace.rows[1].q == BinaryAssignment{1, 0, 0, 1});
  CHECK(r.converged);
  CHECK(r.lambda_star == doctest::Approx(10.0));
}

TEST_CASE("dinkelbach: custom start and degenerate nodes") {
  const CategoricalNode node = node_of(oracle::worked_groups());
  DinkelbachConfig cfg;
  cfg.init = LambdaInit::custom;
  cfg.custom_lambda = 50.0;
  const DinkelbachResult r = dinkelbach_split(node, {}, cfg);
  CHECK(r.converged);
  CHECK(r.lambda_star == doctest::Approx(10.0));
  CHECK(r.trace.rows[0].lambda_in == 50.0);

  const DinkelbachResult flat = dinkelbach_split(node_of({{4, 4}, {4}, {4, 4}}), {}, {});
  CHECK(!flat.converged);
  CHECK(flat.lambda_star == 0.0);
  CHECK(lambda_upper_bound(make_node_stats(std::vector<double>{7})) == 0.0);
  CHECK_THROWS_AS(dinkelbach_split(node_of({{1, 2, 3}}), {}, {}), Error);
}

TEST_CASE("dinkelbach: optimum, monotone lambda and fixed point on random nodes") {
  std::mt19937_64 gen(41);
  for (int t = 0; t < 150; ++t) {
    const auto g = oracle::random_groups(gen, 2 + t % 11, 15, 1e4);
    const CategoricalNode node = node_of(g);
    const auto brute = oracle::brute_split(g);
    const DinkelbachResult r = dinkelbach_split(node, {}, {});
    if (brute.cost == 0.0) continue;
    CHECK(r.converged);
    CHECK(r.trace.rows.size() <= 10);
    CHECK(oracle::close_rel(r.lambda_star, brute.cost, 1e-9));
    for (std::size_t k = 1; k < r.trace.rows.size(); ++k)
      CHECK(r.trace.rows[k].lambda_out <= r.trace.rows[k - 1].lambda_out * (1 + 1e-12));
    for (const auto& row : r.trace.rows) CHECK(row.lambda_out >= r.lambda_star * (1 - 1e-12));
    // Re-solving at lambda* returns a vector whose ratio is lambda*.
    DinkelbachConfig at;
    at.init = LambdaInit::custom;
    at.custom_lambda = r.lambda_star;
    const DinkelbachResult again = dinkelbach_split(node, {}, at);
    CHECK(oracle::close_rel(again.trace.rows[0].ratio, r.lambda_star, 1e-9));
  }
}

TEST_CASE("trace CSV header and vector quoting") {
  const CategoricalNode node = node_of(oracle::worked_groups());
  std::ostringstream os;
  write_trace_csv(dinkelbach_split(node, {}, {}).trace, os);
  const std::string text = os.str();
  CHECK(text.rfind("iteration,lambda_initial,binary_vector,score,lambda_final\n", 0) == 0);
  CHECK(text.find("\"(1,0,0,1)\"") != std::string::npos);
  CHECK(parse_lambda_init("upper") == LambdaInit::upper_bound);
  CHECK_THROWS_AS(parse_lambda_init("nope"), Error);
}
