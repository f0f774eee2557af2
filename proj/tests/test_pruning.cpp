#include <functional>

#include "cartqubo/error.hpp"
#include "cartqubo/pruning.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cartqubo;

namespace {

struct SubtreeFacts {
  std::size_t leaves;
  double risk;
};

SubtreeFacts facts(const RegressionTree& t, std::size_t i, double n) {
  const auto& node = t.nodes[i];
  if (node.is_leaf()) return {1, node.sse / n};
  const auto l = facts(t, static_cast<std::size_t>(node.left), n);
  const auto r = facts(t, static_cast<std::size_t>(node.right), n);
  return {l.leaves + r.leaves, l.risk + r.risk};
}

/// Ids kept (as internal nodes) by the smallest subtree minimising
/// R + alpha * leaves, found by bottom-up dynamic programming.
double optimal_subtree(const RegressionTree& t, std::size_t i, double alpha, double n, std::vector<int>& internal) {
  const auto& node = t.nodes[i];
  const double as_leaf = node.sse / n + alpha;
  if (node.is_leaf()) return as_leaf;
  std::vector<int> below;
  const double split = optimal_subtree(t, static_cast<std::size_t>(node.left), alpha, n, below) +
                       optimal_subtree(t, static_cast<std::size_t>(node.right), alpha, n, below);
  if (as_leaf <= split + 1e-9 * std::max(1e-300, std::fabs(split))) return as_leaf;
  internal.push_back(node.id);
  internal.insert(internal.end(), below.begin(), below.end());
  return split;
}

std::vector<int> internal_ids(const RegressionTree& t) {
  std::vector<int> ids;
  for (const auto& n : t.nodes)
    if (!n.is_leaf()) ids.push_back(n.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

TEST_CASE("prune_sequence: worked stump") {
  const Dataset d = oracle::worked_dataset();
  GrowConfig cfg = GrowConfig::max_tree();
  cfg.max_depth = 1;
  const RegressionTree t = grow(d, cfg);
  const PruneSequence seq = prune_sequence(t, 6);
  REQUIRE(seq.size() == 2);
  CHECK(seq.steps()[0].alpha == 0.0);
  CHECK(seq.steps()[0].leaves == 2);
  CHECK(seq.steps()[0].train_risk == doctest::Approx(10.0 / 6.0));
  CHECK(seq.steps()[1].alpha == doctest::Approx(30.25).epsilon(1e-13));
  CHECK(seq.steps()[1].leaves == 1);
  CHECK(seq.tree(1).nodes.size() == 1);
  CHECK_THROWS_AS(seq.tree(2), Error);
}

TEST_CASE("prune_sequence: root-only tree") {
  const Dataset d = oracle::worked_dataset();
  GrowConfig cfg;
  cfg.max_depth = 0;
  const PruneSequence seq = prune_sequence(grow(d, cfg), 6);
  REQUIRE(seq.size() == 1);
  CHECK(seq.steps()[0].alpha == 0.0);
  CHECK(seq.steps()[0].leaves == 1);
}

TEST_CASE("prune_sequence: ladder properties against independent recomputation") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset d = generate_datagen(1500, seed);
    GrowConfig cfg = GrowConfig::max_tree();
    cfg.max_depth = 12;
    const RegressionTree t = grow(d, cfg);
    const double n = static_cast<double>(t.n_train);
    const PruneSequence seq = prune_sequence(t, t.n_train);
    const auto fast = seq.mse_per_step(d);
    REQUIRE(seq.size() >= 2);
    CHECK(seq.steps().back().leaves == 1);
    CHECK(seq.steps()[0].leaves == t.leaf_count());
    for (std::size_t m = 1; m < seq.size(); ++m) {
      const auto& prev = seq.steps()[m - 1];
      const auto& cur = seq.steps()[m];
      CHECK(cur.alpha > prev.alpha);
      CHECK(cur.leaves < prev.leaves);
      CHECK(cur.train_risk >= prev.train_risk * (1 - 1e-12));
      const RegressionTree before = seq.tree(m - 1);
      const RegressionTree after = seq.tree(m);
      // Nested: every internal node of the later tree is internal earlier.
      const auto ib = internal_ids(before), ia = internal_ids(after);
      CHECK(std::includes(ib.begin(), ib.end(), ia.begin(), ia.end()));
      // The collapsed nodes attain the minimum g of the previous tree and satisfy
      // R(t) = R(A^t) + alpha (|A^t| - 1).
      double min_g = 1e300;
      for (std::size_t i = 0; i < before.nodes.size(); ++i) {
        if (before.nodes[i].is_leaf()) continue;
        const auto f = facts(before, i, n);
        min_g = std::min(min_g, (before.nodes[i].sse / n - f.risk) / static_cast<double>(f.leaves - 1));
      }
      CHECK(oracle::close_rel(cur.alpha, min_g, 1e-9));
      for (std::size_t idx : cur.collapsed) {
        const auto& node = t.nodes[idx];
        const auto pos = std::find_if(before.nodes.begin(), before.nodes.end(),
                                      [&](const TreeNode& x) { return x.id == node.id; });
        if (pos == before.nodes.end() || pos->is_leaf()) continue;
        const auto f = facts(before, static_cast<std::size_t>(pos - before.nodes.begin()), n);
        const double lhs = node.sse / n;
        const double rhs = f.risk + cur.alpha * static_cast<double>(f.leaves - 1);
        CHECK(oracle::close_rel(lhs, rhs, 1e-9));
      }
      // Re-pruning from scratch at alpha_m gives the same subtree.
      std::vector<int> keep;
      optimal_subtree(t, 0, cur.alpha, n, keep);
      std::sort(keep.begin(), keep.end());
      CHECK(keep == ia);
      CHECK(oracle::close_rel(seq.mse(m, d), evaluate_mse(after, d), 1e-12));
      CHECK(oracle::close_rel(fast[m], evaluate_mse(after, d), 1e-9));
    }
  }
}

TEST_CASE("select_subtree: overfit fixture picks a strict subtree") {
  // The maximal tree fits the severity noise of its training rows.
  const Dataset all = generate_df(6000, 31);
  const Partition p = partition(all, {});
  const RegressionTree t = grow(p.train, GrowConfig::max_tree());
  const PruneSequence seq = prune_sequence(t, t.n_train);
  const SelectionReport r = select_subtree(seq, p.validation, &p.test);
  CHECK(r.chosen > 0);
  CHECK(r.steps[r.chosen].leaves < t.leaf_count());
  for (const auto& s : r.steps) CHECK(r.steps[r.chosen].validation_mse <= s.validation_mse);
  CHECK(r.steps[r.chosen].test_mse.has_value());

  const Dataset w = oracle::worked_dataset();
  GrowConfig root;
  root.max_depth = 0;
  const PruneSequence single = prune_sequence(grow(w, root), 6);
  CHECK(select_subtree(single, w).chosen == 0);
}

TEST_CASE("select_subtree: ties go to fewer leaves") {
  Column x;
  x.schema = {"x", ColumnKind::numeric, {}};
  x.values = {0, 0, 1, 1};
  const RegressionTree s = grow(Dataset({x}, "y", {0, 1, 2, 3}), GrowConfig::max_tree());
  const PruneSequence seq = prune_sequence(s, 4);
  REQUIRE(seq.size() == 2);
  // Root predicts 1.5, the stump 0.5 and 2.5: both miss these rows by 0.5.
  Column vx;
  vx.schema = {"x", ColumnKind::numeric, {}};
  vx.values = {0, 1};
  const Dataset val({vx}, "y", {1.0, 2.0});
  const SelectionReport r = select_subtree(seq, val);
  CHECK(r.steps[0].validation_mse == r.steps[1].validation_mse);
  CHECK(r.chosen == 1);
}

TEST_CASE("select_subtree: empty validation is an error") {
  const Dataset w = oracle::worked_dataset();
  GrowConfig cfg = GrowConfig::max_tree();
  cfg.max_depth = 1;
  const PruneSequence seq = prune_sequence(grow(w, cfg), 6);
  CHECK_THROWS_AS(select_subtree(seq, Dataset{}), Error);
}

TEST_CASE("evaluate_protocol: report rows and orderings on df") {
  const Dataset d = generate_df(8000, 123);
  const ProtocolReport r = evaluate_protocol(d, {}, GrowConfig::max_tree());
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].label == "Root Tree");
  CHECK(r.rows[3].label == "Max Tree");
  CHECK(r.n_train == 4000);
  const Partition p = partition(d, {});
  CHECK(oracle::close_rel(r.rows[0].train_mse, oracle::variance(std::vector<double>(p.train.response().begin(), p.train.response().end())), 1e-12));
  CHECK(r.rows[0].leaves == 1);
  const auto& best = r.rows[1];
  const auto& max = r.rows[3];
  CHECK(max.train_mse <= best.train_mse);
  CHECK(best.train_mse <= r.rows[0].train_mse);
  CHECK(r.rows[0].validation_mse >= best.validation_mse);
  CHECK(best.validation_mse <= max.validation_mse);
  CHECK(best.leaves * 10 < max.leaves);
  const std::string json = protocol_to_json(r);
  CHECK(json.find("\"Validation Best Tree\"") != std::string::npos);
  CHECK(protocol_to_json(evaluate_protocol(d, {}, GrowConfig::max_tree())) == json);
}
