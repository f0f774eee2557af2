#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cartqubo/dataset.hpp"
#include "cartqubo/split_search.hpp"

namespace cartqubo {

/// How a subset rule treats a category it was not trained on.
/// complement: anything outside the left set goes right.
/// majority: categories seen in neither child go to the child with more
/// training rows.
enum class Routing { complement, majority };

std::string_view to_string(Routing routing);
Routing parse_routing(std::string_view text);

struct TreeNode {
  /// Preorder index in the tree as grown; kept by pruned subtrees.
  int id = 0;
  std::size_t depth = 0;
  std::size_t n = 0;
  double prediction = 0.0;
  double sse = 0.0;
  std::optional<SplitRule> rule;
  /// Indices into RegressionTree::nodes, -1 for leaves.
  int left = -1;
  int right = -1;

  bool is_leaf() const { return left < 0; }
};

struct GrowConfig {
  std::size_t max_depth = 30;
  std::size_t min_split = 20;
  std::size_t min_bucket = 7;
  /// A split is kept only if it removes at least cp * SSE(root).
  double cp = 0.01;
  Routing routing = Routing::complement;
  CategoricalMethod method = CategoricalMethod::qubo;
  SolverConfig solver;
  DinkelbachConfig dinkelbach;

  /// cp = 0, min_bucket = 1, min_split = 2, max_depth = 64.
  static GrowConfig max_tree();
  void validate() const;
};

class RegressionTree {
public:
  std::vector<ColumnSchema> schema;
  std::string response_name;
  GrowConfig config;
  std::size_t n_train = 0;
  /// Preorder; nodes[0] is the root.
  std::vector<TreeNode> nodes;

  const TreeNode& root() const { return nodes.front(); }
  std::size_t leaf_count() const;
  std::size_t depth() const;
};

/// Observer for every Dinkelbach run made while growing (may be called from
/// worker threads).
using TraceObserver = std::function<void(const std::string& variable, const DinkelbachResult&)>;

RegressionTree grow(const Dataset& data, const GrowConfig& cfg, TraceObserver observer = {});

/// Resolves a tree's columns against a dataset once, then predicts rows.
class Predictor {
public:
  Predictor(const RegressionTree& tree, const Dataset& data);
  Predictor(const RegressionTree& tree, const Dataset& data, Routing routing);

  double operator()(std::size_t row) const;
  /// Index of the leaf reached by `row`. With `stop` set, nodes for which
  /// stop(node) is true are treated as leaves.
  std::size_t leaf_index(std::size_t row, const std::function<bool(const TreeNode&)>& stop = {}) const;

private:
  const RegressionTree* tree_;
  const Dataset* data_;
  Routing routing_;
  /// tree column -> dataset column
  std::vector<std::size_t> column_map_;
  /// tree column -> (dataset code -> tree code)
  std::vector<std::vector<std::int32_t>> code_map_;
};

double predict(const RegressionTree& tree, const Dataset& data, std::size_t row);
std::vector<double> predict_all(const RegressionTree& tree, const Dataset& data);
double evaluate_mse(const RegressionTree& tree, const Dataset& data);

struct TreeSummary {
  std::size_t leaves = 0;
  std::size_t depth = 0;
  std::size_t nodes = 0;
};

TreeSummary describe(const RegressionTree& tree);
/// Indented preorder dump: one line per node with n, prediction and rule.
std::string format_tree(const RegressionTree& tree);
std::string format_rule(const RegressionTree& tree, const SplitRule& rule, bool left_side);

/// JSON model document: schema, grow config and preorder node list.
std::string tree_to_json(const RegressionTree& tree);
RegressionTree tree_from_json(const std::string& text);
void save_tree(const RegressionTree& tree, const std::string& path);
RegressionTree load_tree(const std::string& path);

/// Copy of `tree` in which every node with collapse(node) true becomes a leaf
/// and its descendants are dropped. Node ids are preserved.
RegressionTree collapse_nodes(const RegressionTree& tree, const std::function<bool(const TreeNode&)>& collapse);

}  // namespace cartqubo
