#include "cartqubo/tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cartqubo/error.hpp"
#include "cartqubo/kernels.hpp"

namespace cartqubo {

std::string_view to_string(Routing routing) { return routing == Routing::majority ? "majority" : "complement"; }

Routing parse_routing(std::string_view text) {
  if (text == "complement") return Routing::complement;
  if (text == "majority") return Routing::majority;
  throw Error("unknown routing '" + std::string(text) + "'");
}

GrowConfig GrowConfig::max_tree() {
  GrowConfig cfg;
  cfg.cp = 0.0;
  cfg.min_bucket = 1;
  cfg.min_split = 2;
  cfg.max_depth = 64;
  return cfg;
}

void GrowConfig::validate() const {
  if (min_bucket < 1) throw Error("min_bucket must be at least 1");
  if (min_split < 2 * min_bucket) throw Error("min_split must be at least 2 * min_bucket");
  if (!(cp >= 0.0)) throw Error("cp must be non-negative");
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

namespace {

struct Grower {
  const Dataset& data;
  const GrowConfig& cfg;
  SplitConfig split_cfg;
  double root_sse = 0.0;
  std::vector<TreeNode> nodes;

  int build(std::span<RowIndex> rows, std::size_t depth) {
    const auto resp = data.response();
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = resp[rows[i]];
    const double n = static_cast<double>(rows.size());
    const double mean = kernels::moments(y).sum / n;
    for (auto& v : y) v -= mean;
    const double sse = kernels::moments(y).sum_sq;

    const int index = static_cast<int>(nodes.size());
    TreeNode node;
    node.id = index;
    node.depth = depth;
    node.n = rows.size();
    node.prediction = mean;
    node.sse = sse;
    nodes.push_back(node);
    if (depth == 0) root_sse = sse;

    if (depth >= cfg.max_depth || rows.size() < cfg.min_split || sse <= 0.0) return index;
    auto cand = best_split(data, rows, split_cfg);
    if (!cand) return index;
    const double reduction = sse - cand->cost;
    if (!(reduction > 1e-12 * sse) || reduction < cfg.cp * root_sse) return index;

    const SplitRule& rule = cand->rule;
    const Column& col = data.column(rule.column);
    auto goes_left = [&](RowIndex r) {
      return rule.kind == SplitKind::subset ? rule.in_left(col.codes[r]) : col.values[r] < rule.threshold;
    };
    const auto mid = std::stable_partition(rows.begin(), rows.end(), goes_left);
    const auto n_left = static_cast<std::size_t>(mid - rows.begin());
    if (n_left == 0 || n_left == rows.size()) throw Error("internal error: split does not separate the node");

    nodes[index].rule = rule;
    const int l = build(rows.subspan(0, n_left), depth + 1);
    const int r = build(rows.subspan(n_left), depth + 1);
    nodes[index].left = l;
    nodes[index].right = r;
    return index;
  }
};

}  // namespace

RegressionTree grow(const Dataset& data, const GrowConfig& cfg, TraceObserver observer) {
  cfg.validate();
  if (data.rows() == 0) throw Error("grow: empty dataset");
  Grower g{data, cfg, {}, 0.0, {}};
  g.split_cfg.method = cfg.method;
  g.split_cfg.solver = cfg.solver;
  g.split_cfg.dinkelbach = cfg.dinkelbach;
  g.split_cfg.min_bucket = cfg.min_bucket;
  g.split_cfg.observer = std::move(observer);
  std::vector<RowIndex> rows(data.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<RowIndex>(i);
  g.build(rows, 0);

  RegressionTree tree;
  tree.schema = data.schema();
  tree.response_name = data.response_name();
  tree.config = cfg;
  tree.n_train = data.rows();
  tree.nodes = std::move(g.nodes);
  return tree;
}

// ---------------------------------------------------------------------------
// Prediction

Predictor::Predictor(const RegressionTree& tree, const Dataset& data) : Predictor(tree, data, tree.config.routing) {}

Predictor::Predictor(const RegressionTree& tree, const Dataset& data, Routing routing)
    : tree_(&tree), data_(&data), routing_(routing) {
  if (tree.nodes.empty()) throw Error("empty tree");
  column_map_.assign(tree.schema.size(), static_cast<std::size_t>(-1));
  code_map_.resize(tree.schema.size());
  std::vector<bool> used(tree.schema.size(), false);
  for (const auto& node : tree.nodes)
    if (node.rule) used.at(node.rule->column) = true;
  for (std::size_t j = 0; j < tree.schema.size(); ++j) {
    if (!used[j]) continue;
    const auto& want = tree.schema[j];
    const auto found = data.find_column(want.name);
    if (!found) throw Error("data has no column '" + want.name + "' required by the model");
    const Column& col = data.column(*found);
    if (col.is_categorical() != (want.kind == ColumnKind::categorical))
      throw Error("column '" + want.name + "' has a different kind than in the model");
    column_map_[j] = *found;
    if (col.is_categorical()) {
      auto& map = code_map_[j];
      map.resize(col.schema.categories.size());
      for (std::size_t k = 0; k < map.size(); ++k) {
        const auto code = want.find_category(col.schema.categories[k]);
        if (!code)
          throw Error("category '" + col.schema.categories[k] + "' of column '" + want.name +
                      "' is not in the training schema");
        map[k] = *code;
      }
    }
  }
}

std::size_t Predictor::leaf_index(std::size_t row, const std::function<bool(const TreeNode&)>& stop) const {
  const auto& nodes = tree_->nodes;
  std::size_t i = 0;
  for (;;) {
    const TreeNode& node = nodes[i];
    if (node.is_leaf() || (stop && stop(node))) return i;
    const SplitRule& rule = *node.rule;
    const Column& col = data_->column(column_map_[rule.column]);
    bool left;
    if (rule.kind == SplitKind::threshold) {
      left = col.values[row] < rule.threshold;
    } else {
      const std::int32_t code = code_map_[rule.column][static_cast<std::size_t>(col.codes[row])];
      if (rule.in_left(code))
        left = true;
      else if (routing_ == Routing::complement || rule.in_right(code))
        left = false;
      else
        left = nodes[static_cast<std::size_t>(node.left)].n >= nodes[static_cast<std::size_t>(node.right)].n;
    }
    i = static_cast<std::size_t>(left ? node.left : node.right);
  }
}

double Predictor::operator()(std::size_t row) const { return tree_->nodes[leaf_index(row)].prediction; }

double predict(const RegressionTree& tree, const Dataset& data, std::size_t row) {
  if (row >= data.rows()) throw Error("row index out of range");
  return Predictor(tree, data)(row);
}

std::vector<double> predict_all(const RegressionTree& tree, const Dataset& data) {
  Predictor p(tree, data);
  std::vector<double> out(data.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p(i);
  return out;
}

double evaluate_mse(const RegressionTree& tree, const Dataset& data) {
  if (data.rows() == 0) throw Error("evaluate_mse: empty data");
  Predictor p(tree, data);
  const auto y = data.response();
  std::vector<double> err(data.rows());
  for (std::size_t i = 0; i < err.size(); ++i) err[i] = y[i] - p(i);
  return kernels::moments(err).sum_sq / static_cast<double>(err.size());
}

// ---------------------------------------------------------------------------
// Introspection

TreeSummary describe(const RegressionTree& tree) {
  return TreeSummary{tree.leaf_count(), tree.depth(), tree.nodes.size()};
}

std::string format_rule(const RegressionTree& tree, const SplitRule& rule, bool left_side) {
  const auto& schema = tree.schema.at(rule.column);
  std::ostringstream os;
  os << rule.variable;
  if (rule.kind == SplitKind::threshold) {
    os << (left_side ? " < " : " >= ") << format_double(rule.threshold);
    return os.str();
  }
  os << (left_side ? " in {" : " not in {");
  const auto& shown = rule.left_categories;
  for (std::size_t k = 0; k < shown.size(); ++k) {
    if (k) os << ", ";
    os << schema.categories.at(static_cast<std::size_t>(shown[k]));
  }
  os << '}';
  return os.str();
}

std::string format_tree(const RegressionTree& tree) {
  std::ostringstream os;
  auto emit = [&](auto&& self, std::size_t i, const std::string& label) -> void {
    const TreeNode& node = tree.nodes[i];
    os << std::string(2 * node.depth, ' ') << '[' << node.id << "] " << label << " n=" << node.n
       << " yhat=" << format_double(node.prediction) << (node.is_leaf() ? " *" : "") << '\n';
    if (node.is_leaf()) return;
    self(self, static_cast<std::size_t>(node.left), format_rule(tree, *node.rule, true));
    self(self, static_cast<std::size_t>(node.right), format_rule(tree, *node.rule, false));
  };
  emit(emit, 0, "root");
  return os.str();
}

RegressionTree collapse_nodes(const RegressionTree& tree, const std::function<bool(const TreeNode&)>& collapse) {
  RegressionTree out;
  out.schema = tree.schema;
  out.response_name = tree.response_name;
  out.config = tree.config;
  out.n_train = tree.n_train;
  auto copy = [&](auto&& self, std::size_t i) -> int {
    const TreeNode& src = tree.nodes[i];
    const int index = static_cast<int>(out.nodes.size());
    out.nodes.push_back(src);
    if (src.is_leaf() || collapse(src)) {
      out.nodes.back().left = out.nodes.back().right = -1;
      out.nodes.back().rule.reset();
      return index;
    }
    const int l = self(self, static_cast<std::size_t>(src.left));
    const int r = self(self, static_cast<std::size_t>(src.right));
    out.nodes[static_cast<std::size_t>(index)].left = l;
    out.nodes[static_cast<std::size_t>(index)].right = r;
    return index;
  };
  copy(copy, 0);
  return out;
}

}  // namespace cartqubo
