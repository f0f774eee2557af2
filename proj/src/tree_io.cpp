#include <algorithm>
#include <fstream>
#include <sstream>

#include "cartqubo/error.hpp"
#include "cartqubo/tree.hpp"
#include "json.hpp"

namespace cartqubo {

using nlohmann::ordered_json;

namespace {

ordered_json config_to_json(const GrowConfig& cfg) {
  ordered_json anneal = {{"seed", cfg.solver.anneal.seed},
                         {"sweeps", cfg.solver.anneal.sweeps},
                         {"restarts", cfg.solver.anneal.restarts}};
  anneal["t_init"] = cfg.solver.anneal.t_init ? ordered_json(*cfg.solver.anneal.t_init) : ordered_json(nullptr);
  anneal["t_final"] = cfg.solver.anneal.t_final ? ordered_json(*cfg.solver.anneal.t_final) : ordered_json(nullptr);
  return {{"max_depth", cfg.max_depth},
          {"min_split", cfg.min_split},
          {"min_bucket", cfg.min_bucket},
          {"cp", cfg.cp},
          {"routing", to_string(cfg.routing)},
          {"method", to_string(cfg.method)},
          {"exact_threshold", cfg.solver.exact_threshold},
          {"anneal", anneal},
          {"dinkelbach",
           {{"init", to_string(cfg.dinkelbach.init)},
            {"custom_lambda", cfg.dinkelbach.custom_lambda},
            {"rel_tolerance", cfg.dinkelbach.rel_tolerance},
            {"max_iterations", cfg.dinkelbach.max_iterations}}}};
}

GrowConfig config_from_json(const ordered_json& j) {
  GrowConfig cfg;
  cfg.max_depth = j.at("max_depth").get<std::size_t>();
  cfg.min_split = j.at("min_split").get<std::size_t>();
  cfg.min_bucket = j.at("min_bucket").get<std::size_t>();
  cfg.cp = j.at("cp").get<double>();
  cfg.routing = parse_routing(j.at("routing").get<std::string>());
  cfg.method = parse_categorical_method(j.at("method").get<std::string>());
  cfg.solver.exact_threshold = j.at("exact_threshold").get<std::size_t>();
  const auto& a = j.at("anneal");
  cfg.solver.anneal.seed = a.at("seed").get<std::uint64_t>();
  cfg.solver.anneal.sweeps = a.at("sweeps").get<std::size_t>();
  cfg.solver.anneal.restarts = a.at("restarts").get<std::size_t>();
  if (!a.at("t_init").is_null()) cfg.solver.anneal.t_init = a.at("t_init").get<double>();
  if (!a.at("t_final").is_null()) cfg.solver.anneal.t_final = a.at("t_final").get<double>();
  const auto& d = j.at("dinkelbach");
  cfg.dinkelbach.init = parse_lambda_init(d.at("init").get<std::string>());
  cfg.dinkelbach.custom_lambda = d.at("custom_lambda").get<double>();
  cfg.dinkelbach.rel_tolerance = d.at("rel_tolerance").get<double>();
  cfg.dinkelbach.max_iterations = d.at("max_iterations").get<std::size_t>();
  return cfg;
}

std::vector<std::string> labels(const ColumnSchema& schema, const std::vector<std::int32_t>& codes) {
  std::vector<std::string> out;
  for (auto c : codes) out.push_back(schema.categories.at(static_cast<std::size_t>(c)));
  return out;
}

std::vector<std::int32_t> codes_of(const ColumnSchema& schema, const ordered_json& arr) {
  std::vector<std::int32_t> out;
  for (const auto& label : arr) {
    const auto code = schema.find_category(label.get<std::string>());
    if (!code) throw Error("model rule references unknown category '" + label.get<std::string>() + "'");
    out.push_back(*code);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string tree_to_json(const RegressionTree& tree) {
  ordered_json doc;
  doc["format"] = "cartqubo-tree";
  doc["version"] = 1;
  doc["response"] = tree.response_name;
  doc["n_train"] = tree.n_train;
  ordered_json schema = ordered_json::array();
  for (const auto& col : tree.schema) {
    ordered_json c = {{"name", col.name}, {"kind", to_string(col.kind)}};
    if (col.kind == ColumnKind::categorical) c["categories"] = col.categories;
    schema.push_back(std::move(c));
  }
  doc["schema"] = std::move(schema);
  doc["config"] = config_to_json(tree.config);
  ordered_json nodes = ordered_json::array();
  for (const auto& node : tree.nodes) {
    ordered_json n = {{"id", node.id},       {"depth", node.depth}, {"n", node.n},
                      {"prediction", node.prediction}, {"sse", node.sse}};
    if (node.rule) {
      const SplitRule& r = *node.rule;
      ordered_json rule = {{"variable", r.variable}, {"kind", r.kind == SplitKind::subset ? "subset" : "threshold"}};
      if (r.kind == SplitKind::subset) {
        const auto& s = tree.schema.at(r.column);
        rule["left_categories"] = labels(s, r.left_categories);
        rule["right_categories"] = labels(s, r.right_categories);
      } else {
        rule["threshold"] = r.threshold;
      }
      n["rule"] = std::move(rule);
      n["left"] = node.left;
      n["right"] = node.right;
    }
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

RegressionTree tree_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw Error(std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "cartqubo-tree") throw Error("not a cartqubo tree model");
    RegressionTree tree;
    tree.response_name = doc.at("response").get<std::string>();
    tree.n_train = doc.at("n_train").get<std::size_t>();
    for (const auto& c : doc.at("schema")) {
      ColumnSchema col;
      col.name = c.at("name").get<std::string>();
      col.kind = parse_column_kind(c.at("kind").get<std::string>());
      if (c.contains("categories")) col.categories = c.at("categories").get<std::vector<std::string>>();
      tree.schema.push_back(std::move(col));
    }
    tree.config = config_from_json(doc.at("config"));
    for (const auto& n : doc.at("nodes")) {
      TreeNode node;
      node.id = n.at("id").get<int>();
      node.depth = n.at("depth").get<std::size_t>();
      node.n = n.at("n").get<std::size_t>();
      node.prediction = n.at("prediction").get<double>();
      node.sse = n.at("sse").get<double>();
      if (n.contains("rule")) {
        const auto& r = n.at("rule");
        SplitRule rule;
        rule.variable = r.at("variable").get<std::string>();
        const auto it = std::find_if(tree.schema.begin(), tree.schema.end(),
                                     [&](const ColumnSchema& s) { return s.name == rule.variable; });
        if (it == tree.schema.end()) throw Error("model rule references unknown column '" + rule.variable + "'");
        rule.column = static_cast<std::size_t>(it - tree.schema.begin());
        const auto kind = r.at("kind").get<std::string>();
        if (kind == "subset") {
          rule.kind = SplitKind::subset;
          rule.left_categories = codes_of(*it, r.at("left_categories"));
          rule.right_categories = codes_of(*it, r.at("right_categories"));
        } else if (kind == "threshold") {
          rule.kind = SplitKind::threshold;
          rule.threshold = r.at("threshold").get<double>();
        } else {
          throw Error("unknown rule kind '" + kind + "'");
        }
        node.rule = std::move(rule);
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
      }
      tree.nodes.push_back(std::move(node));
    }
    if (tree.nodes.empty()) throw Error("model has no nodes");
    const int count = static_cast<int>(tree.nodes.size());
    for (const auto& node : tree.nodes)
      if (!node.is_leaf() && (node.left <= 0 || node.left >= count || node.right <= 0 || node.right >= count))
        throw Error("model node links are out of range");
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model: ") + e.what());
  }
}

void save_tree(const RegressionTree& tree, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << tree_to_json(tree);
  if (!out) throw Error("write to '" + path + "' failed");
}

RegressionTree load_tree(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return tree_from_json(ss.str());
}

}  // namespace cartqubo
