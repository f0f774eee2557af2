// cartqubo: generate data, grow/prune/evaluate trees, inspect categorical splits.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cartqubo/dataset.hpp"
#include "cartqubo/dinkelbach.hpp"
#include "cartqubo/error.hpp"
#include "cartqubo/node_stats.hpp"
#include "cartqubo/parallel.hpp"
#include "cartqubo/pruning.hpp"
#include "cartqubo/split_search.hpp"
#include "cartqubo/tree.hpp"
#include "json.hpp"

using namespace cartqubo;
using nlohmann::ordered_json;

namespace {

struct DataOpts {
  std::string path;
  std::string response = "ClaimAmount";
  std::string schema;
};

void add_data_opts(CLI::App* cmd, DataOpts& o) {
  cmd->add_option("--data", o.path, "Input CSV")->required();
  cmd->add_option("--response", o.response, "Response column");
  cmd->add_option("--schema", o.schema, "Feature schema 'Name:kind,...' (kinds: numeric, categorical, binary); inferred when empty");
}

Dataset load_data(const DataOpts& o) {
  const auto schema = o.schema.empty() ? infer_csv_schema(o.path, o.response) : parse_schema_spec(o.schema);
  return load_csv(o.path, schema, o.response);
}

struct GrowOpts {
  bool max_tree = false;
  std::size_t max_depth = 30;
  std::size_t min_split = 20;
  std::size_t min_bucket = 7;
  double cp = 0.01;
  std::string routing = "complement";
  std::string method = "qubo";
};

struct SolverOpts {
  std::size_t exact_threshold = 22;
  std::uint64_t anneal_seed = 1;
  std::size_t sweeps = 0;
  std::size_t restarts = 8;
  std::string init = "upper_bound";
  double lambda = 0.0;
  double tolerance = 1e-9;
  std::size_t max_iterations = 50;
};

void add_solver_opts(CLI::App* cmd, SolverOpts& o) {
  cmd->add_option("--exact-threshold", o.exact_threshold, "Largest QUBO solved by enumeration");
  cmd->add_option("--anneal-seed", o.anneal_seed, "Annealing seed");
  cmd->add_option("--anneal-sweeps", o.sweeps, "Sweeps per restart (0 = 200 * M)");
  cmd->add_option("--anneal-restarts", o.restarts, "Annealing restarts");
  cmd->add_option("--init", o.init, "Dinkelbach start: upper_bound, zero or custom");
  cmd->add_option("--lambda", o.lambda, "Start value for --init custom");
  cmd->add_option("--tolerance", o.tolerance, "Relative Dinkelbach stopping tolerance");
  cmd->add_option("--max-iterations", o.max_iterations, "Dinkelbach iteration cap");
}

SolverConfig solver_config(const SolverOpts& o) {
  SolverConfig s;
  s.exact_threshold = o.exact_threshold;
  s.anneal.seed = o.anneal_seed;
  s.anneal.sweeps = o.sweeps;
  s.anneal.restarts = o.restarts;
  return s;
}

DinkelbachConfig dinkelbach_config(const SolverOpts& o) {
  DinkelbachConfig d;
  d.init = parse_lambda_init(o.init);
  d.custom_lambda = o.lambda;
  d.rel_tolerance = o.tolerance;
  d.max_iterations = o.max_iterations;
  return d;
}

void add_grow_opts(CLI::App* cmd, GrowOpts& o) {
  cmd->add_flag("--max-tree", o.max_tree, "Start from the maximal-tree preset (cp 0, min-bucket 1, min-split 2, depth 64)");
  cmd->add_option("--max-depth", o.max_depth, "Maximum depth");
  cmd->add_option("--min-split", o.min_split, "Smallest node considered for splitting");
  cmd->add_option("--min-bucket", o.min_bucket, "Smallest child");
  cmd->add_option("--cp", o.cp, "Complexity parameter");
  cmd->add_option("--routing", o.routing, "Unseen categories: complement or majority");
  cmd->add_option("--method", o.method, "Categorical splits: qubo, exhaustive or greedy");
}

/// Options given explicitly (on the command line or in the config file)
/// override the preset.
GrowConfig grow_config(CLI::App* cmd, const GrowOpts& o, const SolverOpts& s, bool max_tree_default) {
  GrowConfig cfg = (o.max_tree || max_tree_default) ? GrowConfig::max_tree() : GrowConfig{};
  auto given = [&](const char* name) { return cmd->count(name) > 0; };
  if (given("--max-depth") || !(o.max_tree || max_tree_default)) cfg.max_depth = o.max_depth;
  if (given("--min-split") || !(o.max_tree || max_tree_default)) cfg.min_split = o.min_split;
  if (given("--min-bucket") || !(o.max_tree || max_tree_default)) cfg.min_bucket = o.min_bucket;
  if (given("--cp") || !(o.max_tree || max_tree_default)) cfg.cp = o.cp;
  cfg.routing = parse_routing(o.routing);
  cfg.method = parse_categorical_method(o.method);
  cfg.solver = solver_config(s);
  cfg.dinkelbach = dinkelbach_config(s);
  cfg.validate();
  std::cerr << "# effective growth limits: max-depth=" << cfg.max_depth << " min-split=" << cfg.min_split
            << " min-bucket=" << cfg.min_bucket << " cp=" << cfg.cp << '\n';
  return cfg;
}

/// Writes to `path`, or stdout when path is "-".
void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string labels(const ColumnSchema& col, const std::vector<std::int32_t>& codes) {
  std::string s = "{";
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i) s += ",";
    s += col.categories[static_cast<std::size_t>(codes[i])];
  }
  return s + "}";
}

/// Category labels on each side of q (over the node's observed categories).
std::pair<std::string, std::string> sides(const ColumnSchema& col, const CategoricalNode& node,
                                          const BinaryAssignment& q) {
  std::vector<std::int32_t> left, right;
  for (std::size_t a = 0; a < node.size(); ++a) (q[a] ? left : right).push_back(node.categories[a].category);
  return {labels(col, left), labels(col, right)};
}

std::size_t categorical_column(const Dataset& data, const std::string& name) {
  const auto c = data.find_column(name);
  if (!c) throw Error("no column named '" + name + "'");
  if (!data.column(*c).is_categorical()) throw Error("column '" + name + "' is not categorical");
  return *c;
}

CategoricalNode root_node(const Dataset& data, std::size_t column) {
  std::vector<RowIndex> rows(data.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<RowIndex>(i);
  const auto node = make_categorical_node(aggregate_categories(data, column, rows));
  if (node.size() < 2) throw Error("column has fewer than two observed categories");
  return node;
}

std::string summary_line(const RegressionTree& tree, double train_mse) {
  std::ostringstream os;
  os << "leaves " << tree.leaf_count() << "  depth " << tree.depth() << "  train_mse " << format_double(train_mse);
  return os.str();
}

/// Loads a CSV against a model's schema. Category lists stay open so labels
/// unseen in training reach the routing rule.
Dataset load_for_model(const RegressionTree& model, const std::string& path, bool need_response) {
  auto schema = model.schema;
  for (auto& c : schema) c.categories.clear();
  std::string response = model.response_name;
  if (!need_response) {
    const auto header = read_csv_header(path);
    if (std::find(header.begin(), header.end(), response) == header.end()) response.clear();
  }
  return load_csv(path, schema, response);
}

/// "--config FILE" holds "key = value" lines whose keys are long option names
/// of the subcommand. Keys also given on the command line are dropped, so
/// explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (file.empty()) return args;
  if (args.empty()) throw Error("--config needs a subcommand");
  std::ifstream in(file);
  if (!in) throw Error("cannot open config '" + file + "'");
  std::set<std::string> given;
  for (std::size_t i = 1; i < args.size(); ++i)
    if (args[i].rfind("--", 0) == 0) given.insert(args[i].substr(2, args[i].find('=') - 2));
  std::vector<std::string> extra;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(file + " line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!given.count(key)) extra.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression trees with QUBO categorical splits"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::size_t threads = 0;
  auto add_threads = [&](CLI::App* cmd) {
    cmd->add_option("--threads", threads, "Worker threads (default: CARTQUBO_THREADS or 1)");
  };

  // generate
  std::string gen_kind = "df", gen_out;
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 1;
  auto* generate = app.add_subcommand("generate", "Write a synthetic insurance dataset");
  generate->add_option("--kind", gen_kind, "df or datagen")->check(CLI::IsMember({"df", "datagen"}));
  generate->add_option("--n", gen_n, "Rows")->required();
  generate->add_option("--seed", gen_seed, "Seed");
  generate->add_option("--out", gen_out, "Output CSV")->required();
  add_threads(generate);

  // train
  DataOpts train_data;
  GrowOpts train_grow;
  SolverOpts train_solver;
  std::string train_out;
  bool train_dump = false;
  auto* train = app.add_subcommand("train", "Grow a tree and save it as JSON");
  add_data_opts(train, train_data);
  add_grow_opts(train, train_grow);
  add_solver_opts(train, train_solver);
  train->add_option("--out", train_out, "Model JSON")->required();
  train->add_flag("--dump", train_dump, "Print the tree");
  add_threads(train);

  // protocol
  DataOpts proto_data;
  GrowOpts proto_grow;
  SolverOpts proto_solver;
  SplitSpecification proto_spec;
  std::string proto_out, proto_csv;
  auto* protocol = app.add_subcommand("protocol", "Split 50/25/25, grow the maximal tree, prune, select on validation");
  add_data_opts(protocol, proto_data);
  add_grow_opts(protocol, proto_grow);
  add_solver_opts(protocol, proto_solver);
  protocol->add_option("--train-fraction", proto_spec.train, "Training fraction");
  protocol->add_option("--validation-fraction", proto_spec.validation, "Validation fraction");
  protocol->add_option("--test-fraction", proto_spec.test, "Test fraction");
  protocol->add_option("--seed", proto_spec.seed, "Partition seed");
  protocol->add_option("--out", proto_out, "Report JSON");
  protocol->add_option("--csv", proto_csv, "Report CSV");
  add_threads(protocol);

  // prune
  std::string prune_model, prune_validation, prune_test, prune_out, prune_save;
  auto* prune = app.add_subcommand("prune", "Cost-complexity ladder of a saved model, selected on a validation CSV");
  prune->add_option("--model", prune_model, "Model JSON")->required();
  prune->add_option("--validation", prune_validation, "Validation CSV")->required();
  prune->add_option("--test", prune_test, "Test CSV (reported only)");
  prune->add_option("--out", prune_out, "Selection report JSON");
  prune->add_option("--save", prune_save, "Write the selected subtree as a model JSON");
  add_threads(prune);

  // trace
  DataOpts trace_data;
  SolverOpts trace_solver;
  std::string trace_column, trace_format = "csv", trace_out = "-";
  auto* trace = app.add_subcommand("trace", "Dinkelbach iterations for one categorical column at the root");
  add_data_opts(trace, trace_data);
  add_solver_opts(trace, trace_solver);
  trace->add_option("--column", trace_column, "Categorical column")->required();
  trace->add_option("--format", trace_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  trace->add_option("--out", trace_out, "Output file ('-' for stdout)");
  add_threads(trace);

  // compare
  DataOpts cmp_data;
  SolverOpts cmp_solver;
  std::string cmp_column, cmp_out;
  auto* compare = app.add_subcommand("compare", "QUBO, exhaustive and sorted-means partitions of one column");
  add_data_opts(compare, cmp_data);
  add_solver_opts(compare, cmp_solver);
  compare->add_option("--column", cmp_column, "Categorical column")->required();
  compare->add_option("--out", cmp_out, "Result CSV (wall times are printed only)");
  add_threads(compare);

  // predict
  std::string pred_model, pred_data, pred_out = "-", pred_routing;
  auto* predict_cmd = app.add_subcommand("predict", "Predict every row of a CSV");
  predict_cmd->add_option("--model", pred_model, "Model JSON")->required();
  predict_cmd->add_option("--data", pred_data, "Input CSV")->required();
  predict_cmd->add_option("--out", pred_out, "Predictions CSV ('-' for stdout)");
  predict_cmd->add_option("--routing", pred_routing, "Override the model's routing");
  add_threads(predict_cmd);

  // eval
  std::string eval_model, eval_data, eval_baseline, eval_out;
  auto* eval = app.add_subcommand("eval", "MSE of a model, optionally relative to a baseline model");
  eval->add_option("--model", eval_model, "Model JSON")->required();
  eval->add_option("--data", eval_data, "Input CSV")->required();
  eval->add_option("--baseline", eval_baseline, "Baseline model JSON");
  eval->add_option("--out", eval_out, "Report JSON");
  add_threads(eval);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // --help exits 0
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  std::cerr << "# " << cmd->get_name() << " resolved config\n" << cmd->config_to_str(true, false);

  try {
    if (threads > 0) set_thread_count(threads);

    if (cmd == generate) {
      if (gen_n == 0) throw Error("--n must be positive");
      const Dataset d = gen_kind == "df" ? generate_df(gen_n, gen_seed) : generate_datagen(gen_n, gen_seed);
      write_csv(d, gen_out);
      std::cout << "wrote " << d.rows() << " rows to " << gen_out << '\n';
    } else if (cmd == train) {
      const Dataset d = load_data(train_data);
      const GrowConfig cfg = grow_config(train, train_grow, train_solver, false);
      const RegressionTree tree = grow(d, cfg);
      save_tree(tree, train_out);
      std::cout << summary_line(tree, evaluate_mse(tree, d)) << '\n';
      if (train_dump) std::cout << format_tree(tree);
    } else if (cmd == protocol) {
      const Dataset d = load_data(proto_data);
      const GrowConfig cfg = grow_config(protocol, proto_grow, proto_solver, true);
      const ProtocolReport report = evaluate_protocol(d, proto_spec, cfg);
      std::cout << format_protocol(report);
      if (!proto_out.empty()) emit(proto_out, protocol_to_json(report));
      if (!proto_csv.empty()) {
        std::ostringstream os;
        write_protocol_csv(report, os);
        emit(proto_csv, os.str());
      }
    } else if (cmd == prune) {
      const RegressionTree model = load_tree(prune_model);
      const Dataset val = load_for_model(model, prune_validation, true);
      std::optional<Dataset> test;
      if (!prune_test.empty()) test = load_for_model(model, prune_test, true);
      const PruneSequence seq = prune_sequence(model, model.n_train);
      const SelectionReport sel = select_subtree(seq, val, test ? &*test : nullptr);
      std::cout << std::setw(6) << "step" << std::setw(15) << "alpha" << std::setw(8) << "leaves" << std::setw(15)
                << "train_mse" << std::setw(15) << "validation_mse" << '\n';
      std::cout << std::scientific << std::setprecision(6);
      for (std::size_t m = 0; m < sel.steps.size(); ++m) {
        const auto& s = sel.steps[m];
        std::cout << std::setw(6) << m << std::setw(15) << s.alpha << std::setw(8) << s.leaves << std::setw(15)
                  << s.train_mse << std::setw(15) << s.validation_mse << (m == sel.chosen ? "  *" : "") << '\n';
      }
      std::cout << std::defaultfloat;
      if (!prune_out.empty()) emit(prune_out, selection_to_json(sel));
      if (!prune_save.empty()) save_tree(seq.tree(sel.chosen), prune_save);
    } else if (cmd == trace) {
      const Dataset d = load_data(trace_data);
      const std::size_t column = categorical_column(d, trace_column);
      const CategoricalNode node = root_node(d, column);
      const DinkelbachResult r =
          dinkelbach_split(node, solver_config(trace_solver), dinkelbach_config(trace_solver));
      std::string text;
      if (trace_format == "csv") {
        std::ostringstream os;
        write_trace_csv(r.trace, os);
        text = os.str();
      } else {
        ordered_json rows = ordered_json::array();
        for (const auto& row : r.trace.rows)
          rows.push_back({{"iteration", row.index},
                          {"lambda_initial", row.lambda_in},
                          {"binary_vector", row.q.to_string()},
                          {"f_value", row.f_value},
                          {"score", row.ratio},
                          {"lambda_final", row.lambda_out}});
        const auto [left, right] = sides(d.column(column).schema, node, r.q);
        ordered_json doc = {{"column", trace_column},
                            {"categories", node.size()},
                            {"init", to_string(dinkelbach_config(trace_solver).init)},
                            {"converged", r.converged},
                            {"lambda_star", r.lambda_star},
                            {"solver", to_string(r.method)},
                            {"left", left},
                            {"right", right},
                            {"iterations", std::move(rows)}};
        text = doc.dump(2) + "\n";
      }
      emit(trace_out, text);
      if (trace_out != "-" || trace_format == "csv") {
        const auto [left, right] = sides(d.column(column).schema, node, r.q);
        std::cerr << (r.converged ? "converged" : "not converged") << " after " << r.trace.rows.size()
                  << " iterations, lambda* " << format_double(r.lambda_star) << ", " << left << " | " << right
                  << '\n';
      }
    } else if (cmd == compare) {
      const Dataset d = load_data(cmp_data);
      const std::size_t column = categorical_column(d, cmp_column);
      const CategoricalNode node = root_node(d, column);
      const auto& schema = d.column(column).schema;
      struct Row {
        std::string method, left, right, detail;
        double cost;
        std::size_t iterations;
        double ms;
      };
      std::vector<Row> rows;
      auto timed = [](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto result = fn();
        const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
        return std::pair{std::move(result), dt.count()};
      };
      {
        auto [c, ms] = timed([&] {
          return choose_partition_qubo(node, solver_config(cmp_solver), dinkelbach_config(cmp_solver));
        });
        const auto [l, r] = sides(schema, node, c.q);
        rows.push_back({"qubo", l, r,
                        std::string(to_string(c.dinkelbach->method)) +
                            (c.dinkelbach->converged ? "" : " (not converged)"),
                        c.cost, c.dinkelbach->trace.rows.size(), ms});
      }
      if (node.size() <= 22) {
        auto [c, ms] = timed([&] { return choose_partition_exhaustive(node); });
        const auto [l, r] = sides(schema, node, c.q);
        rows.push_back({"exhaustive", l, r, "enumeration", c.cost, 0, ms});
      } else {
        std::cout << "exhaustive skipped: " << node.size() << " categories exceed the enumeration limit of 22\n";
      }
      {
        auto [c, ms] = timed([&] { return choose_partition_greedy(node); });
        const auto [l, r] = sides(schema, node, c.q);
        rows.push_back({"greedy", l, r, "sorted means", c.cost, 0, ms});
      }
      std::cout << "column " << cmp_column << "  categories " << node.size() << "  n " << node.node.n << '\n';
      for (const auto& r : rows)
        std::cout << std::left << std::setw(11) << r.method << std::right << " cost " << format_double(r.cost)
                  << "  iterations " << r.iterations << "  " << r.detail << "  wall " << std::fixed
                  << std::setprecision(3) << r.ms << " ms" << std::defaultfloat << "\n  " << r.left << " | "
                  << r.right << '\n';
      if (!cmp_out.empty()) {
        std::ostringstream os;
        os << "method,left,right,cost,iterations,detail\n";
        for (const auto& r : rows)
          os << r.method << ",\"" << r.left << "\",\"" << r.right << "\"," << format_double(r.cost) << ','
             << r.iterations << ',' << r.detail << '\n';
        emit(cmp_out, os.str());
      }
    } else if (cmd == predict_cmd) {
      const RegressionTree model = load_tree(pred_model);
      const Dataset d = load_for_model(model, pred_data, false);
      const Routing routing = pred_routing.empty() ? model.config.routing : parse_routing(pred_routing);
      const Predictor p(model, d, routing);
      std::ostringstream os;
      os << "prediction\n";
      for (std::size_t i = 0; i < d.rows(); ++i) os << format_double(p(i)) << '\n';
      emit(pred_out, os.str());
    } else if (cmd == eval) {
      const RegressionTree model = load_tree(eval_model);
      const Dataset d = load_for_model(model, eval_data, true);
      const double mse = evaluate_mse(model, d);
      ordered_json doc = {{"rows", d.rows()}, {"mse", mse}};
      std::cout << "rows " << d.rows() << "  mse " << format_double(mse) << '\n';
      if (!eval_baseline.empty()) {
        const RegressionTree base = load_tree(eval_baseline);
        const double base_mse = evaluate_mse(base, load_for_model(base, eval_data, true));
        const double rel = base_mse > 0.0 ? 100.0 * (mse - base_mse) / base_mse : 0.0;
        doc["baseline_mse"] = base_mse;
        doc["relative_mse_percent"] = rel;
        std::cout << "baseline mse " << format_double(base_mse) << "  relative " << std::fixed
                  << std::setprecision(3) << rel << "%" << std::defaultfloat << '\n';
      }
      if (!eval_out.empty()) emit(eval_out, doc.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
