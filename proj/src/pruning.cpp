#include "cartqubo/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "cartqubo/error.hpp"
#include "cartqubo/kernels.hpp"
#include "json.hpp"

namespace cartqubo {

namespace {

constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

/// Relative slack for treating two g(t) values as the same weakest link.
constexpr double kTieSlack = 1e-10;

struct LinkValues {
  std::vector<std::optional<double>> g;
  std::size_t leaves = 0;
  double risk = 0.0;
};

/// g(t) for the active internal nodes given per-node collapse flags.
LinkValues compute_links(const RegressionTree& tree, const std::vector<bool>& collapsed, double n_train) {
  const std::size_t count = tree.nodes.size();
  std::vector<bool> active(count, false);
  active[0] = true;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& node = tree.nodes[i];
    if (!active[i] || node.is_leaf() || collapsed[i]) continue;
    active[static_cast<std::size_t>(node.left)] = true;
    active[static_cast<std::size_t>(node.right)] = true;
  }
  std::vector<std::size_t> leaves(count, 0);
  std::vector<double> sub_risk(count, 0.0);
  LinkValues out;
  out.g.assign(count, std::nullopt);
  // Children follow their parent in preorder, so a reverse sweep is bottom-up.
  for (std::size_t i = count; i-- > 0;) {
    if (!active[i]) continue;
    const auto& node = tree.nodes[i];
    const double own = node.sse / n_train;
    if (node.is_leaf() || collapsed[i]) {
      leaves[i] = 1;
      sub_risk[i] = own;
      continue;
    }
    const auto l = static_cast<std::size_t>(node.left), r = static_cast<std::size_t>(node.right);
    leaves[i] = leaves[l] + leaves[r];
    sub_risk[i] = sub_risk[l] + sub_risk[r];
    out.g[i] = (own - sub_risk[i]) / static_cast<double>(leaves[i] - 1);
  }
  out.leaves = leaves[0];
  out.risk = sub_risk[0];
  return out;
}

}  // namespace

PruneSequence::PruneSequence(RegressionTree full, std::vector<PruneStep> steps, std::vector<std::size_t> collapse_step)
    : full_(std::move(full)), steps_(std::move(steps)), collapse_step_(std::move(collapse_step)) {}

RegressionTree PruneSequence::tree(std::size_t m) const {
  if (m >= steps_.size()) throw Error("prune step out of range");
  const TreeNode* base = full_.nodes.data();
  return collapse_nodes(full_, [&](const TreeNode& node) {
    return collapsed_at(static_cast<std::size_t>(&node - base), m);
  });
}

double PruneSequence::mse(std::size_t m, const Dataset& data) const {
  if (data.rows() == 0) throw Error("mse: empty data");
  Predictor p(full_, data);
  const TreeNode* base = full_.nodes.data();
  auto stop = [&](const TreeNode& node) { return collapsed_at(static_cast<std::size_t>(&node - base), m); };
  const auto y = data.response();
  std::vector<double> err(data.rows());
  for (std::size_t i = 0; i < err.size(); ++i) err[i] = y[i] - full_.nodes[p.leaf_index(i, stop)].prediction;
  return kernels::moments(err).sum_sq / static_cast<double>(err.size());
}

std::vector<double> PruneSequence::mse_per_step(const Dataset& data) const {
  if (data.rows() == 0) throw Error("mse: empty data");
  const std::size_t count = full_.nodes.size();
  // err[t]: squared error of the rows reaching node t when t predicts.
  std::vector<double> err(count, 0.0);
  std::vector<std::size_t> parent(count, count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& node = full_.nodes[i];
    if (node.is_leaf()) continue;
    parent[static_cast<std::size_t>(node.left)] = i;
    parent[static_cast<std::size_t>(node.right)] = i;
  }
  Predictor p(full_, data);
  const auto y = data.response();
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t t = p.leaf_index(r); t != count; t = parent[t]) {
      const double e = y[r] - full_.nodes[t].prediction;
      err[t] += e * e;
    }
  }
  // Preorder subtrees are contiguous: [i, end[i]).
  std::vector<std::size_t> end(count);
  for (std::size_t i = count; i-- > 0;) {
    const auto& node = full_.nodes[i];
    end[i] = node.is_leaf() ? i + 1 : std::max(end[static_cast<std::size_t>(node.left)],
                                               end[static_cast<std::size_t>(node.right)]);
  }
  // Leaves never collapse; give them step 0 so one comparison decides.
  std::vector<std::size_t> stop(collapse_step_);
  for (std::size_t i = 0; i < count; ++i)
    if (full_.nodes[i].is_leaf()) stop[i] = 0;
  std::vector<double> out(steps_.size());
  const double n = static_cast<double>(data.rows());
  for (std::size_t m = 0; m < steps_.size(); ++m) {
    double sse = 0.0;
    for (std::size_t i = 0; i < count;) {
      if (stop[i] <= m) {
        sse += err[i];
        i = end[i];
      } else {
        ++i;
      }
    }
    out[m] = sse / n;
  }
  return out;
}

PruneSequence prune_sequence(const RegressionTree& tree, std::size_t n_train) {
  if (tree.nodes.empty()) throw Error("prune_sequence: empty tree");
  if (n_train == 0) throw Error("prune_sequence: n_train must be positive");
  const double nt = static_cast<double>(n_train);
  const std::size_t count = tree.nodes.size();
  std::vector<bool> collapsed(count, false);
  std::vector<std::size_t> collapse_step(count, kNever);
  std::vector<PruneStep> steps;

  // Incremental link state: a collapse only changes its ancestors.
  std::vector<std::size_t> parent(count, kNever), end(count), leaves(count, 1);
  std::vector<double> risk(count), g(count, 0.0);
  // g of each live internal node, +inf for everything else; kept compact so
  // the per-step scans stay in cache.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> key(count, inf);
  for (std::size_t i = count; i-- > 0;) {
    const auto& node = tree.nodes[i];
    risk[i] = node.sse / nt;
    if (node.is_leaf()) {
      end[i] = i + 1;
      continue;
    }
    const auto l = static_cast<std::size_t>(node.left), r = static_cast<std::size_t>(node.right);
    parent[l] = parent[r] = i;
    end[i] = std::max(end[l], end[r]);
  }
  auto refresh = [&](std::size_t i) {
    const auto& node = tree.nodes[i];
    if (node.is_leaf() || collapsed[i]) {
      leaves[i] = 1;
      risk[i] = node.sse / nt;
      return;
    }
    const auto l = static_cast<std::size_t>(node.left), r = static_cast<std::size_t>(node.right);
    leaves[i] = leaves[l] + leaves[r];
    risk[i] = risk[l] + risk[r];
    g[i] = (node.sse / nt - risk[i]) / static_cast<double>(leaves[i] - 1);
    if (key[i] != inf) key[i] = g[i];
  };
  for (std::size_t i = count; i-- > 0;) refresh(i);
  for (std::size_t i = 0; i < count; ++i)
    if (!tree.nodes[i].is_leaf()) key[i] = g[i];

  // Collapses every active internal node whose g is within slack of the
  // current minimum, repeating while the recomputed minimum stays there.
  auto collapse_weakest = [&](std::size_t step, double alpha, PruneStep& rec) {
    std::vector<std::size_t> hit;
    for (;;) {
      hit.clear();
      const double cut = alpha + kTieSlack * std::fabs(alpha) + 1e-300;
      for (std::size_t i = 0; i < count; ++i)
        if (key[i] <= cut) hit.push_back(i);
      if (hit.empty()) return;
      for (auto i : hit) {
        collapsed[i] = true;
        collapse_step[i] = step;
        rec.collapsed.push_back(i);
        for (std::size_t j = i; j < end[i]; ++j) key[j] = inf;
      }
      for (auto i : hit)
        for (std::size_t a = i; a != kNever; a = parent[a]) refresh(a);
      if (collapsed[0]) return;
    }
  };

  PruneStep first;
  first.alpha = 0.0;
  collapse_weakest(0, 0.0, first);
  first.leaves = leaves[0];
  first.train_risk = risk[0];
  steps.push_back(std::move(first));

  while (!collapsed[0] && !tree.nodes[0].is_leaf()) {
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) alpha = std::min(alpha, key[i]);
    PruneStep rec;
    rec.alpha = alpha;
    collapse_weakest(steps.size(), alpha, rec);
    rec.leaves = leaves[0];
    rec.train_risk = risk[0];
    std::sort(rec.collapsed.begin(), rec.collapsed.end());
    steps.push_back(std::move(rec));
  }
  // Descendants of a collapsed node disappear with it.
  for (std::size_t i = 0; i < count; ++i) {
    const auto& node = tree.nodes[i];
    if (node.is_leaf()) continue;
    for (auto c : {static_cast<std::size_t>(node.left), static_cast<std::size_t>(node.right)})
      collapse_step[c] = std::min(collapse_step[c], collapse_step[i]);
  }
  return PruneSequence(tree, std::move(steps), std::move(collapse_step));
}

std::vector<std::optional<double>> weakest_link_values(const PruneSequence& seq, std::size_t m) {
  const auto& tree = seq.full();
  std::vector<bool> collapsed(tree.nodes.size());
  for (std::size_t i = 0; i < collapsed.size(); ++i) collapsed[i] = seq.collapsed_at(i, m);
  return compute_links(tree, collapsed, static_cast<double>(tree.n_train)).g;
}

SelectionReport select_subtree(const PruneSequence& seq, const Dataset& validation, const Dataset* test) {
  if (seq.size() == 0) throw Error("select_subtree: no prune steps");
  if (validation.rows() == 0) throw Error("select_subtree: empty validation set");
  SelectionReport out;
  const auto val = seq.mse_per_step(validation);
  std::vector<double> tst;
  if (test && test->rows() > 0) tst = seq.mse_per_step(*test);
  for (std::size_t m = 0; m < seq.size(); ++m) {
    StepScore s;
    s.alpha = seq.steps()[m].alpha;
    s.leaves = seq.steps()[m].leaves;
    s.train_mse = seq.steps()[m].train_risk;
    s.validation_mse = val[m];
    if (!tst.empty()) s.test_mse = tst[m];
    out.steps.push_back(s);
  }
  for (std::size_t m = 1; m < out.steps.size(); ++m) {
    const auto& cur = out.steps[out.chosen];
    const auto& cand = out.steps[m];
    if (cand.validation_mse < cur.validation_mse ||
        (cand.validation_mse == cur.validation_mse && cand.leaves < cur.leaves))
      out.chosen = m;
  }
  return out;
}

ProtocolReport evaluate_protocol(const Dataset& data, const SplitSpecification& spec, const GrowConfig& cfg) {
  const Partition parts = partition(data, spec);
  if (parts.validation_rows.empty() || parts.test_rows.empty())
    throw Error("evaluate_protocol: validation and test sets must be non-empty");
  const RegressionTree full = grow(parts.train, cfg);
  const PruneSequence seq = prune_sequence(full, full.n_train);
  const SelectionReport sel = select_subtree(seq, parts.validation, &parts.test);

  ProtocolReport out;
  out.method = std::string(to_string(cfg.method));
  out.n_train = parts.train_rows.size();
  out.n_validation = parts.validation_rows.size();
  out.n_test = parts.test_rows.size();
  out.selection = sel;

  auto row_for = [&](const std::string& label, std::size_t m) {
    ProtocolRow r;
    r.label = label;
    r.leaves = sel.steps[m].leaves;
    r.depth = seq.tree(m).depth();
    r.alpha = sel.steps[m].alpha;
    r.train_mse = sel.steps[m].train_mse;
    r.validation_mse = sel.steps[m].validation_mse;
    r.test_mse = *sel.steps[m].test_mse;
    return r;
  };
  std::size_t test_best = 0;
  for (std::size_t m = 1; m < sel.steps.size(); ++m) {
    const auto& cur = sel.steps[test_best];
    const auto& cand = sel.steps[m];
    if (*cand.test_mse < *cur.test_mse || (*cand.test_mse == *cur.test_mse && cand.leaves < cur.leaves))
      test_best = m;
  }
  out.rows.push_back(row_for("Root Tree", seq.size() - 1));
  out.rows.push_back(row_for("Validation Best Tree", sel.chosen));
  out.rows.push_back(row_for("Test Best Tree (diagnostic)", test_best));
  ProtocolRow max_row;
  max_row.label = "Max Tree";
  max_row.leaves = full.leaf_count();
  max_row.depth = full.depth();
  max_row.train_mse = evaluate_mse(full, parts.train);
  max_row.validation_mse = evaluate_mse(full, parts.validation);
  max_row.test_mse = evaluate_mse(full, parts.test);
  out.rows.push_back(max_row);
  return out;
}

namespace {

using nlohmann::ordered_json;

ordered_json selection_json(const SelectionReport& report) {
  ordered_json steps = ordered_json::array();
  for (const auto& s : report.steps) {
    ordered_json j = {{"alpha", s.alpha},
                      {"leaves", s.leaves},
                      {"train_mse", s.train_mse},
                      {"validation_mse", s.validation_mse}};
    j["test_mse"] = s.test_mse ? ordered_json(*s.test_mse) : ordered_json(nullptr);
    steps.push_back(std::move(j));
  }
  return {{"chosen", report.chosen}, {"steps", std::move(steps)}};
}

}  // namespace

std::string selection_to_json(const SelectionReport& report) { return selection_json(report).dump(2) + "\n"; }

std::string protocol_to_json(const ProtocolReport& report) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) {
    ordered_json j = {{"tree", r.label}, {"method", report.method}, {"leaves", r.leaves}, {"depth", r.depth}};
    j["alpha"] = r.alpha ? ordered_json(*r.alpha) : ordered_json(nullptr);
    j["train_mse"] = r.train_mse;
    j["validation_mse"] = r.validation_mse;
    j["test_mse"] = r.test_mse;
    rows.push_back(std::move(j));
  }
  ordered_json doc = {{"method", report.method},
                      {"n_train", report.n_train},
                      {"n_validation", report.n_validation},
                      {"n_test", report.n_test},
                      {"rows", std::move(rows)},
                      {"selection", selection_json(report.selection)}};
  return doc.dump(2) + "\n";
}

void write_protocol_csv(const ProtocolReport& report, std::ostream& out) {
  out << "tree,method,leaves,depth,alpha,train_mse,validation_mse,test_mse\n";
  for (const auto& r : report.rows)
    out << '"' << r.label << "\"," << report.method << ',' << r.leaves << ',' << r.depth << ','
        << (r.alpha ? format_double(*r.alpha) : std::string()) << ',' << format_double(r.train_mse) << ','
        << format_double(r.validation_mse) << ',' << format_double(r.test_mse) << '\n';
}

std::string format_protocol(const ProtocolReport& report) {
  std::ostringstream os;
  os << "method " << report.method << "  n_train " << report.n_train << "  n_validation " << report.n_validation
     << "  n_test " << report.n_test << '\n';
  os << std::left << std::setw(30) << "Tree" << std::right << std::setw(8) << "Leaves" << std::setw(7) << "Depth"
     << std::setw(16) << "Train MSE" << std::setw(16) << "Validation MSE" << std::setw(16) << "Test MSE" << '\n';
  for (const auto& r : report.rows) {
    os << std::left << std::setw(30) << r.label << std::right << std::setw(8) << r.leaves << std::setw(7) << r.depth
       << std::scientific << std::setprecision(7) << std::setw(16) << r.train_mse << std::setw(16)
       << r.validation_mse << std::setw(16) << r.test_mse << std::defaultfloat << '\n';
  }
  os << "The test-best row selects on the test set and is not a usable model-selection rule.\n";
  return os.str();
}

}  // namespace cartqubo
