#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cartqubo/dataset.hpp"
#include "cartqubo/tree.hpp"

namespace cartqubo {

struct PruneStep {
  double alpha = 0.0;
  std::size_t leaves = 0;
  /// Sum of leaf SSE over n_train.
  double train_risk = 0.0;
  /// Node indices (into the full tree) that became leaves at this step.
  std::vector<std::size_t> collapsed;
};

/// Weakest-link pruning ladder over a grown tree. Step 0 is the full tree
/// (alpha = 0), the last step is the root alone. All nodes attaining the
/// minimal g(t) = (R(t) - R(A^t)) / (|A^t| - 1) collapse together, so alpha
/// strictly increases and the subtrees are nested.
class PruneSequence {
public:
  PruneSequence(RegressionTree full, std::vector<PruneStep> steps, std::vector<std::size_t> collapse_step);

  const RegressionTree& full() const { return full_; }
  const std::vector<PruneStep>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }

  /// True when node `index` of the full tree is a leaf (or removed) at step m.
  bool collapsed_at(std::size_t index, std::size_t m) const { return collapse_step_[index] <= m; }
  /// Materialised subtree for step m.
  RegressionTree tree(std::size_t m) const;
  double mse(std::size_t m, const Dataset& data) const;
  /// mse(m, data) for every step, routing each row once.
  std::vector<double> mse_per_step(const Dataset& data) const;

private:
  RegressionTree full_;
  std::vector<PruneStep> steps_;
  std::vector<std::size_t> collapse_step_;
};

/// Risks are normalised by n_train (the size of the growing sample).
PruneSequence prune_sequence(const RegressionTree& tree, std::size_t n_train);

/// g(t) for every internal node of the subtree at step m (nullopt elsewhere).
std::vector<std::optional<double>> weakest_link_values(const PruneSequence& seq, std::size_t m);

struct StepScore {
  double alpha = 0.0;
  std::size_t leaves = 0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  std::optional<double> test_mse;
};

struct SelectionReport {
  std::size_t chosen = 0;
  std::vector<StepScore> steps;
};

/// Picks the step with the smallest validation MSE, ties to fewer leaves.
SelectionReport select_subtree(const PruneSequence& seq, const Dataset& validation,
                               const Dataset* test = nullptr);

struct ProtocolRow {
  std::string label;
  std::size_t leaves = 0;
  std::size_t depth = 0;
  std::optional<double> alpha;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  double test_mse = 0.0;
};

struct ProtocolReport {
  std::string method;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  /// Root tree, validation-best tree, test-best tree (diagnostic only: it
  /// peeks at the test set), maximal tree.
  std::vector<ProtocolRow> rows;
  SelectionReport selection;
};

/// partition -> grow -> prune ladder -> validation selection -> test scores.
ProtocolReport evaluate_protocol(const Dataset& data, const SplitSpecification& spec, const GrowConfig& cfg);

std::string protocol_to_json(const ProtocolReport& report);
void write_protocol_csv(const ProtocolReport& report, std::ostream& out);
std::string format_protocol(const ProtocolReport& report);
std::string selection_to_json(const SelectionReport& report);

}  // namespace cartqubo
