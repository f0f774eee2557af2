#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cartqubo/dataset.hpp"
#include "cartqubo/dinkelbach.hpp"
#include "cartqubo/qubo.hpp"
#include "cartqubo/solvers.hpp"

namespace cartqubo {

enum class SplitKind { subset, threshold };

/// Subset rules send `left_categories` left. `right_categories` records the
/// other categories observed at the node, which majority routing needs.
/// Threshold rules send x < threshold left.
struct SplitRule {
  std::string variable;
  std::size_t column = 0;
  SplitKind kind = SplitKind::threshold;
  std::vector<std::int32_t> left_categories;
  std::vector<std::int32_t> right_categories;
  double threshold = 0.0;

  bool in_left(std::int32_t code) const;
  bool in_right(std::int32_t code) const;
};

struct SplitCandidate {
  SplitRule rule;
  /// Child SSE sum N_L Var_L + N_R Var_R.
  double cost = 0.0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  std::optional<IterationTrace> trace;
  bool converged = true;
};

enum class CategoricalMethod { qubo, exhaustive, greedy };

std::string_view to_string(CategoricalMethod method);
CategoricalMethod parse_categorical_method(std::string_view text);

/// Partition of a node's categories and its cost.
struct CategoricalChoice {
  BinaryAssignment q;
  double cost = 0.0;
  std::optional<DinkelbachResult> dinkelbach;
};

/// Flips q if needed so the left side holds the category with the smallest
/// mean response (lowest index among equal means).
BinaryAssignment canonical_orientation(const CategoricalNode& node, BinaryAssignment q);

CategoricalChoice choose_partition_qubo(const CategoricalNode& node, const SolverConfig& solver,
                                        const DinkelbachConfig& dk);
/// Direct minimisation of R(q) over all 2^(M-1) - 1 partitions.
CategoricalChoice choose_partition_exhaustive(const CategoricalNode& node, std::size_t max_size = 22);
/// Sorts categories by mean and scans the M - 1 contiguous prefixes.
CategoricalChoice choose_partition_greedy(const CategoricalNode& node);

SplitCandidate best_categorical_split_qubo(const Dataset& data, std::span<const RowIndex> rows, std::size_t column,
                                           const SolverConfig& solver, const DinkelbachConfig& dk);
SplitCandidate best_categorical_split_exhaustive(const Dataset& data, std::span<const RowIndex> rows,
                                                 std::size_t column);
SplitCandidate best_categorical_split_greedy(const Dataset& data, std::span<const RowIndex> rows, std::size_t column);

/// Midpoint thresholds between consecutive distinct values, both children
/// holding at least `min_bucket` rows; ties go to the smallest threshold.
/// Throws when the column is constant at the node; returns nullopt when no
/// threshold satisfies min_bucket.
std::optional<SplitCandidate> best_numeric_split(const Dataset& data, std::span<const RowIndex> rows,
                                                 std::size_t column, std::size_t min_bucket = 1);

struct SplitConfig {
  CategoricalMethod method = CategoricalMethod::qubo;
  SolverConfig solver;
  DinkelbachConfig dinkelbach;
  std::size_t min_bucket = 1;
  /// Called with every Dinkelbach run (possibly from worker threads).
  std::function<void(const std::string& variable, const DinkelbachResult&)> observer;
};

/// Best split over all columns; ties go to the earlier column. nullopt when no
/// column admits a split with both children >= min_bucket.
std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const RowIndex> rows,
                                         const SplitConfig& cfg);

}  // namespace cartqubo
