#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "cartqubo/qubo.hpp"

namespace cartqubo {

enum class SolveMethod { exhaustive, annealing };

std::string_view to_string(SolveMethod method);

/// Minimiser of q^T H q over the non-trivial assignments.
struct SolveOutcome {
  BinaryAssignment q;
  double objective = 0.0;
  SolveMethod method = SolveMethod::exhaustive;
  std::uint64_t evaluations = 0;
};

struct AnnealConfig {
  std::uint64_t seed = 1;
  /// Sweeps per restart; 0 means 200 * M.
  std::size_t sweeps = 0;
  std::size_t restarts = 8;
  /// Geometric schedule endpoints. Unset means t_init = max|H| and
  /// t_final = 1e-3 * t_init.
  std::optional<double> t_init;
  std::optional<double> t_final;
};

struct SolverConfig {
  /// Problems with at most this many variables are enumerated exactly.
  std::size_t exact_threshold = 22;
  AnnealConfig anneal;
};

/// Exact minimum over all non-trivial q, walked in Gray-code order with O(M)
/// incremental updates. When H is flip-symmetric (every row sums to zero, as
/// for split QUBOs) only the 2^(M-1) - 1 vectors with q_0 = 1 are visited.
/// Ties go to the lexicographically smallest vector.
SolveOutcome solve_exhaustive(const QuboProblem& problem, std::size_t max_size = 22);

/// Single-bit-flip simulated annealing with Metropolis acceptance and a
/// geometric temperature schedule. Deterministic per (seed, H); restarts may
/// run in parallel and are reduced by (objective, lexicographic q).
SolveOutcome solve_anneal(const QuboProblem& problem, const AnnealConfig& cfg);

/// Exhaustive up to cfg.exact_threshold variables, annealing above.
SolveOutcome solve(const QuboProblem& problem, const SolverConfig& cfg);

namespace detail {
/// Gray-code walk over the non-trivial q; with `half` only those with q_0 = 1.
/// `visit` gets the lexicographic mask (see BinaryAssignment::from_mask) and
/// the incrementally maintained objective. The objective and local fields are
/// recomputed from scratch after every 64th step.
void gray_walk(const QuboProblem& problem, const std::function<void(std::uint64_t, double)>& visit,
               bool half = true);
/// Every row of H sums to zero (within rounding), so F(q) = F(1 - q).
bool flip_symmetric(const QuboProblem& problem);
}  // namespace detail

}  // namespace cartqubo
