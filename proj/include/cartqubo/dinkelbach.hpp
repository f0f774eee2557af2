#pragma once

#include <iosfwd>
#include <vector>

#include "cartqubo/qubo.hpp"
#include "cartqubo/solvers.hpp"

namespace cartqubo {

enum class LambdaInit { upper_bound, zero, custom };

std::string_view to_string(LambdaInit init);
LambdaInit parse_lambda_init(std::string_view text);

struct DinkelbachConfig {
  LambdaInit init = LambdaInit::upper_bound;
  double custom_lambda = 0.0;
  /// Stop when |F(lambda_k, q_k)| <= rel_tolerance * max(1, lambda_k * d(q_k)).
  double rel_tolerance = 1e-9;
  std::size_t max_iterations = 50;
};

struct IterationRecord {
  std::size_t index = 0;
  double lambda_in = 0.0;
  /// All zeros when the parametric minimum was attained only by a trivial vector.
  BinaryAssignment q;
  double f_value = 0.0;
  /// R(q) = N_L Var_L + N_R Var_R; N_S Var_S for a trivial q.
  double ratio = 0.0;
  double lambda_out = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> rows;
};

struct DinkelbachResult {
  BinaryAssignment q;
  double lambda_star = 0.0;
  bool converged = false;
  SolveMethod method = SolveMethod::exhaustive;
  IterationTrace trace;
};

/// N_S * Var_S, an upper bound on the optimal split cost.
double lambda_upper_bound(const NodeStats& node);

/// Minimises R(q) = n(q)/d(q) over non-trivial q through the sequence of
/// parametric QUBOs min_q n(q) - lambda_k d(q), lambda_{k+1} = R(q_k).
///
/// The solver only returns non-trivial vectors. When its best objective is
/// strictly positive the unrestricted minimum is a trivial vector (F = 0), so
/// that iteration records the all-zeros vector and restarts from
/// lambda = N_S Var_S. Convergence requires |F| within tolerance at a
/// non-trivial vector, or a repeated lambda. A node with zero variance has no
/// useful split and returns unconverged with lambda* = 0.
DinkelbachResult dinkelbach_split(const CategoricalNode& node, const SolverConfig& solver,
                                  const DinkelbachConfig& cfg);

/// CSV columns: iteration,lambda_initial,binary_vector,score,lambda_final
void write_trace_csv(const IterationTrace& trace, std::ostream& out);

}  // namespace cartqubo
