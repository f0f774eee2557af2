#include "cartqubo/dinkelbach.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "cartqubo/dataset.hpp"
#include "cartqubo/error.hpp"

namespace cartqubo {

std::string_view to_string(LambdaInit init) {
  switch (init) {
    case LambdaInit::upper_bound: return "upper_bound";
    case LambdaInit::zero: return "zero";
    case LambdaInit::custom: return "custom";
  }
  return "upper_bound";
}

LambdaInit parse_lambda_init(std::string_view text) {
  if (text == "upper_bound" || text == "upper") return LambdaInit::upper_bound;
  if (text == "zero") return LambdaInit::zero;
  if (text == "custom") return LambdaInit::custom;
  throw Error("unknown lambda initialisation '" + std::string(text) + "'");
}

double lambda_upper_bound(const NodeStats& node) {
  if (node.n < 1.0) throw Error("lambda_upper_bound: empty node");
  return node.n * node.variance();
}

DinkelbachResult dinkelbach_split(const CategoricalNode& node, const SolverConfig& solver,
                                  const DinkelbachConfig& cfg) {
  const std::size_t m = node.size();
  if (m < 2) throw Error("dinkelbach_split: need at least 2 categories");
  if (node.node.n < 2.0) throw Error("dinkelbach_split: need at least 2 observations");
  if (!(cfg.rel_tolerance > 0.0)) throw Error("dinkelbach_split: tolerance must be positive");
  if (cfg.max_iterations < 1) throw Error("dinkelbach_split: max_iterations must be at least 1");

  const double upper = lambda_upper_bound(node.node);
  DinkelbachResult out;
  out.method = m <= solver.exact_threshold ? SolveMethod::exhaustive : SolveMethod::annealing;
  if (upper <= 0.0) {
    out.q = BinaryAssignment(m);
    out.q.set(0, true);
    out.lambda_star = 0.0;
    out.converged = false;
    return out;
  }

  double lambda = 0.0;
  switch (cfg.init) {
    case LambdaInit::upper_bound: lambda = upper; break;
    case LambdaInit::zero: lambda = 0.0; break;
    case LambdaInit::custom:
      if (!(cfg.custom_lambda >= 0.0)) throw Error("dinkelbach_split: custom lambda must be non-negative");
      lambda = cfg.custom_lambda;
      break;
  }

  BinaryAssignment best_q;
  double best_ratio = 0.0;
  for (std::size_t k = 1; k <= cfg.max_iterations; ++k) {
    const QuboProblem problem = build_qubo(node, lambda);
    const SolveOutcome sol = solve(problem, solver);
    out.method = sol.method;
    const FractionalParts parts = eval_fractional(node, sol.q);
    const double ratio = parts.ratio();
    if (best_q.size() == 0 || ratio < best_ratio) {
      best_q = sol.q;
      best_ratio = ratio;
    }

    IterationRecord rec;
    rec.index = k;
    rec.lambda_in = lambda;
    const double tol = cfg.rel_tolerance * std::max(1.0, lambda * parts.denominator);
    bool done = false;
    if (std::fabs(sol.objective) <= tol) {
      rec.q = sol.q;
      rec.f_value = sol.objective;
      rec.ratio = ratio;
      rec.lambda_out = ratio;
      done = true;
    } else if (sol.objective > 0.0) {
      rec.q = BinaryAssignment(m);
      rec.f_value = 0.0;
      rec.ratio = upper;
      rec.lambda_out = upper;
    } else {
      rec.q = sol.q;
      rec.f_value = sol.objective;
      rec.ratio = ratio;
      rec.lambda_out = ratio;
      done = std::fabs(rec.lambda_out - lambda) <= cfg.rel_tolerance * std::max(1.0, std::fabs(lambda));
    }
    out.trace.rows.push_back(rec);
    if (done) {
      out.q = sol.q;
      out.lambda_star = ratio;
      out.converged = true;
      return out;
    }
    if (rec.lambda_out == lambda) break;  // trivial minimum at the upper bound: no progress possible
    lambda = rec.lambda_out;
  }
  out.q = best_q;
  out.lambda_star = best_ratio;
  out.converged = false;
  return out;
}

void write_trace_csv(const IterationTrace& trace, std::ostream& out) {
  out << "iteration,lambda_initial,binary_vector,score,lambda_final\n";
  for (const auto& r : trace.rows)
    out << r.index << ',' << format_double(r.lambda_in) << ",\"" << r.q.to_string() << "\","
        << format_double(r.ratio) << ',' << format_double(r.lambda_out) << '\n';
}

}  // namespace cartqubo
