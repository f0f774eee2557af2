#include "cartqubo/solvers.hpp"

#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "cartqubo/error.hpp"
#include "cartqubo/kernels.hpp"
#include "cartqubo/parallel.hpp"
#include "cartqubo/rng.hpp"

namespace cartqubo {

std::string_view to_string(SolveMethod method) {
  return method == SolveMethod::annealing ? "annealing" : "exhaustive";
}

namespace {

constexpr std::size_t kResyncInterval = 64;

/// Local fields f_a = sum_b H_ab q_b and the objective q^T H q.
struct FieldState {
  std::vector<double> x;  // q as 0/1 doubles
  std::vector<double> field;
  double objective = 0.0;

  void reset(const QuboProblem& p, const kernels::KernelTable& k) {
    const std::size_t m = p.size();
    field.assign(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) field[a] = k.dot(p.row(a).data(), x.data(), m);
    objective = k.dot(field.data(), x.data(), m);
  }

  double delta(const QuboProblem& p, std::size_t a) const {
    const double haa = p(a, a);
    return x[a] != 0.0 ? haa - 2.0 * field[a] : haa + 2.0 * field[a];
  }

  void flip(const QuboProblem& p, const kernels::KernelTable& k, std::size_t a, double d) {
    const double sign = x[a] != 0.0 ? -1.0 : 1.0;
    x[a] = x[a] != 0.0 ? 0.0 : 1.0;
    k.axpy(field.data(), sign, p.row(a).data(), p.size());
    objective += d;
  }
};

double tie_tolerance(const QuboProblem& p) { return 1e-13 * p.max_abs() * static_cast<double>(p.size()); }

}  // namespace

namespace detail {

void gray_walk(const QuboProblem& problem, const std::function<void(std::uint64_t, double)>& visit, bool half) {
  const std::size_t m = problem.size();
  if (m < 2) throw Error("QUBO solver needs at least 2 variables");
  if (m > 63) throw Error("exhaustive enumeration is limited to 63 variables");
  const auto& k = kernels::table(kernels::active_isa());
  const std::size_t free_bits = half ? m - 1 : m;

  FieldState st;
  st.x.assign(m, 0.0);
  if (half) st.x[0] = 1.0;
  st.reset(problem, k);
  const std::uint64_t top = std::uint64_t{1} << (m - 1);
  std::uint64_t mask = half ? top : 0;
  const std::uint64_t all_ones = (top << 1) - 1;
  if (half) visit(mask, st.objective);

  const std::uint64_t steps = (std::uint64_t{1} << free_bits) - 1;
  for (std::uint64_t i = 1; i <= steps; ++i) {
    // Free bit j is variable m-1-j, i.e. bit j of the lexicographic mask.
    const auto j = static_cast<std::size_t>(std::countr_zero(i));
    const std::size_t a = m - 1 - j;
    st.flip(problem, k, a, st.delta(problem, a));
    mask ^= std::uint64_t{1} << j;
    if (mask != all_ones && mask != 0) visit(mask, st.objective);
    if (i % kResyncInterval == 0) st.reset(problem, k);
  }
}

bool flip_symmetric(const QuboProblem& problem) {
  // q -> 1 - q preserves q^T H q for every q iff every row of H sums to zero.
  const std::size_t m = problem.size();
  for (std::size_t a = 0; a < m; ++a) {
    double sum = 0.0, abs = 0.0;
    for (double h : problem.row(a)) {
      sum += h;
      abs += std::fabs(h);
    }
    if (std::fabs(sum) > 1e-9 * abs) return false;
  }
  return true;
}

}  // namespace detail

SolveOutcome solve_exhaustive(const QuboProblem& problem, std::size_t max_size) {
  const std::size_t m = problem.size();
  if (m < 2) throw Error("QUBO solver needs at least 2 variables");
  if (m > max_size)
    throw Error("exhaustive solver: " + std::to_string(m) + " variables exceeds the limit of " +
                std::to_string(max_size));
  const double tol = tie_tolerance(problem);
  std::uint64_t best_mask = 0;
  double best = 0.0;
  bool have = false;
  std::uint64_t evaluations = 0;
  detail::gray_walk(
      problem,
      [&](std::uint64_t mask, double value) {
        ++evaluations;
        if (!have || value < best - tol || (value <= best + tol && mask < best_mask)) {
          best = value;
          best_mask = mask;
          have = true;
        }
      },
      detail::flip_symmetric(problem));
  SolveOutcome out;
  out.q = BinaryAssignment::from_mask(best_mask, m);
  out.objective = problem.evaluate(out.q);
  out.method = SolveMethod::exhaustive;
  out.evaluations = evaluations;
  return out;
}

namespace {

struct RestartResult {
  BinaryAssignment q;
  double objective = 0.0;
  std::uint64_t evaluations = 0;
};

RestartResult anneal_once(const QuboProblem& p, std::size_t sweeps, double t_init, double t_final,
                          std::uint64_t seed) {
  const std::size_t m = p.size();
  const auto& k = kernels::table(kernels::active_isa());
  Rng rng(seed);
  FieldState st;
  st.x.resize(m);
  for (auto& v : st.x) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  st.reset(p, k);
  std::size_t ones = 0;
  for (double v : st.x) ones += v != 0.0;

  RestartResult best;
  bool have = false;
  auto consider = [&] {
    if (ones == 0 || ones == m) return;
    if (!have || st.objective < best.objective) {
      best.q = BinaryAssignment(m);
      for (std::size_t a = 0; a < m; ++a) best.q.set(a, st.x[a] != 0.0);
      best.objective = st.objective;
      have = true;
    }
  };
  consider();

  const double ratio = sweeps > 1 ? std::pow(t_final / t_init, 1.0 / static_cast<double>(sweeps - 1)) : 1.0;
  double temperature = t_init;
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (std::size_t a = 0; a < m; ++a) {
      const double d = st.delta(p, a);
      ++best.evaluations;
      if (d <= 0.0 || rng.uniform() < std::exp(-d / temperature)) {
        ones += st.x[a] != 0.0 ? std::size_t(-1) : 1;
        st.flip(p, k, a, d);
        consider();
      }
    }
    if (ones == 0 || ones == m) {
      // Trivial incumbent: move to the best single-flip neighbour.
      std::size_t best_a = 0;
      double best_d = st.delta(p, 0);
      for (std::size_t a = 1; a < m; ++a) {
        const double d = st.delta(p, a);
        if (d < best_d) {
          best_d = d;
          best_a = a;
        }
      }
      ones += st.x[best_a] != 0.0 ? std::size_t(-1) : 1;
      st.flip(p, k, best_a, best_d);
      ++best.evaluations;
    }
    st.reset(p, k);
    consider();
    temperature *= ratio;
  }
  best.objective = p.evaluate(best.q);
  return best;
}

}  // namespace

SolveOutcome solve_anneal(const QuboProblem& problem, const AnnealConfig& cfg) {
  const std::size_t m = problem.size();
  if (m < 2) throw Error("QUBO solver needs at least 2 variables");
  if (cfg.restarts < 1) throw Error("annealing needs at least one restart");
  const std::size_t sweeps = cfg.sweeps == 0 ? 200 * m : cfg.sweeps;
  double t_init = cfg.t_init.value_or(problem.max_abs());
  if (!(t_init > 0.0)) t_init = 1.0;
  const double t_final = cfg.t_final.value_or(1e-3 * t_init);
  if (!(t_final > 0.0) || !(t_init > t_final)) throw Error("annealing needs t_init > t_final > 0");

  std::vector<RestartResult> results(cfg.restarts);
  parallel_for(cfg.restarts, [&](std::size_t r) {
    results[r] = anneal_once(problem, sweeps, t_init, t_final, mix64(cfg.seed ^ mix64(r + 1)));
  });

  SolveOutcome out;
  out.method = SolveMethod::annealing;
  std::size_t pick = 0;
  for (std::size_t r = 0; r < results.size(); ++r) {
    out.evaluations += results[r].evaluations;
    const auto& cand = results[r];
    const auto& cur = results[pick];
    if (cand.objective < cur.objective || (cand.objective == cur.objective && cand.q < cur.q)) pick = r;
  }
  out.q = results[pick].q;
  out.objective = results[pick].objective;
  return out;
}

SolveOutcome solve(const QuboProblem& problem, const SolverConfig& cfg) {
  if (problem.size() < 2) throw Error("QUBO solver needs at least 2 variables");
  if (problem.size() <= cfg.exact_threshold) return solve_exhaustive(problem, cfg.exact_threshold);
  return solve_anneal(problem, cfg.anneal);
}

}  // namespace cartqubo
