#pragma once

// Data-parallel inner loops of the split pipeline. Each kernel has a portable
// scalar implementation and, on x86-64, an AVX2 variant chosen at runtime.
//
// Reductions use a fixed 4-lane order (element i accumulates into lane i % 4,
// lanes combined as (l0 + l1) + (l2 + l3)) in every variant, and the library
// is built without floating-point contraction, so all variants return
// bit-identical results. Model output therefore does not depend on the CPU.

#include <cstddef>
#include <span>
#include <string_view>

namespace cartqubo::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

struct KernelTable {
  /// Compensated (Neumaier) sums of x and x*x.
  Moments (*moments)(const double* x, std::size_t n);
  /// y[i] += a * x[i]
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// out[b] = 0.5 * ((n[b]*m2a + na*m2[b]) + (na*n[b]) * ((ma-mean[b])*(ma-mean[b])))
  void (*v_row)(double* out, double na, double ma, double m2a, const double* n, const double* mean, const double* m2,
                std::size_t m);
  /// out[b] = ((total*v[b] - n[b]*ra) - na*r[b]) + lambda*(na*n[b])
  void (*qubo_row)(double* out, double total, double na, double ra, double lambda, const double* v, const double* n,
                   const double* r, std::size_t m);
};

bool available(Isa isa);
const KernelTable& table(Isa isa);

/// Best available ISA unless overridden by set_isa() or the CARTQUBO_ISA
/// environment variable ("scalar" or "avx2").
Isa active_isa();
void set_isa(Isa isa);

Moments moments(std::span<const double> x);
void axpy(std::span<double> y, double a, std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

namespace detail {
extern const KernelTable scalar_table;
#if defined(CARTQUBO_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace cartqubo::kernels
