#include <atomic>
#include <cstdlib>
#include <string>

#include "cartqubo/error.hpp"
#include "cartqubo/kernels.hpp"

namespace cartqubo::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(CARTQUBO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("CARTQUBO_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && cpu_has_avx2()) return Isa::avx2;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool available(Isa isa) { return isa == Isa::scalar || (isa == Isa::avx2 && cpu_has_avx2()); }

const KernelTable& table(Isa isa) {
#if defined(CARTQUBO_HAVE_AVX2)
  if (isa == Isa::avx2) {
    if (!cpu_has_avx2()) throw Error("AVX2 kernels requested but the CPU does not support AVX2");
    return detail::avx2_table;
  }
#else
  if (isa == Isa::avx2) throw Error("AVX2 kernels were not built");
#endif
  return detail::scalar_table;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!available(isa)) throw Error("kernel ISA '" + std::string(to_string(isa)) + "' is not available");
  current().store(isa, std::memory_order_relaxed);
}

Moments moments(std::span<const double> x) { return table(active_isa()).moments(x.data(), x.size()); }

void axpy(std::span<double> y, double a, std::span<const double> x) {
  if (y.size() != x.size()) throw Error("axpy: length mismatch");
  table(active_isa()).axpy(y.data(), a, x.data(), x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (y.size() != x.size()) throw Error("dot: length mismatch");
  return table(active_isa()).dot(x.data(), y.data(), x.size());
}

}  // namespace cartqubo::kernels
