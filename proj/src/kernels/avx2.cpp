#include <immintrin.h>

#include <cmath>

#include "cartqubo/kernels.hpp"

namespace cartqubo::kernels {

namespace {

inline void neumaier(double& s, double& c, double x) {
  const double t = s + x;
  if (std::fabs(s) >= std::fabs(x))
    c += (s - t) + x;
  else
    c += (x - t) + s;
  s = t;
}

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline void neumaier_pd(__m256d& s, __m256d& c, __m256d x) {
  const __m256d t = _mm256_add_pd(s, x);
  const __m256d big_s = _mm256_sub_pd(s, t);
  const __m256d from_s = _mm256_add_pd(big_s, x);
  const __m256d big_x = _mm256_sub_pd(x, t);
  const __m256d from_x = _mm256_add_pd(big_x, s);
  const __m256d s_wins = _mm256_cmp_pd(abs_pd(s), abs_pd(x), _CMP_GE_OQ);
  c = _mm256_add_pd(c, _mm256_blendv_pd(from_x, from_s, s_wins));
  s = t;
}

Moments moments_avx2(const double* x, std::size_t n) {
  __m256d s = _mm256_setzero_pd(), cs = _mm256_setzero_pd();
  __m256d q = _mm256_setzero_pd(), cq = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    neumaier_pd(s, cs, v);
    neumaier_pd(q, cq, _mm256_mul_pd(v, v));
  }
  alignas(32) double ls[4], lcs[4], lq[4], lcq[4];
  _mm256_store_pd(ls, s);
  _mm256_store_pd(lcs, cs);
  _mm256_store_pd(lq, q);
  _mm256_store_pd(lcq, cq);
  for (; i < n; ++i) {
    const std::size_t k = i & 3;
    neumaier(ls[k], lcs[k], x[i]);
    neumaier(lq[k], lcq[k], x[i] * x[i]);
  }
  Moments m;
  m.sum = ((ls[0] + lcs[0]) + (ls[1] + lcs[1])) + ((ls[2] + lcs[2]) + (ls[3] + lcs[3]));
  m.sum_sq = ((lq[0] + lcq[0]) + (lq[1] + lcq[1])) + ((lq[2] + lcq[2]) + (lq[3] + lcq[3]));
  return m;
}

void axpy_avx2(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (; i < n; ++i) lanes[i & 3] = lanes[i & 3] + x[i] * y[i];
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void v_row_avx2(double* out, double na, double ma, double m2a, const double* n, const double* mean,
                const double* m2, std::size_t m) {
  const __m256d vna = _mm256_set1_pd(na), vma = _mm256_set1_pd(ma), vm2a = _mm256_set1_pd(m2a);
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t b = 0;
  for (; b + 4 <= m; b += 4) {
    const __m256d nb = _mm256_loadu_pd(n + b);
    const __m256d d = _mm256_sub_pd(vma, _mm256_loadu_pd(mean + b));
    const __m256d within = _mm256_add_pd(_mm256_mul_pd(nb, vm2a), _mm256_mul_pd(vna, _mm256_loadu_pd(m2 + b)));
    const __m256d between = _mm256_mul_pd(_mm256_mul_pd(vna, nb), _mm256_mul_pd(d, d));
    _mm256_storeu_pd(out + b, _mm256_mul_pd(half, _mm256_add_pd(within, between)));
  }
  for (; b < m; ++b) {
    const double d = ma - mean[b];
    out[b] = 0.5 * ((n[b] * m2a + na * m2[b]) + (na * n[b]) * (d * d));
  }
}

void qubo_row_avx2(double* out, double total, double na, double ra, double lambda, const double* v, const double* n,
                   const double* r, std::size_t m) {
  const __m256d vtot = _mm256_set1_pd(total), vna = _mm256_set1_pd(na), vra = _mm256_set1_pd(ra);
  const __m256d vlam = _mm256_set1_pd(lambda);
  std::size_t b = 0;
  for (; b + 4 <= m; b += 4) {
    const __m256d nb = _mm256_loadu_pd(n + b);
    __m256d acc = _mm256_sub_pd(_mm256_mul_pd(vtot, _mm256_loadu_pd(v + b)), _mm256_mul_pd(nb, vra));
    acc = _mm256_sub_pd(acc, _mm256_mul_pd(vna, _mm256_loadu_pd(r + b)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vlam, _mm256_mul_pd(vna, nb)));
    _mm256_storeu_pd(out + b, acc);
  }
  for (; b < m; ++b) out[b] = ((total * v[b] - n[b] * ra) - na * r[b]) + lambda * (na * n[b]);
}

}  // namespace

namespace detail {
const KernelTable avx2_table{moments_avx2, axpy_avx2, dot_avx2, v_row_avx2, qubo_row_avx2};
}  // namespace detail

}  // namespace cartqubo::kernels
