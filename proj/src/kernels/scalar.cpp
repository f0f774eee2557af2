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

Moments moments_scalar(const double* x, std::size_t n) {
  double s[4] = {0, 0, 0, 0}, cs[4] = {0, 0, 0, 0};
  double q[4] = {0, 0, 0, 0}, cq[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i & 3;
    neumaier(s[k], cs[k], x[i]);
    neumaier(q[k], cq[k], x[i] * x[i]);
  }
  Moments m;
  m.sum = ((s[0] + cs[0]) + (s[1] + cs[1])) + ((s[2] + cs[2]) + (s[3] + cs[3]));
  m.sum_sq = ((q[0] + cq[0]) + (q[1] + cq[1])) + ((q[2] + cq[2]) + (q[3] + cq[3]));
  return m;
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] = acc[i & 3] + x[i] * y[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void v_row_scalar(double* out, double na, double ma, double m2a, const double* n, const double* mean,
                  const double* m2, std::size_t m) {
  for (std::size_t b = 0; b < m; ++b) {
    const double d = ma - mean[b];
    out[b] = 0.5 * ((n[b] * m2a + na * m2[b]) + (na * n[b]) * (d * d));
  }
}

void qubo_row_scalar(double* out, double total, double na, double ra, double lambda, const double* v, const double* n,
                     const double* r, std::size_t m) {
  for (std::size_t b = 0; b < m; ++b) out[b] = ((total * v[b] - n[b] * ra) - na * r[b]) + lambda * (na * n[b]);
}

}  // namespace

namespace detail {
const KernelTable scalar_table{moments_scalar, axpy_scalar, dot_scalar, v_row_scalar, qubo_row_scalar};
}  // namespace detail

}  // namespace cartqubo::kernels
