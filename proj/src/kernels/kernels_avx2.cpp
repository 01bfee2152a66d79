// Compiled with -mavx2 -mfma. Nothing here may run unless avx2_table()
// returned non-null.

#include <immintrin.h>

#include <algorithm>

#include "a3t/kernels.hpp"

namespace a3t::kernels {
namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  hi = _mm_unpackhi_pd(lo, lo);
  double acc = _mm_cvtsd_f64(_mm_add_sd(lo, hi));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// Elementwise kernels use separate mul/add (no FMA) so that they round
// exactly like the scalar reference.
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sgd_momentum_avx2(double* p, double* v, const double* grad, double lr,
                       double momentum, double weight_decay, std::size_t n) {
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vm = _mm256_set1_pd(momentum);
  const __m256d vwd = _mm256_set1_pd(weight_decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d pi = _mm256_loadu_pd(p + i);
    const __m256d d =
        _mm256_add_pd(_mm256_loadu_pd(grad + i), _mm256_mul_pd(vwd, pi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(vm, _mm256_loadu_pd(v + i)), d);
    _mm256_storeu_pd(v + i, vi);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(pi, _mm256_mul_pd(vlr, vi)));
  }
  for (; i < n; ++i) {
    const double d = grad[i] + weight_decay * p[i];
    v[i] = momentum * v[i] + d;
    p[i] -= lr * v[i];
  }
}

void signed_step_project_avx2(double* delta, const double* grad, double alpha,
                              double eps, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vhi = _mm256_set1_pd(eps);
  const __m256d vlo = _mm256_set1_pd(-eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(g, zero, _CMP_GT_OQ), va);
    const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(g, zero, _CMP_LT_OQ), va);
    const __m256d step = _mm256_sub_pd(pos, neg);
    __m256d d = _mm256_add_pd(_mm256_loadu_pd(delta + i), step);
    d = _mm256_min_pd(_mm256_max_pd(d, vlo), vhi);
    _mm256_storeu_pd(delta + i, d);
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    const double s = g > 0.0 ? alpha : (g < 0.0 ? -alpha : 0.0);
    delta[i] = std::clamp(delta[i] + s, -eps, eps);
  }
}

void clamp_avx2(double* delta, double eps, std::size_t n) {
  const __m256d vhi = _mm256_set1_pd(eps);
  const __m256d vlo = _mm256_set1_pd(-eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_loadu_pd(delta + i);
    _mm256_storeu_pd(delta + i, _mm256_min_pd(_mm256_max_pd(d, vlo), vhi));
  }
  for (; i < n; ++i) delta[i] = std::clamp(delta[i], -eps, eps);
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{
      "avx2",          dot_avx2,
      axpy_avx2,       add_avx2,
      sgd_momentum_avx2, signed_step_project_avx2,
      clamp_avx2,
  };
  return table;
}

}  // namespace a3t::kernels
