// Compiled with -mavx2 -mfma. Only reached through avx2_table() after a
// runtime CPU check, so nothing here may run on hardware without AVX2.

#include <cmath>

#include "flipaudit/kernels/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace flipaudit::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot_avx2(const double* a, const double* b, const double* w, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d wa0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    __m256d wa1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(a + i + 4));
    acc0 = _mm256_fmadd_pd(wa0, _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(wa1, _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc0 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// exp(x) for x in [-708, 708]: x = k ln2 + r with |r| <= ln2/2, exp(r) by a
// degree-13 Taylor polynomial (truncation error < 2e-16 relative), scaled by
// 2^k assembled directly in the exponent field.
inline __m256d exp_avx2(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52

  x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-708.0)), _mm256_set1_pd(708.0));
  __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);

  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        1.0 / 2.0,
      1.0,                1.0};
  __m256d poly = _mm256_set1_pd(kInvFact[0]);
  for (std::size_t j = 1; j < std::size(kInvFact); ++j) {
    poly = _mm256_fmadd_pd(poly, r, _mm256_set1_pd(kInvFact[j]));
  }

  __m256i ki = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(k, magic)),
                                _mm256_castpd_si256(magic));
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(poly, _mm256_castsi256_pd(bits));
}

void logistic_avx2(const double* eta, double* p, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d lo = _mm256_set1_pd(-700.0);
  const __m256d hi = _mm256_set1_pd(700.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d e = _mm256_min_pd(_mm256_max_pd(_mm256_loadu_pd(eta + i), lo), hi);
    __m256d ex = exp_avx2(_mm256_sub_pd(_mm256_setzero_pd(), e));
    _mm256_storeu_pd(p + i, _mm256_div_pd(one, _mm256_add_pd(one, ex)));
  }
  if (i < n) {
    // Tail through the same vector path so a value's result never depends on
    // its position in the array.
    alignas(32) double in[4] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double out[4];
    for (std::size_t j = i; j < n; ++j) in[j - i] = eta[j];
    __m256d e = _mm256_min_pd(_mm256_max_pd(_mm256_load_pd(in), lo), hi);
    __m256d ex = exp_avx2(_mm256_sub_pd(_mm256_setzero_pd(), e));
    _mm256_store_pd(out, _mm256_div_pd(one, _mm256_add_pd(one, ex)));
    for (std::size_t j = i; j < n; ++j) p[j] = out[j - i];
  }
}

void binomial_weights_avx2(const double* p, double* w, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(p + i);
    _mm256_storeu_pd(w + i, _mm256_mul_pd(v, _mm256_sub_pd(one, v)));
  }
  for (; i < n; ++i) w[i] = p[i] * (1.0 - p[i]);
}

void residual_avx2(const double* y, const double* p, double* r, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(r + i, _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(p + i)));
  }
  for (; i < n; ++i) r[i] = y[i] - p[i];
}

}  // namespace

const KernelTable* avx2_table_impl() {
  static const KernelTable table{Isa::Avx2,        "avx2",
                                 dot_avx2,         weighted_dot_avx2,
                                 axpy_avx2,        logistic_avx2,
                                 binomial_weights_avx2, residual_avx2};
  return &table;
}

}  // namespace flipaudit::kernels::detail

#else

namespace flipaudit::kernels::detail {
const KernelTable* avx2_table_impl() { return nullptr; }
}  // namespace flipaudit::kernels::detail

#endif
