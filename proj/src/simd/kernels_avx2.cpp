#include "cufun/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace cufun::simd {
namespace {

// a(i, p) for the two layouts the tape needs.
template <bool TransA>
inline double a_at(const double* a, std::size_t m, std::size_t k, std::size_t i, std::size_t p) {
  if constexpr (TransA) {
    (void)k;
    return a[p * m + i];
  } else {
    (void)m;
    return a[i * k + p];
  }
}

// C[i0:i0+4, :] += A[i0:i0+4, p0:p1] * B[p0:p1, :]
template <bool TransA>
void gemm_rows4(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                double* c, std::size_t i0, std::size_t p0, std::size_t p1) {
  double* c0 = c + (i0 + 0) * n;
  double* c1 = c + (i0 + 1) * n;
  double* c2 = c + (i0 + 2) * n;
  double* c3 = c + (i0 + 3) * n;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d r00 = _mm256_loadu_pd(c0 + j), r01 = _mm256_loadu_pd(c0 + j + 4);
    __m256d r10 = _mm256_loadu_pd(c1 + j), r11 = _mm256_loadu_pd(c1 + j + 4);
    __m256d r20 = _mm256_loadu_pd(c2 + j), r21 = _mm256_loadu_pd(c2 + j + 4);
    __m256d r30 = _mm256_loadu_pd(c3 + j), r31 = _mm256_loadu_pd(c3 + j + 4);
    for (std::size_t p = p0; p < p1; ++p) {
      const double* bp = b + p * n + j;
      const __m256d b0 = _mm256_loadu_pd(bp);
      const __m256d b1 = _mm256_loadu_pd(bp + 4);
      __m256d av = _mm256_set1_pd(a_at<TransA>(a, m, k, i0 + 0, p));
      r00 = _mm256_fmadd_pd(av, b0, r00);
      r01 = _mm256_fmadd_pd(av, b1, r01);
      av = _mm256_set1_pd(a_at<TransA>(a, m, k, i0 + 1, p));
      r10 = _mm256_fmadd_pd(av, b0, r10);
      r11 = _mm256_fmadd_pd(av, b1, r11);
      av = _mm256_set1_pd(a_at<TransA>(a, m, k, i0 + 2, p));
      r20 = _mm256_fmadd_pd(av, b0, r20);
      r21 = _mm256_fmadd_pd(av, b1, r21);
      av = _mm256_set1_pd(a_at<TransA>(a, m, k, i0 + 3, p));
      r30 = _mm256_fmadd_pd(av, b0, r30);
      r31 = _mm256_fmadd_pd(av, b1, r31);
    }
    _mm256_storeu_pd(c0 + j, r00);
    _mm256_storeu_pd(c0 + j + 4, r01);
    _mm256_storeu_pd(c1 + j, r10);
    _mm256_storeu_pd(c1 + j + 4, r11);
    _mm256_storeu_pd(c2 + j, r20);
    _mm256_storeu_pd(c2 + j + 4, r21);
    _mm256_storeu_pd(c3 + j, r30);
    _mm256_storeu_pd(c3 + j + 4, r31);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d r0 = _mm256_loadu_pd(c0 + j);
    __m256d r1 = _mm256_loadu_pd(c1 + j);
    __m256d r2 = _mm256_loadu_pd(c2 + j);
    __m256d r3 = _mm256_loadu_pd(c3 + j);
    for (std::size_t p = p0; p < p1; ++p) {
      const __m256d bv = _mm256_loadu_pd(b + p * n + j);
      r0 = _mm256_fmadd_pd(_mm256_set1_pd(a_at<TransA>(a, m, k, i0 + 0, p)), bv, r0);
      r1 = _mm256_fmadd_pd(_mm256_set1_pd(a_at<TransA>(a, m, k, i0 + 1, p)), bv, r1);
      r2 = _mm256_fmadd_pd(_mm256_set1_pd(a_at<TransA>(a, m, k, i0 + 2, p)), bv, r2);
      r3 = _mm256_fmadd_pd(_mm256_set1_pd(a_at<TransA>(a, m, k, i0 + 3, p)), bv, r3);
    }
    _mm256_storeu_pd(c0 + j, r0);
    _mm256_storeu_pd(c1 + j, r1);
    _mm256_storeu_pd(c2 + j, r2);
    _mm256_storeu_pd(c3 + j, r3);
  }
  for (; j < n; ++j) {
    for (std::size_t r = 0; r < 4; ++r) {
      double acc = c[(i0 + r) * n + j];
      for (std::size_t p = p0; p < p1; ++p) acc += a_at<TransA>(a, m, k, i0 + r, p) * b[p * n + j];
      c[(i0 + r) * n + j] = acc;
    }
  }
}

template <bool TransA>
void gemm_row1(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
               double* c, std::size_t i, std::size_t p0, std::size_t p1) {
  double* ci = c + i * n;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d r = _mm256_loadu_pd(ci + j);
    for (std::size_t p = p0; p < p1; ++p)
      r = _mm256_fmadd_pd(_mm256_set1_pd(a_at<TransA>(a, m, k, i, p)),
                          _mm256_loadu_pd(b + p * n + j), r);
    _mm256_storeu_pd(ci + j, r);
  }
  for (; j < n; ++j) {
    double acc = ci[j];
    for (std::size_t p = p0; p < p1; ++p) acc += a_at<TransA>(a, m, k, i, p) * b[p * n + j];
    ci[j] = acc;
  }
}

template <bool TransA>
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
              double* c) {
  // Blocking over the reduction dimension keeps the streamed B panel cache-resident
  // when k is the (large) event count.
  constexpr std::size_t kPanel = 256;
  for (std::size_t p0 = 0; p0 < k; p0 += kPanel) {
    const std::size_t p1 = std::min(k, p0 + kPanel);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) gemm_rows4<TransA>(m, n, k, a, b, c, i, p0, p1);
    for (; i < m; ++i) gemm_row1<TransA>(m, n, k, a, b, c, i, p0, p1);
  }
}

void gemm_nn_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                 double* c) {
  gemm_acc<false>(m, n, k, a, b, c);
}

void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                 double* c) {
  gemm_acc<true>(m, n, k, a, b, c);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void hadamard_acc(std::size_t n, const double* x, const double* y, double* z) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                                            _mm256_loadu_pd(z + i)));
  for (; i < n; ++i) z[i] += x[i] * y[i];
}

void add_row_broadcast(std::size_t rows, std::size_t cols, const double* row, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = out + r * cols;
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      _mm256_storeu_pd(o + c, _mm256_add_pd(_mm256_loadu_pd(o + c), _mm256_loadu_pd(row + c)));
    for (; c < cols; ++c) o[c] += row[c];
  }
}

void column_sum_acc(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      _mm256_storeu_pd(out + c, _mm256_add_pd(_mm256_loadu_pd(out + c), _mm256_loadu_pd(x + c)));
    for (; c < cols; ++c) out[c] += x[c];
  }
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum(std::size_t n, const double* x) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

void adam_update(std::size_t n, const AdamCoefficients& cf, const double* grad, double* m,
                 double* v, double* param) {
  const __m256d b1 = _mm256_set1_pd(cf.beta1), nb1 = _mm256_set1_pd(1.0 - cf.beta1);
  const __m256d b2 = _mm256_set1_pd(cf.beta2), nb2 = _mm256_set1_pd(1.0 - cf.beta2);
  const __m256d inv_c1 = _mm256_set1_pd(1.0 / cf.bias_correction1);
  const __m256d inv_c2 = _mm256_set1_pd(1.0 / cf.bias_correction2);
  const __m256d lr = _mm256_set1_pd(cf.lr), eps = _mm256_set1_pd(cf.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(nb1, g));
    const __m256d vi =
        _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(nb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, inv_c2)), eps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, _mm256_mul_pd(mi, inv_c1)), denom);
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    m[i] = cf.beta1 * m[i] + (1.0 - cf.beta1) * grad[i];
    v[i] = cf.beta2 * v[i] + (1.0 - cf.beta2) * grad[i] * grad[i];
    param[i] -= cf.lr * (m[i] / cf.bias_correction1) /
                (std::sqrt(v[i] / cf.bias_correction2) + cf.eps);
  }
}

// tanh(|x|) = e / (e + 2) with e = expm1(2|x|). expm1 reduces t = k ln2 + r,
// |r| <= ln2/2, evaluates a degree-13 Taylor polynomial for expm1(r) and
// rescales: expm1(t) = 2^k expm1(r) + (2^k - 1). For k = 0 no cancellation
// occurs, so small arguments keep full relative accuracy. The same e gives
// sech^2(x) = 4 (e + 1) / (e + 2)^2 without cancellation.
__m256d tanh4(__m256d x, __m256d* dy) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d sign = _mm256_and_pd(x, sign_mask);
  __m256d t = _mm256_add_pd(_mm256_andnot_pd(sign_mask, x), _mm256_andnot_pd(sign_mask, x));
  t = _mm256_min_pd(_mm256_set1_pd(700.0), t);

  const __m256d kd = _mm256_round_pd(_mm256_mul_pd(t, _mm256_set1_pd(1.4426950408889634)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(kd, _mm256_set1_pd(6.93147180369123816490e-01), t);
  r = _mm256_fnmadd_pd(kd, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double c[] = {1.0 / 2,          1.0 / 6,           1.0 / 24,
                                 1.0 / 120,        1.0 / 720,         1.0 / 5040,
                                 1.0 / 40320,      1.0 / 362880,      1.0 / 3628800,
                                 1.0 / 39916800,   1.0 / 479001600,   1.0 / 6227020800.0};
  __m256d q = _mm256_set1_pd(c[11]);
  for (int i = 10; i >= 0; --i) q = _mm256_fmadd_pd(q, r, _mm256_set1_pd(c[i]));
  const __m256d em1_r = _mm256_fmadd_pd(_mm256_mul_pd(r, r), q, r);

  __m256i k64 = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(kd));
  const __m256d two_k =
      _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52));
  const __m256d e =
      _mm256_fmadd_pd(two_k, em1_r, _mm256_sub_pd(two_k, _mm256_set1_pd(1.0)));
  const __m256d e2 = _mm256_add_pd(e, _mm256_set1_pd(2.0));
  const __m256d y = _mm256_div_pd(e, e2);
  if (dy != nullptr) {
    const __m256d num = _mm256_mul_pd(_mm256_set1_pd(4.0), _mm256_add_pd(e, _mm256_set1_pd(1.0)));
    *dy = _mm256_div_pd(_mm256_div_pd(num, e2), e2);
  }
  return _mm256_or_pd(y, sign);
}

void vtanh(std::size_t n, const double* x, double* y, double* dy) {
  std::size_t i = 0;
  if (dy == nullptr) {
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, tanh4(_mm256_loadu_pd(x + i), nullptr));
  } else {
    for (; i + 4 <= n; i += 4) {
      __m256d d;
      _mm256_storeu_pd(y + i, tanh4(_mm256_loadu_pd(x + i), &d));
      _mm256_storeu_pd(dy + i, d);
    }
  }
  scalar_kernels().tanh(n - i, x + i, y + i, dy == nullptr ? nullptr : dy + i);
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      "avx2",         gemm_nn_acc, gemm_tn_acc, axpy, hadamard, hadamard_acc, add_row_broadcast,
      column_sum_acc, dot,         sum,         adam_update, vtanh,
  };
  return table;
}

}  // namespace cufun::simd
