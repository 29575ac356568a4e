#pragma once

// Dense double-precision kernels used by the autodiff tape and the optimizer.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2/FMA variant. The active table is chosen once at first use from the
// CPU feature flags; CUFUN_SIMD=scalar|avx2 in the environment overrides it.
// All matrices are row-major and densely packed.

#include <cstddef>
#include <string_view>

namespace cufun::simd {

struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  std::string_view name;

  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn_acc)(std::size_t m, std::size_t n, std::size_t k,
                      const double* a, const double* b, double* c);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn_acc)(std::size_t m, std::size_t n, std::size_t k,
                      const double* a, const double* b, double* c);
  // y[i] += alpha * x[i]
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // z[i] = x[i] * y[i]
  void (*hadamard)(std::size_t n, const double* x, const double* y, double* z);
  // z[i] += x[i] * y[i]
  void (*hadamard_acc)(std::size_t n, const double* x, const double* y, double* z);
  // out[r, c] += row[c] for each of `rows` rows of width `cols`
  void (*add_row_broadcast)(std::size_t rows, std::size_t cols, const double* row, double* out);
  // out[c] += sum_r in[r, c]
  void (*column_sum_acc)(std::size_t rows, std::size_t cols, const double* in, double* out);
  double (*dot)(std::size_t n, const double* x, const double* y);
  double (*sum)(std::size_t n, const double* x);
  // One Adam update over a flat parameter vector.
  void (*adam_update)(std::size_t n, const AdamCoefficients& coeff, const double* grad,
                      double* m, double* v, double* param);
  // y[i] = tanh(x[i]) and, when dy is non-null, dy[i] = sech^2(x[i]) computed
  // from x so it keeps relative accuracy where tanh saturates. The vector
  // variant agrees with the scalar one to a few ulp.
  void (*tanh)(std::size_t n, const double* x, double* y, double* dy);
};

const KernelTable& scalar_kernels();
#if defined(CUFUN_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

bool cpu_has_avx2();

// Table selected for this process.
const KernelTable& active();

// Pins the active table; used by equivalence tests and benchmarks. Returns false
// if the requested variant is unavailable on this machine.
bool select(std::string_view name);

}  // namespace cufun::simd
