#include "cufun/simd/kernels.hpp"

#include <cmath>

namespace cufun::simd {
namespace {

void gemm_nn_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                 double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                 double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard(std::size_t n, const double* x, const double* y, double* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void hadamard_acc(std::size_t n, const double* x, const double* y, double* z) {
  for (std::size_t i = 0; i < n; ++i) z[i] += x[i] * y[i];
}

void add_row_broadcast(std::size_t rows, std::size_t cols, const double* row, double* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += row[c];
}

void column_sum_acc(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += in[r * cols + c];
}

double dot(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum(std::size_t n, const double* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void adam_update(std::size_t n, const AdamCoefficients& cf, const double* grad, double* m,
                 double* v, double* param) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = cf.beta1 * m[i] + (1.0 - cf.beta1) * grad[i];
    v[i] = cf.beta2 * v[i] + (1.0 - cf.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / cf.bias_correction1;
    const double v_hat = v[i] / cf.bias_correction2;
    param[i] -= cf.lr * m_hat / (std::sqrt(v_hat) + cf.eps);
  }
}

void vtanh(std::size_t n, const double* x, double* y, double* dy) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
  if (dy == nullptr) return;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-2.0 * std::abs(x[i]));
    dy[i] = 4.0 * e / ((1.0 + e) * (1.0 + e));
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",     gemm_nn_acc, gemm_tn_acc, axpy, hadamard, hadamard_acc, add_row_broadcast,
      column_sum_acc, dot,       sum,         adam_update, vtanh,
  };
  return table;
}

}  // namespace cufun::simd
