#include "agst/kernels.hpp"

#include <cmath>

namespace agst::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpby(double alpha, const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      axpy(aip, b + p * n, ci, n);
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      axpy(aip, bi, c + p * n, n);
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
}

void csr_mm(const std::size_t* offsets, const std::uint32_t* indices, const double* values,
            std::size_t rows, const double* b, double* c, std::size_t n) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* ci = c + i * n;
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
      axpy(values[e], b + static_cast<std::size_t>(indices[e]) * n, ci, n);
  }
}

void csr_mm_t(const std::size_t* offsets, const std::uint32_t* indices, const double* values,
              std::size_t rows, const double* b, double* c, std::size_t n) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* bi = b + i * n;
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
      axpy(values[e], bi, c + static_cast<std::size_t>(indices[e]) * n, n);
  }
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n,
          const AdamStep& s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i] + s.weight_decay * param[i];
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
    const double mhat = m[i] / s.bias_correction1;
    const double vhat = v[i] / s.bias_correction2;
    param[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, "scalar", dot,     axpy,   axpby, gemm_nn,
                                 gemm_tn,     gemm_nt,  csr_mm,  csr_mm_t, adam};
  return table;
}

}  // namespace agst::kernels
