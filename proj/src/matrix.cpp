#include "agst/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "agst/kernels.hpp"

namespace agst {

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& dense) {
  CsrMatrix out;
  out.rows = dense.rows();
  out.cols = dense.cols();
  out.offsets.reserve(out.rows + 1);
  out.offsets.push_back(0);
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    for (std::size_t j = 0; j < dense.cols(); ++j) {
      if (dense(i, j) != 0.0) {
        out.indices.push_back(static_cast<std::uint32_t>(j));
        out.values.push_back(dense(i, j));
      }
    }
    out.offsets.push_back(out.indices.size());
  }
  return out;
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) out(i, indices[e]) = values[e];
  return out;
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError("shape mismatch: " + what);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.cols() == b.rows(), "matmul inner dimensions");
  DenseMatrix c(a.rows(), b.cols());
  kernels::active().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn row counts");
  DenseMatrix c(a.cols(), b.cols());
  kernels::active().gemm_tn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.cols() == b.cols(), "matmul_nt column counts");
  DenseMatrix c(a.rows(), b.rows());
  kernels::active().gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
  return c;
}

DenseMatrix matmul(const CsrMatrix& s, const DenseMatrix& b) {
  require_shape(s.cols == b.rows(), "sparse matmul inner dimensions");
  DenseMatrix c(s.rows, b.cols());
  kernels::active().csr_mm(s.offsets.data(), s.indices.data(), s.values.data(), s.rows, b.data(),
                           c.data(), b.cols());
  return c;
}

DenseMatrix matmul_tn(const CsrMatrix& s, const DenseMatrix& b) {
  require_shape(s.rows == b.rows(), "sparse matmul_tn row counts");
  DenseMatrix c(s.cols, b.cols());
  kernels::active().csr_mm_t(s.offsets.data(), s.indices.data(), s.values.data(), s.rows,
                             b.data(), c.data(), b.cols());
  return c;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace agst
