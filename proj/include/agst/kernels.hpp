#pragma once

// Data-parallel inner loops used by every numeric module. Each kernel has a
// portable scalar reference and, on x86-64, an AVX2+FMA variant. The variant is
// chosen once at startup from CPUID; AGST_ISA=scalar|avx2 overrides it.
//
// All kernels operate on row-major storage. Accumulating kernels add into the
// output (C += ...); callers zero the output first when they want C = ...

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace agst::kernels {

enum class Isa { Scalar, Avx2 };

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double weight_decay;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = alpha * x + beta * y
  void (*axpby)(double alpha, const double* x, double beta, double* y, std::size_t n);

  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // C[k x n] += A[m x k]^T * B[m x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);

  // C[rows x n] += S * B, S in CSR form with `rows` rows, B has n columns.
  void (*csr_mm)(const std::size_t* offsets, const std::uint32_t* indices, const double* values,
                 std::size_t rows, const double* b, double* c, std::size_t n);
  // C[cols(S) x n] += S^T * B
  void (*csr_mm_t)(const std::size_t* offsets, const std::uint32_t* indices, const double* values,
                   std::size_t rows, const double* b, double* c, std::size_t n);

  // In-place Adam with L2 weight decay folded into the gradient.
  void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n,
               const AdamStep& step);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

bool isa_supported(Isa isa);
std::vector<Isa> supported_isas();

/// Kernel table in use by the library.
const KernelTable& active();
/// Switches the process-wide kernel table. Throws if the ISA is unsupported.
void select(Isa isa);
const KernelTable& table_for(Isa isa);

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

}  // namespace agst::kernels
