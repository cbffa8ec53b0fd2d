#pragma once

// Dense float64 inner loops. Every kernel has a scalar reference version and,
// where the build and CPU allow it, an AVX2 version chosen at runtime.
//
// All variants accumulate each output element in the same order with separate
// multiply and add (no FMA), so SIMD results are bit-identical to scalar ones.
// Reductions whose order would change under vectorization are kept scalar.

#include <cstddef>

namespace gdaug::kernels {

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double weight_decay;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelSet {
  const char* name;

  // y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // y = a * x
  void (*scale)(std::size_t n, double a, const double* x, double* y);
  // z = x + y
  void (*add)(std::size_t n, const double* x, const double* y, double* z);
  // z = x * y
  void (*mul)(std::size_t n, const double* x, const double* y, double* z);
  // y = max(x, 0)
  void (*relu)(std::size_t n, const double* x, double* y);
  // c (m x n) = a (m x k) * b (k x n), row-major, c overwritten
  void (*gemm)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c);
  // c (m x n) = a^T * b with a stored (k x m), b (k x n)
  void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                  double* c);
  // In-place Adam update with L2 weight decay folded into the gradient.
  void (*adam_update)(std::size_t n, double* param, const double* grad, double* m, double* v,
                      const AdamCoeffs& c);
};

const KernelSet& scalar_kernels();

/// AVX2 kernels, or nullptr when not compiled in or unsupported by this CPU.
const KernelSet* avx2_kernels();

/// Kernel set used by the library. Picks AVX2 when available unless the
/// GDAUG_SIMD environment variable is set to "scalar".
const KernelSet& active();

/// Overrides the active set for the lifetime of the guard (tests, benchmarks).
class ScopedKernels {
 public:
  explicit ScopedKernels(const KernelSet& ks);
  ~ScopedKernels();
  ScopedKernels(const ScopedKernels&) = delete;
  ScopedKernels& operator=(const ScopedKernels&) = delete;

 private:
  const KernelSet* previous_;
};

}  // namespace gdaug::kernels
