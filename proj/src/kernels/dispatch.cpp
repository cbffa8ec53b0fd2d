#include <atomic>
#include <cstdlib>
#include <string_view>

#include "gdaug/kernels.hpp"

namespace gdaug::kernels {

#if defined(GDAUG_BUILD_AVX2)
const KernelSet& avx2_kernel_table();
#endif

const KernelSet* avx2_kernels() {
#if defined(GDAUG_BUILD_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelSet* select_default() {
  const char* env = std::getenv("GDAUG_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
  if (const KernelSet* ks = avx2_kernels()) return ks;
  return &scalar_kernels();
}

std::atomic<const KernelSet*>& current() {
  static std::atomic<const KernelSet*> ks{select_default()};
  return ks;
}

}  // namespace

const KernelSet& active() { return *current().load(std::memory_order_acquire); }

ScopedKernels::ScopedKernels(const KernelSet& ks)
    : previous_(current().exchange(&ks, std::memory_order_acq_rel)) {}

ScopedKernels::~ScopedKernels() { current().store(previous_, std::memory_order_release); }

}  // namespace gdaug::kernels
