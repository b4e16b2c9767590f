#include <stdexcept>

#include "selforg/kernels.hpp"

namespace selforg::kernels {

const KernelTable& select_kernels(KernelChoice choice) {
  switch (choice) {
    case KernelChoice::Scalar:
      return scalar_kernels();
    case KernelChoice::Avx2:
      if (const KernelTable* t = avx2_kernels()) return *t;
      throw std::runtime_error("AVX2 kernels requested but not available on this CPU/build");
    case KernelChoice::Auto:
      break;
  }
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

KernelChoice parse_kernel_choice(std::string_view s) {
  if (s == "auto") return KernelChoice::Auto;
  if (s == "scalar") return KernelChoice::Scalar;
  if (s == "avx2") return KernelChoice::Avx2;
  throw std::invalid_argument("unknown kernel '" + std::string(s) + "' (auto|scalar|avx2)");
}

}  // namespace selforg::kernels
