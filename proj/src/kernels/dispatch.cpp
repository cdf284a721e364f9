#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"

namespace protocheck::kernels {

namespace {

const KernelTable kScalar{"scalar", detail::sum_scalar, detail::dot_scalar, detail::centered_moments_scalar};

#if defined(PROTOCHECK_HAVE_AVX2)
const KernelTable kAvx2{"avx2", detail::sum_avx2, detail::dot_avx2, detail::centered_moments_avx2};
#endif

#if defined(PROTOCHECK_HAVE_NEON)
const KernelTable kNeon{"neon", detail::sum_neon, detail::dot_neon, detail::centered_moments_neon};
#endif

const KernelTable& choose() {
  const char* forced = std::getenv("PROTOCHECK_SIMD");
  const std::string want = forced == nullptr ? "auto" : forced;
  if (want == "scalar") return kScalar;
  if (want == "avx2" || want == "auto") {
    if (const KernelTable* t = avx2()) return *t;
  }
  if (want == "neon" || want == "auto") {
    if (const KernelTable* t = neon()) return *t;
  }
  return kScalar;
}

}  // namespace

const KernelTable& scalar() { return kScalar; }

const KernelTable* avx2() {
#if defined(PROTOCHECK_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon() {
#if defined(PROTOCHECK_HAVE_NEON)
  return &kNeon;  // mandatory on AArch64
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&kScalar};
  if (const KernelTable* t = avx2()) out.push_back(t);
  if (const KernelTable* t = neon()) out.push_back(t);
  return out;
}

const KernelTable& active() {
  static const KernelTable& table = choose();
  return table;
}

}  // namespace protocheck::kernels
