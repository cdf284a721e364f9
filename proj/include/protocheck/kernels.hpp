#pragma once

// Reduction kernels behind the correlation statistics. Each ISA variant
// implements the same table; `active()` picks the widest one the CPU
// supports unless PROTOCHECK_SIMD forces a choice (scalar, avx2, neon).
// Variants agree with the scalar reference up to summation-order rounding.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace protocheck::kernels {

struct Moments {
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
};

struct KernelTable {
  std::string_view name;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // Sums of (x-mx)^2, (y-my)^2 and (x-mx)(y-my).
  Moments (*centered_moments)(const double* x, const double* y, std::size_t n, double mx, double my);
};

const KernelTable& scalar();
// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2();
const KernelTable* neon();

std::vector<const KernelTable*> available();
const KernelTable& active();

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline Moments centered_moments(std::span<const double> x, std::span<const double> y, double mx, double my) {
  return active().centered_moments(x.data(), y.data(), x.size(), mx, my);
}

}  // namespace protocheck::kernels
