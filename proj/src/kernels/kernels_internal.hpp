#pragma once

#include "protocheck/kernels.hpp"

namespace protocheck::kernels::detail {

double sum_scalar(const double* x, std::size_t n);
double dot_scalar(const double* x, const double* y, std::size_t n);
Moments centered_moments_scalar(const double* x, const double* y, std::size_t n, double mx, double my);

#if defined(PROTOCHECK_HAVE_AVX2)
double sum_avx2(const double* x, std::size_t n);
double dot_avx2(const double* x, const double* y, std::size_t n);
Moments centered_moments_avx2(const double* x, const double* y, std::size_t n, double mx, double my);
#endif

#if defined(PROTOCHECK_HAVE_NEON)
double sum_neon(const double* x, std::size_t n);
double dot_neon(const double* x, const double* y, std::size_t n);
Moments centered_moments_neon(const double* x, const double* y, std::size_t n, double mx, double my);
#endif

}  // namespace protocheck::kernels::detail
