#ifndef PBE_SIMD_HPP
#define PBE_SIMD_HPP

#include <cstddef>

// Vectorized double-precision primitives for the arithmetic inner loops
// (quadrature sums, Hessian assembly, sectional flux sums, slope limiting).
// A scalar reference implementation always exists; on x86-64 an AVX2/FMA
// variant is selected at runtime when the CPU supports it. The two paths are
// equivalence-tested against each other. Set PBE_SIMD=scalar in the
// environment to force the reference path.

namespace pbe::simd {

enum class Target { scalar, avx2 };

/// Target picked at process start (CPU detection + PBE_SIMD override).
Target active_target();
const char* target_name();
bool avx2_available();

// Dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
double max_val(const double* a, std::size_t n);
double min_val(const double* a, std::size_t n);
/// Elementwise three-argument minmod (common sign -> minimal modulus, else 0).
void minmod3(const double* a, const double* b, const double* c, double* out, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
double max_val(const double* a, std::size_t n);
double min_val(const double* a, std::size_t n);
void minmod3(const double* a, const double* b, const double* c, double* out, std::size_t n);
} // namespace scalar

namespace avx2 {
// Defined only when built with PBESOL_HAVE_AVX2; call after checking
// avx2_available().
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
double max_val(const double* a, std::size_t n);
double min_val(const double* a, std::size_t n);
void minmod3(const double* a, const double* b, const double* c, double* out, std::size_t n);
} // namespace avx2

} // namespace pbe::simd

#endif
