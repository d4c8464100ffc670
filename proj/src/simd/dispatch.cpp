#include "pbe/simd.hpp"

#include <cstdlib>
#include <cstring>

namespace pbe::simd {

namespace {

Target detect() {
    const char* env = std::getenv("PBE_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Target::scalar;
#if defined(PBESOL_HAVE_AVX2)
    if (env && std::strcmp(env, "avx2") == 0) return Target::avx2;
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return Target::avx2;
#endif
    return Target::scalar;
}

const Target g_target = detect();

} // namespace

Target active_target() { return g_target; }

const char* target_name() {
    return g_target == Target::avx2 ? "avx2" : "scalar";
}

bool avx2_available() {
#if defined(PBESOL_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

#if defined(PBESOL_HAVE_AVX2)
#define PBE_DISPATCH(fn, ...) \
    return g_target == Target::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#define PBE_DISPATCH_VOID(fn, ...) \
    if (g_target == Target::avx2) { avx2::fn(__VA_ARGS__); return; } \
    scalar::fn(__VA_ARGS__)
#else
#define PBE_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#define PBE_DISPATCH_VOID(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double dot(const double* a, const double* b, std::size_t n) { PBE_DISPATCH(dot, a, b, n); }
double dot3(const double* a, const double* b, const double* c, std::size_t n) { PBE_DISPATCH(dot3, a, b, c, n); }
double sum(const double* a, std::size_t n) { PBE_DISPATCH(sum, a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { PBE_DISPATCH_VOID(axpy, alpha, x, y, n); }
void scale(double alpha, double* x, std::size_t n) { PBE_DISPATCH_VOID(scale, alpha, x, n); }
void hadamard(const double* a, const double* b, double* out, std::size_t n) { PBE_DISPATCH_VOID(hadamard, a, b, out, n); }
double max_val(const double* a, std::size_t n) { PBE_DISPATCH(max_val, a, n); }
double min_val(const double* a, std::size_t n) { PBE_DISPATCH(min_val, a, n); }
void minmod3(const double* a, const double* b, const double* c, double* out, std::size_t n) { PBE_DISPATCH_VOID(minmod3, a, b, c, out, n); }

} // namespace pbe::simd
