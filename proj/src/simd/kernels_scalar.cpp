#include "pbe/simd.hpp"

#include <algorithm>
#include <limits>

namespace pbe::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double dot3(const double* a, const double* b, const double* c, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i] * c[i];
    return acc;
}

double sum(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double max_val(const double* a, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, a[i]);
    return m;
}

double min_val(const double* a, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::min(m, a[i]);
    return m;
}

void minmod3(const double* a, const double* b, const double* c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a[i], y = b[i], z = c[i];
        if (x > 0.0 && y > 0.0 && z > 0.0)
            out[i] = std::min(x, std::min(y, z));
        else if (x < 0.0 && y < 0.0 && z < 0.0)
            out[i] = std::max(x, std::max(y, z));
        else
            out[i] = 0.0;
    }
}

} // namespace pbe::simd::scalar
