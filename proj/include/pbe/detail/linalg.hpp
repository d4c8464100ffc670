#ifndef PBE_DETAIL_LINALG_HPP
#define PBE_DETAIL_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace pbe::detail {

/// In-place lower Cholesky of a row-major symmetric n x n matrix (upper part
/// ignored). Returns false when a pivot drops below piv_tol times the largest
/// diagonal entry.
inline bool cholesky(std::vector<double>& a, int n, double piv_tol) {
    double dmax = 0.0;
    for (int i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(a[i * n + i]));
    const double floor = piv_tol * std::max(dmax, 1e-300);
    for (int j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > floor)) return false;
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
        for (int k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
    }
    return true;
}

/// Solve L x = b for lower-triangular L (row-major), in place.
inline void forward_solve(const std::vector<double>& l, int n, double* x) {
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
        x[i] = s / l[i * n + i];
    }
}

/// Solve L^T x = b, in place.
inline void backward_solve_t(const std::vector<double>& l, int n, double* x) {
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n; ++k) s -= l[k * n + i] * x[k];
        x[i] = s / l[i * n + i];
    }
}

/// Symmetric tridiagonal QL with implicit shifts. d: diagonal (n), e:
/// subdiagonal (n-1). z tracks one row of the accumulated rotation matrix
/// (pass (1,0,...,0) to obtain the first components of the normalized
/// eigenvectors). Eigenvalues land in d, unsorted. Returns false on
/// non-convergence.
inline bool tridiag_ql(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z) {
    const int n = static_cast<int>(d.size());
    if (n == 1) return true;
    const double eps = 2.220446049250313e-16;
    e.push_back(0.0);
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == 60) return false;
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    e.pop_back();
    return true;
}

/// Dense two-phase simplex for max c^T x s.t. A x = b, x >= 0 (A row-major,
/// m x n). Bland's rule, no cycling. Returns 0 optimal, 1 infeasible,
/// 2 unbounded. Sized for the small realizability feasibility problems.
inline int dense_simplex(int m, int n, std::vector<double> a, std::vector<double> b,
                         std::vector<double> c, double& objective, std::vector<double>& x) {
    // b >= 0 for phase one
    for (int i = 0; i < m; ++i)
        if (b[i] < 0.0) {
            b[i] = -b[i];
            for (int j = 0; j < n; ++j) a[i * n + j] = -a[i * n + j];
        }

    const int total = n + m; // artificials appended
    std::vector<double> t(static_cast<std::size_t>(m) * total, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) t[i * total + j] = a[i * n + j];
        t[i * total + n + i] = 1.0;
    }
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    const double tol = 1e-11;

    auto pivot = [&](int row, int col) {
        const double piv = t[row * total + col];
        for (int j = 0; j < total; ++j) t[row * total + j] /= piv;
        b[row] /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            const double f = t[i * total + col];
            if (f == 0.0) continue;
            for (int j = 0; j < total; ++j) t[i * total + j] -= f * t[row * total + j];
            b[i] -= f * b[row];
        }
        basis[row] = col;
    };

    auto run = [&](const std::vector<double>& cost, int ncols) -> int {
        for (int guard = 0; guard < 50000; ++guard) {
            // reduced costs with Bland's rule (lowest eligible index enters)
            std::vector<double> y(m);
            for (int i = 0; i < m; ++i) y[i] = cost[basis[i]];
            int enter = -1;
            for (int j = 0; j < ncols; ++j) {
                double red = cost[j];
                for (int i = 0; i < m; ++i) red -= y[i] * t[i * total + j];
                if (red > tol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return 0;
            int leave = -1;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                const double aij = t[i * total + enter];
                if (aij > tol) {
                    const double ratio = b[i] / aij;
                    if (leave < 0 || ratio < best - 1e-15 ||
                        (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
                        leave = i;
                        best = ratio;
                    }
                }
            }
            if (leave < 0) return 2;
            pivot(leave, enter);
        }
        return 2;
    };

    // phase one: minimize artificial sum == max -(sum of artificials)
    std::vector<double> cost1(total, 0.0);
    for (int j = n; j < total; ++j) cost1[j] = -1.0;
    if (run(cost1, total) != 0) return 1;
    double art = 0.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n) art += b[i];
    if (art > 1e-8) return 1;
    // drive remaining artificials out where possible
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        int col = -1;
        for (int j = 0; j < n; ++j)
            if (std::abs(t[i * total + j]) > tol) {
                col = j;
                break;
            }
        if (col >= 0) pivot(i, col);
    }

    std::vector<double> cost2(total, 0.0);
    for (int j = 0; j < n; ++j) cost2[j] = c[j];
    const int status = run(cost2, n);
    if (status != 0) return status;

    x.assign(n, 0.0);
    objective = 0.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) x[basis[i]] = b[i];
    for (int j = 0; j < n; ++j) objective += c[j] * x[j];
    return 0;
}

} // namespace pbe::detail

#endif
