#include "pbe/moments.hpp"

#include <cmath>

namespace pbe {

void shifted_legendre_values(double v, const VolumeDomain& domain, int order, double* out) {
    const double xi = 2.0 * (v - domain.v_min) / domain.length() - 1.0;
    out[0] = 1.0;
    if (order >= 1) out[1] = xi;
    for (int i = 2; i <= order; ++i)
        out[i] = ((2.0 * i - 1.0) * xi * out[i - 1] - (i - 1.0) * out[i - 2]) / i;
}

std::vector<double> legendre_node_matrix(int order, const QuadratureRule& rule) {
    const int n_q = rule.size();
    std::vector<double> mat((order + 1) * n_q);
    std::vector<double> col(order + 1);
    for (int q = 0; q < n_q; ++q) {
        shifted_legendre_values(rule.nodes[q], rule.interval, order, col.data());
        for (int i = 0; i <= order; ++i) mat[i * n_q + q] = col[i];
    }
    return mat;
}

std::vector<double> monomial_node_matrix(int order, const QuadratureRule& rule) {
    const int n_q = rule.size();
    std::vector<double> mat((order + 1) * n_q);
    for (int q = 0; q < n_q; ++q) {
        double pw = 1.0;
        for (int k = 0; k <= order; ++k) {
            mat[k * n_q + q] = pw;
            pw *= rule.nodes[q];
        }
    }
    return mat;
}

namespace {

// Coefficients of P_0..P_N in powers of xi, row-major lower triangular.
std::vector<double> legendre_xi_coefficients(int n) {
    std::vector<double> p((n + 1) * (n + 1), 0.0);
    auto row = [&](int i) { return p.data() + i * (n + 1); };
    row(0)[0] = 1.0;
    if (n >= 1) row(1)[1] = 1.0;
    for (int i = 2; i <= n; ++i) {
        for (int k = 0; k < i; ++k)
            row(i)[k + 1] = (2.0 * i - 1.0) / i * row(i - 1)[k];
        for (int k = 0; k <= i - 2; ++k)
            row(i)[k] -= (i - 1.0) / i * row(i - 2)[k];
    }
    return p;
}

// Coefficients of xi^0..xi^N in P_0..P_N (all nonnegative), from
// xi P_i = ((i+1) P_{i+1} + i P_{i-1}) / (2i+1).
std::vector<double> xi_in_legendre_coefficients(int n) {
    std::vector<double> q((n + 1) * (n + 1), 0.0);
    auto row = [&](int j) { return q.data() + j * (n + 1); };
    row(0)[0] = 1.0;
    for (int j = 1; j <= n; ++j) {
        const double* prev = row(j - 1);
        double* cur = row(j);
        for (int i = 0; i <= j - 1; ++i) {
            if (prev[i] == 0.0) continue;
            cur[i + 1] += prev[i] * (i + 1.0) / (2.0 * i + 1.0);
            if (i >= 1) cur[i - 1] += prev[i] * i / (2.0 * i + 1.0);
        }
    }
    return q;
}

std::vector<double> binomials(int n) {
    std::vector<double> c((n + 1) * (n + 1), 0.0);
    for (int k = 0; k <= n; ++k) {
        c[k * (n + 1)] = 1.0;
        for (int j = 1; j <= k; ++j)
            c[k * (n + 1) + j] =
                c[(k - 1) * (n + 1) + j - 1] + (j <= k - 1 ? c[(k - 1) * (n + 1) + j] : 0.0);
    }
    return c;
}

} // namespace

MomentVector basis_convert(const MomentVector& gamma, MomentBasis target) {
    if (gamma.basis == target) return gamma;
    const int n = gamma.order;
    const double a = gamma.domain.center();
    const double b = 0.5 * gamma.domain.length();
    const std::vector<double> binom = binomials(n);
    MomentVector out(n, target, gamma.domain);

    if (target == MomentBasis::shifted_legendre) {
        // gamma^xi_k = b^-k sum_j C(k,j) (-a)^(k-j) gamma_j, then project on P.
        std::vector<double> gx(n + 1, 0.0);
        for (int k = 0; k <= n; ++k) {
            double acc = 0.0;
            double apow = 1.0; // (-a)^(k-j) built from j = k downward
            for (int j = k; j >= 0; --j) {
                acc += binom[k * (n + 1) + j] * apow * gamma.values[j];
                apow *= -a;
            }
            gx[k] = acc / std::pow(b, k);
        }
        const std::vector<double> p = legendre_xi_coefficients(n);
        for (int i = 0; i <= n; ++i) {
            double acc = 0.0;
            for (int k = 0; k <= i; ++k) acc += p[i * (n + 1) + k] * gx[k];
            out.values[i] = acc;
        }
    } else {
        // gamma^xi_k = sum_i q[k][i] gamma~_i, then gamma_j = sum C a^() b^() gamma^xi.
        const std::vector<double> q = xi_in_legendre_coefficients(n);
        std::vector<double> gx(n + 1, 0.0);
        for (int k = 0; k <= n; ++k) {
            double acc = 0.0;
            for (int i = 0; i <= k; ++i) acc += q[k * (n + 1) + i] * gamma.values[i];
            gx[k] = acc;
        }
        for (int k = 0; k <= n; ++k) {
            double acc = 0.0;
            double apow = 1.0;
            double bpow = std::pow(b, k);
            for (int j = k; j >= 0; --j) {
                acc += binom[k * (n + 1) + j] * apow * bpow * gx[j];
                apow *= a;
                bpow /= b;
            }
            out.values[k] = acc;
        }
    }
    return out;
}

std::vector<double> monomial_in_legendre_matrix(int order, const VolumeDomain& domain) {
    const int n = order;
    const double a = domain.center();
    const double b = 0.5 * domain.length();
    const std::vector<double> q = xi_in_legendre_coefficients(n);
    const std::vector<double> binom = binomials(n);
    std::vector<double> r((n + 1) * (n + 1), 0.0);
    // v^k = sum_j C(k,j) a^(k-j) b^j xi^j and xi^j = sum_i q[j][i] m_i.
    for (int k = 0; k <= n; ++k) {
        double apow = 1.0, bpow = std::pow(b, k);
        for (int j = k; j >= 0; --j) {
            const double c = binom[k * (n + 1) + j] * apow * bpow;
            for (int i = 0; i <= j; ++i)
                r[k * (n + 1) + i] += c * q[j * (n + 1) + i];
            apow *= a;
            bpow /= b;
        }
    }
    return r;
}

} // namespace pbe
