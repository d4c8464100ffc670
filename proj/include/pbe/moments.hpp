#ifndef PBE_MOMENTS_HPP
#define PBE_MOMENTS_HPP

#include <vector>

#include "pbe/quadrature.hpp"
#include "pbe/types.hpp"

namespace pbe {

enum class MomentBasis { monomial, shifted_legendre };

/// Moments gamma_0..gamma_N of a density against a polynomial basis over a
/// fixed volume interval.
struct MomentVector {
    int order = 0;
    MomentBasis basis = MomentBasis::monomial;
    VolumeDomain domain;
    std::vector<double> values;

    MomentVector() = default;
    MomentVector(int n, MomentBasis b, const VolumeDomain& dom)
        : order(n), basis(b), domain(dom), values(n + 1, 0.0) {}
};

/// Shifted Legendre basis m_0..m_N at a point, by the three-term recursion on
/// xi = 2 (v - v_min) / (v_max - v_min) - 1.
void shifted_legendre_values(double v, const VolumeDomain& domain, int order, double* out);

/// (order+1) x n_q row-major node-value matrices.
std::vector<double> legendre_node_matrix(int order, const QuadratureRule& rule);
std::vector<double> monomial_node_matrix(int order, const QuadratureRule& rule);

/// Exact linear change of basis between monomial and shifted-Legendre
/// moments, routed through the centered variable xi to keep the triangular
/// factors well scaled.
MomentVector basis_convert(const MomentVector& gamma, MomentBasis target);

/// Lower-triangular R with v^k = sum_i R[k][i] m_i(v); all entries
/// nonnegative, so products with it do not cancel. Row-major (order+1)^2.
std::vector<double> monomial_in_legendre_matrix(int order, const VolumeDomain& domain);

/// Moments of a pointwise density by quadrature.
template <class F>
MomentVector moments_from_density(F&& density, int order, MomentBasis basis,
                                  const QuadratureRule& rule) {
    MomentVector gamma(order, basis, rule.interval);
    const int n_q = rule.size();
    std::vector<double> fw(n_q);
    for (int q = 0; q < n_q; ++q) fw[q] = density(rule.nodes[q]) * rule.weights[q];
    std::vector<double> basis_vals =
        basis == MomentBasis::monomial ? monomial_node_matrix(order, rule)
                                       : legendre_node_matrix(order, rule);
    for (int k = 0; k <= order; ++k)
        gamma.values[k] = simd::dot(basis_vals.data() + k * n_q, fw.data(), n_q);
    return gamma;
}

} // namespace pbe

#endif
