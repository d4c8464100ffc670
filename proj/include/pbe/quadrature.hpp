#ifndef PBE_QUADRATURE_HPP
#define PBE_QUADRATURE_HPP

#include <vector>

#include "pbe/simd.hpp"
#include "pbe/types.hpp"

namespace pbe {

/// Gauss-Lobatto rule on an interval: both endpoints are nodes, interior
/// nodes are the roots of P'_{n-1}; exact for polynomials of degree 2n-3.
struct QuadratureRule {
    VolumeDomain interval;
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }
};

QuadratureRule gauss_lobatto(int n_q, const VolumeDomain& interval);

inline double integrate_values(const std::vector<double>& g, const QuadratureRule& rule) {
    return simd::dot(rule.weights.data(), g.data(), g.size());
}

template <class F>
double integrate(F&& g, const QuadratureRule& rule) {
    double acc = 0.0;
    std::vector<double> vals(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) vals[i] = g(rule.nodes[i]);
    acc = simd::dot(rule.weights.data(), vals.data(), vals.size());
    return acc;
}

} // namespace pbe

#endif
