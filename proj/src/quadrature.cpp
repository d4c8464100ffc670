#include "pbe/quadrature.hpp"

#include <cmath>

namespace pbe {

// Lobatto nodes on [-1,1] are the roots of (1-x^2) P'_{n-1}(x). Starting from
// the Chebyshev-Gauss-Lobatto points, iterate the Newton-type update
//   x <- x - (x P_{n-1}(x) - P_{n-2}(x)) / (n P_{n-1}(x)),
// which uses (1-x^2) P'_{n-1}(x) = (n-1)(P_{n-2}(x) - x P_{n-1}(x)).
// Weights: w_i = 2 / (n (n-1) P_{n-1}(x_i)^2).
QuadratureRule gauss_lobatto(int n_q, const VolumeDomain& interval) {
    if (n_q < 2) throw std::invalid_argument("gauss_lobatto: n_q must be >= 2");

    const int deg = n_q - 1;
    std::vector<double> x(n_q), p(n_q);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < n_q; ++i)
        x[i] = -std::cos(pi * i / deg);

    auto legendre_high = [&](double xi, double& pn, double& pnm1) {
        double pkm1 = 1.0, pk = xi;
        for (int k = 2; k <= deg; ++k) {
            double pkp1 = ((2 * k - 1) * xi * pk - (k - 1) * pkm1) / k;
            pkm1 = pk;
            pk = pkp1;
        }
        pn = (deg >= 1) ? pk : 1.0;
        pnm1 = (deg >= 1) ? pkm1 : 0.0;
    };

    const double tol = 1e-14;
    for (int iter = 0; iter < 100; ++iter) {
        double shift_max = 0.0;
        for (int i = 1; i < n_q - 1; ++i) {
            double pn, pnm1;
            legendre_high(x[i], pn, pnm1);
            double dx = (x[i] * pn - pnm1) / (n_q * pn);
            x[i] -= dx;
            shift_max = std::max(shift_max, std::abs(dx));
        }
        if (shift_max < tol) break;
    }
    x.front() = -1.0;
    x.back() = 1.0;

    for (int i = 0; i < n_q; ++i) {
        double pn, pnm1;
        legendre_high(x[i], pn, pnm1);
        p[i] = pn;
    }

    QuadratureRule rule;
    rule.interval = interval;
    rule.nodes.resize(n_q);
    rule.weights.resize(n_q);
    const double mid = 0.5 * (interval.v_min + interval.v_max);
    const double half = 0.5 * interval.length();
    for (int i = 0; i < n_q; ++i) {
        rule.nodes[i] = mid + half * x[i];
        rule.weights[i] = half * 2.0 / (n_q * deg * p[i] * p[i]);
    }
    rule.nodes.front() = interval.v_min;
    rule.nodes.back() = interval.v_max;
    return rule;
}

} // namespace pbe
