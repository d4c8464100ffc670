#ifndef PBE_CLOSURES_HPP
#define PBE_CLOSURES_HPP

#include <vector>

#include "pbe/moments.hpp"
#include "pbe/quadrature.hpp"
#include "pbe/types.hpp"

namespace pbe {

enum class ClosureKind { pn, mn, qmom };

/// Legendre-expansion density of the polynomial closure. May take negative
/// values; that is a property of the closure, not an error.
struct PolynomialReconstruction {
    VolumeDomain domain;
    std::vector<double> coefficients; // a_0..a_N

    double density_at(double v) const;
};

/// f_PN from shifted-Legendre moments: a_i = gamma~_i (2i+1) / (v_max-v_min).
PolynomialReconstruction pn_close(const MomentVector& gamma);

/// Weighted Dirac atoms of the quadrature method of moments.
struct AtomicReconstruction {
    int n = 0;
    std::vector<double> weights;
    std::vector<double> abscissas;

    double monomial_moment(int k) const;
};

/// Moment inversion: monomial moments gamma_0..gamma_{2n-1} -> n atoms, via
/// the Wheeler recurrence and the implicit-QL eigen decomposition of the
/// Jacobi matrix. Throws RealizabilityError (with the offending moment order)
/// on a nonpositive pivot.
AtomicReconstruction wheeler_invert(const MomentVector& gamma, int n_atoms);

/// Newton/regularization parameters of the dual maximum-entropy solve.
struct NewtonParams {
    int k_max = 400;
    double eps = 2.220446049250313e-16; // 2^-52
    double chi = 0.6;
    double tau = 1e-9;
    std::vector<double> r_list{0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0};

    void validate() const;
    bool operator==(const NewtonParams&) const = default;
};

/// Maximum-entropy ansatz exp(alpha . m(v)) with the multipliers reported in
/// the monomial basis; alpha_legendre carries the same multipliers on the
/// shifted-Legendre basis, which is the numerically safe evaluation route.
struct MaxEntReconstruction {
    VolumeDomain domain;
    std::vector<double> alpha;
    std::vector<double> alpha_legendre;
    double regularization_r = 0.0;
    MomentVector regularized_moments;
    int newton_iterations = 0;
    double final_gradient_norm = 0.0;

    double density_at(double v) const;
};

/// Solve the dual problem for monomial moments gamma. Newton iteration with
/// an adaptive (Cholesky-orthogonalized) basis and Armijo backtracking,
/// restarted along the regularization ladder r_list when it fails; on a
/// regularized solve the returned moments are (1-r) gamma + r Q_mono, which
/// leaves gamma_0 and gamma_1 unchanged. Requires n_q >= N+1.
MaxEntReconstruction maxent_solve(const MomentVector& gamma, const QuadratureRule& rule,
                                  const NewtonParams& params);

/// Membership in the open quadrature-realizable cone
/// R^Q = { gamma = sum_i w_i m(v_i) f_i, f_i > 0 }, decided by a linear
/// feasibility solve maximizing the interior margin of the f_i.
bool realizable_q(const MomentVector& gamma, const QuadratureRule& rule);

} // namespace pbe

#endif
