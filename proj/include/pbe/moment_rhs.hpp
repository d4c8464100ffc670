#ifndef PBE_MOMENT_RHS_HPP
#define PBE_MOMENT_RHS_HPP

#include <cmath>
#include <vector>

#include "pbe/closures.hpp"
#include "pbe/kernels.hpp"
#include "pbe/moments.hpp"
#include "pbe/quadrature.hpp"

namespace pbe {

/// Aggregation/breakage source terms of the moment system, one vector per
/// term, monomial basis. On the continuous-closure path the no-breakup Dirac
/// share of beta, whose birth and death contributions cancel identically, is
/// omitted from both birth_brk and death_brk; the QMOM path keeps the sums
/// exactly as written, with the Dirac share added analytically.
struct SourceEvaluation {
    std::vector<double> birth_agg, death_agg, birth_brk, death_brk;

    std::vector<double> total() const;
};

/// Node tables for the source quadratures, built once per (kernels, rule,
/// order) and shared across cells and steps. All members are immutable after
/// construction.
struct SourceWorkspace {
    int order = 0;
    int n_q = 0;
    bool with_aggregation = true;
    bool with_breakage = true;
    QuadratureRule rule;
    std::vector<double> phi_mono;   // (order+1) x n_q
    std::vector<double> gamma_nodes;
    std::vector<double> one_minus_g1;
    std::vector<double> beta_ints;  // (order+1) x n_q: int v^k beta_smooth(v, v_i) dv
    // aggregation pair grid via the g substitution: partners g_ij and folded
    // weights w_j omega(v_i, g_ij) g'(v_i); birth and death are both sums
    // over this grid so their mass contributions cancel termwise
    std::vector<double> gsub_nodes; // n_q x n_q
    std::vector<double> asub_w;     // n_q x n_q
};

SourceWorkspace make_source_workspace(int order, const KernelSet& kernels,
                                      const QuadratureRule& rule,
                                      bool with_aggregation = true, bool with_breakage = true);

/// Density values of a reconstruction at the workspace nodes; throws
/// EvaluationError on non-finite values.
template <class F>
std::vector<double> density_nodes(F&& density, const SourceWorkspace& ws) {
    std::vector<double> f(ws.n_q);
    for (int q = 0; q < ws.n_q; ++q) {
        f[q] = density(ws.rule.nodes[q]);
        if (!std::isfinite(f[q]))
            throw EvaluationError("sources: non-finite reconstruction value at a node");
    }
    return f;
}

SourceEvaluation sources_continuous(const PolynomialReconstruction& recon,
                                    const SourceWorkspace& ws);
SourceEvaluation sources_continuous(const MaxEntReconstruction& recon,
                                    const SourceWorkspace& ws);
SourceEvaluation sources_continuous(const PolynomialReconstruction& recon,
                                    const KernelSet& kernels, const QuadratureRule& rule);
SourceEvaluation sources_continuous(const MaxEntReconstruction& recon,
                                    const KernelSet& kernels, const QuadratureRule& rule);

/// QMOM source sums: birth/death aggregation double sums over atom pairs and
/// the breakage sums with per-atom daughter moment integrals.
SourceEvaluation sources_qmom(const AtomicReconstruction& recon, const KernelSet& kernels,
                              const QuadratureRule& rule, int order,
                              bool with_aggregation = true, bool with_breakage = true);

/// Realizability-preserving time step for the homogeneous moment system:
/// safety / max(sup_v <f(g(v,.)) omega(v, g(v,.)) g'(v)>, sup_v Gamma(v)),
/// suprema over the quadrature nodes. +infinity when both kernels vanish.
/// P_N reconstructions enter with |f|; no realizability claim attaches to
/// that bound.
double cfl_homogeneous(const PolynomialReconstruction& recon, const SourceWorkspace& ws,
                       double safety);
double cfl_homogeneous(const MaxEntReconstruction& recon, const SourceWorkspace& ws,
                       double safety);
double cfl_homogeneous(const PolynomialReconstruction& recon, const KernelSet& kernels,
                       const QuadratureRule& rule, double safety);
double cfl_homogeneous(const MaxEntReconstruction& recon, const KernelSet& kernels,
                       const QuadratureRule& rule, double safety);
double cfl_homogeneous(const AtomicReconstruction& recon, const KernelSet& kernels,
                       const QuadratureRule& rule, double safety);

struct StepInfo {
    double regularization_r = 0.0;
    int newton_iterations = 0;
    double gradient_norm = 0.0;
};

/// One forward-Euler step of the homogeneous moment system under the given
/// closure. For the M_N path a regularized solve replaces the moments by the
/// regularized vector before the update.
MomentVector step_homogeneous(const MomentVector& gamma, ClosureKind kind,
                              const KernelSet& kernels, const QuadratureRule& rule,
                              const NewtonParams& params, double dt,
                              const SourceWorkspace* ws = nullptr, StepInfo* info = nullptr);

/// Atom count convention: N+1 moments feed n = floor((N+1)/2) atoms.
inline int qmom_atom_count(int order) { return (order + 1) / 2; }

} // namespace pbe

#endif
