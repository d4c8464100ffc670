#ifndef PBE_KERNELS_HPP
#define PBE_KERNELS_HPP

#include <functional>
#include <vector>

#include "pbe/types.hpp"

namespace pbe {

/// Multiple-breakage parameters: maximum fragment count p, shape parameter m
/// of the fragment densities, and the Coulaloglou-Tavlarides frequency
/// constants.
struct BreakageConfig {
    int p = 2;
    int m = 2;
    double C1 = 0.12;
    double C2 = 0.078;
    double alpha_d = 0.01;
    double epsilon = 0.004;
    double rho_d = 865.6;
    double sigma = 0.0361;

    void validate() const;
    bool operator==(const BreakageConfig&) const = default;
};

/// Coulaloglou-Tavlarides aggregation kernel constants.
struct AggregationConfig {
    double C_omega = 41.2;
    double k_omega = 1.33e10;
    double alpha_d = 0.01;
    double epsilon = 0.004;
    double rho_c = 1000.0;
    double sigma = 0.0361;
    double eta_c = 0.001;

    void validate() const;
    bool operator==(const AggregationConfig&) const = default;
};

/// The kernel triple (omega, Gamma, beta). Both rate kernels vanish outside
/// [v_min, v_max]; the aggregation cutoff omega = 0 for v + w > v_max is
/// enforced here so every caller (quadrature sums, QMOM sums, fluxes) sees it
/// automatically. The override hooks replace the rate formulas in tests while
/// keeping the support/cutoff conventions.
struct KernelSet {
    VolumeDomain domain;
    BreakageConfig breakage;
    AggregationConfig aggregation;

    std::function<double(double)> gamma_override;
    std::function<double(double, double)> omega_override;
    std::function<double(double, double)> beta_override;

    KernelSet(const VolumeDomain& dom, const BreakageConfig& brk, const AggregationConfig& agg)
        : domain(dom), breakage(brk), aggregation(agg) {
        brk.validate();
        agg.validate();
    }
};

/// Fragment count N(v') from the interval decomposition
/// I_1 = [v_min, 2 v_min], I_l = ]l v_min, (l+1) v_min] for l = 2..2p-2,
/// I_{2p-1} = ](2p-1) v_min, v_max].
int fragment_count(double v_prime, const VolumeDomain& domain, int p);

/// Breakage weights g_1..g_{2N(v')-1}: sum to 1, mean fragment count N(v'),
/// mirror-symmetric about index N(v'), g_i = 0 for v' < i v_min.
std::vector<double> breakage_weights(double v_prime, const VolumeDomain& domain, int p);

/// Per-mother cache of the daughter distribution: fragment count, weights and
/// the log-prefactors of the i-fragment densities.
struct DaughterProfile {
    double v_prime = 0.0;
    int fragments = 0;     // N(v')
    int count = 0;         // c(v') = 2 N(v') - 1
    std::vector<double> weights;
    std::vector<double> log_prefactor; // index i-2 for i = 2..count
};

DaughterProfile daughter_profile(double v_prime, const KernelSet& kernels);

/// Smooth part of beta(v, v'): sum of the i >= 2 fragment densities. The i=1
/// Dirac atom at v' is excluded (see daughter_distribution).
double beta_smooth(double v, const DaughterProfile& profile, const KernelSet& kernels);
double beta_smooth(double v, double v_prime, const KernelSet& kernels);

/// Pointwise daughter distribution: smooth part plus the (weight, location)
/// pair of the no-breakup Dirac atom, reported separately since a Dirac
/// cannot be sampled.
struct DaughterEvaluation {
    double smooth = 0.0;
    double atom_weight = 0.0;
    double atom_position = 0.0;
};

DaughterEvaluation daughter_distribution(double v, double v_prime, const KernelSet& kernels);

/// Coulaloglou-Tavlarides breakage frequency; 0 outside [v_min, v_max].
double breakage_frequency(double v, const KernelSet& kernels);

/// Aggregation kernel with domain support and the v + w > v_max cutoff
/// enforced; symmetric in (v, w).
double aggregation_kernel(double v, double w, const KernelSet& kernels);

/// Raw rate formulas without the support/cutoff conventions.
double ct_breakage_rate(double v, const BreakageConfig& cfg);
double ct_aggregation_rate(double v, double w, const AggregationConfig& cfg);

/// Moment integrals of the daughter distribution,
///   I_k = \int v^k beta(v, v') dv  for k = 0..max_power,
/// with the smooth part integrated piecewise over each fragment density's
/// support by scaled Lobatto rules (the integrand is polynomial there) and
/// the Dirac share g_1(v') v'^k added analytically when requested.
std::vector<double> beta_monomial_integrals(double v_prime, const KernelSet& kernels,
                                            int max_power, int n_q, bool include_atom);

} // namespace pbe

#endif
