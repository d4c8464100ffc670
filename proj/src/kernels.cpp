#include "pbe/kernels.hpp"

#include <cmath>

#include "pbe/quadrature.hpp"

namespace pbe {

void BreakageConfig::validate() const {
    if (p < 1) throw std::invalid_argument("BreakageConfig: p must be >= 1");
    if (m < 0) throw std::invalid_argument("BreakageConfig: m must be >= 0");
    for (double x : {C1, C2, alpha_d, epsilon, rho_d, sigma})
        if (!(x > 0.0)) throw std::invalid_argument("BreakageConfig: frequency parameters must be positive");
}

void AggregationConfig::validate() const {
    for (double x : {C_omega, k_omega, alpha_d, epsilon, rho_c, sigma, eta_c})
        if (!(x > 0.0)) throw std::invalid_argument("AggregationConfig: parameters must be positive");
}

namespace {

// Interval index l with v' in I_l, clamped to the last interval I_{2p-1}.
int interval_index(double v_prime, const VolumeDomain& domain, int p) {
    if (!domain.contains(v_prime))
        throw DomainError("fragment interval: v' outside [v_min, v_max]");
    int l;
    if (v_prime <= 2.0 * domain.v_min) {
        l = 1;
    } else {
        l = static_cast<int>(std::ceil(v_prime / domain.v_min - 1.0));
        if (l < 2) l = 2;
    }
    if (l > 2 * p - 1) l = 2 * p - 1;
    return l;
}

void fragment_and_cutoff(int l, int p, int& n_frag, int& k_cut) {
    if (l >= 2 * p - 1) {
        n_frag = p;
        k_cut = 1;
    } else if (l <= p) {
        n_frag = l;
        k_cut = l;
    } else {
        n_frag = p;
        k_cut = 2 * p - l;
    }
}

} // namespace

int fragment_count(double v_prime, const VolumeDomain& domain, int p) {
    int n_frag, k_cut;
    fragment_and_cutoff(interval_index(v_prime, domain, p), p, n_frag, k_cut);
    (void)k_cut;
    return n_frag;
}

std::vector<double> breakage_weights(double v_prime, const VolumeDomain& domain, int p) {
    int n_frag, k_cut;
    fragment_and_cutoff(interval_index(v_prime, domain, p), p, n_frag, k_cut);

    const int count = 2 * n_frag - 1;
    std::vector<double> g(count, 0.0);
    const double j = 3.0 - std::pow(2.0, -(n_frag - 1 - k_cut));
    for (int i = k_cut; i <= n_frag; ++i)
        g[i - 1] = 1.0 / (j * std::pow(2.0, n_frag - i));
    // upper half mirrors the lower half about N(v')
    for (int d = 1; d <= n_frag - 1; ++d)
        g[n_frag - 1 + d] = g[n_frag - 1 - d];
    return g;
}

DaughterProfile daughter_profile(double v_prime, const KernelSet& kernels) {
    DaughterProfile prof;
    prof.v_prime = v_prime;
    prof.weights = breakage_weights(v_prime, kernels.domain, kernels.breakage.p);
    prof.count = static_cast<int>(prof.weights.size());
    prof.fragments = (prof.count + 1) / 2;

    const int m = kernels.breakage.m;
    const double v_min = kernels.domain.v_min;
    prof.log_prefactor.assign(std::max(0, prof.count - 1), 0.0);
    for (int i = 2; i <= prof.count; ++i) {
        if (prof.weights[i - 1] == 0.0) continue;
        // i (mi+i-1)! / (m! (mi+i-m-2)!) via lgamma; (mi+i-1)! overflows for
        // moderate m*i, the log form does not.
        const double span = v_prime - i * v_min;
        if (!(span > 0.0)) continue;
        double lp = std::log(static_cast<double>(i));
        lp += std::lgamma(static_cast<double>(m * i + i));
        lp -= std::lgamma(static_cast<double>(m + 1));
        lp -= std::lgamma(static_cast<double>(m * i + i - m - 1));
        lp -= (m * i + i - 1) * std::log(span);
        prof.log_prefactor[i - 2] = lp;
    }
    return prof;
}

namespace {

// g_i * beta~_i(v, v'), zero outside [v_min, v' - (i-1) v_min]. Powers go
// through logs; zero exponents skip their factor so m = 0 stays well defined
// at v = v_min.
double beta_piece(double v, int i, const DaughterProfile& prof, const KernelSet& kernels) {
    const double g = prof.weights[i - 1];
    if (g == 0.0) return 0.0;
    const double v_min = kernels.domain.v_min;
    const int m = kernels.breakage.m;
    const double upper = prof.v_prime - (i - 1) * v_min;
    if (v < v_min || v > upper) return 0.0;

    double t = prof.log_prefactor[i - 2];
    if (m > 0) {
        const double d = v - v_min;
        if (d <= 0.0) return 0.0;
        t += m * std::log(d);
    }
    const int e2 = m * i + i - m - 2;
    if (e2 > 0) {
        const double d = upper - v;
        if (d <= 0.0) return 0.0;
        t += e2 * std::log(d);
    }
    return g * std::exp(t);
}

} // namespace

double beta_smooth(double v, const DaughterProfile& prof, const KernelSet& kernels) {
    if (kernels.beta_override) {
        if (v < kernels.domain.v_min || v > prof.v_prime) return 0.0;
        return kernels.beta_override(v, prof.v_prime);
    }
    if (v < kernels.domain.v_min || v > prof.v_prime) return 0.0;
    double val = 0.0;
    for (int i = 2; i <= prof.count; ++i)
        val += beta_piece(v, i, prof, kernels);
    return val;
}

double beta_smooth(double v, double v_prime, const KernelSet& kernels) {
    return beta_smooth(v, daughter_profile(v_prime, kernels), kernels);
}

DaughterEvaluation daughter_distribution(double v, double v_prime, const KernelSet& kernels) {
    if (!kernels.domain.contains(v) || !kernels.domain.contains(v_prime))
        throw DomainError("daughter_distribution: argument outside [v_min, v_max]");
    DaughterProfile prof = daughter_profile(v_prime, kernels);
    DaughterEvaluation out;
    out.smooth = (v > v_prime) ? 0.0 : beta_smooth(v, prof, kernels);
    out.atom_weight = prof.weights[0];
    out.atom_position = v_prime;
    return out;
}

double ct_breakage_rate(double v, const BreakageConfig& c) {
    const double inv = 1.0 + c.alpha_d;
    return c.C1 * std::cbrt(c.epsilon) / (inv * std::pow(v, 2.0 / 9.0)) *
           std::exp(-c.C2 * c.sigma * inv * inv /
                    (c.rho_d * std::pow(c.epsilon, 2.0 / 3.0) * std::pow(v, 5.0 / 9.0)));
}

double ct_aggregation_rate(double v, double w, const AggregationConfig& c) {
    const double inv = 1.0 + c.alpha_d;
    const double v3 = std::cbrt(v), w3 = std::cbrt(w);
    const double s = v3 + w3;
    const double ratio = v3 * w3 / s;
    const double expo = -c.k_omega * c.eta_c * c.rho_c * c.epsilon /
                        (c.sigma * c.sigma * inv * inv * inv) * ratio * ratio * ratio * ratio;
    return c.C_omega / inv * s * s * std::cbrt(c.epsilon) *
           std::sqrt(std::pow(v, 2.0 / 9.0) + std::pow(w, 2.0 / 9.0)) * std::exp(expo);
}

double breakage_frequency(double v, const KernelSet& kernels) {
    if (!kernels.domain.contains(v)) return 0.0;
    if (kernels.gamma_override) return kernels.gamma_override(v);
    return ct_breakage_rate(v, kernels.breakage);
}

double aggregation_kernel(double v, double w, const KernelSet& kernels) {
    if (!kernels.domain.contains(v) || !kernels.domain.contains(w)) return 0.0;
    if (v + w > kernels.domain.v_max) return 0.0;
    if (kernels.omega_override) return kernels.omega_override(v, w);
    return ct_aggregation_rate(v, w, kernels.aggregation);
}

std::vector<double> beta_monomial_integrals(double v_prime, const KernelSet& kernels,
                                            int max_power, int n_q, bool include_atom) {
    DaughterProfile prof = daughter_profile(v_prime, kernels);
    std::vector<double> result(max_power + 1, 0.0);
    const double v_min = kernels.domain.v_min;

    if (kernels.beta_override) {
        if (v_prime > v_min) {
            QuadratureRule sub = gauss_lobatto(n_q, VolumeDomain(v_min, v_prime));
            for (int q = 0; q < sub.size(); ++q) {
                const double b = kernels.beta_override(sub.nodes[q], v_prime) * sub.weights[q];
                double pw = 1.0;
                for (int k = 0; k <= max_power; ++k) {
                    result[k] += b * pw;
                    pw *= sub.nodes[q];
                }
            }
        }
    } else {
        for (int i = 2; i <= prof.count; ++i) {
            if (prof.weights[i - 1] == 0.0) continue;
            const double upper = v_prime - (i - 1) * v_min;
            if (!(upper > v_min)) continue;
            QuadratureRule sub = gauss_lobatto(n_q, VolumeDomain(v_min, upper));
            for (int q = 0; q < sub.size(); ++q) {
                const double b = beta_piece(sub.nodes[q], i, prof, kernels) * sub.weights[q];
                double pw = 1.0;
                for (int k = 0; k <= max_power; ++k) {
                    result[k] += b * pw;
                    pw *= sub.nodes[q];
                }
            }
        }
    }

    if (include_atom && prof.weights[0] != 0.0) {
        double pw = prof.weights[0];
        for (int k = 0; k <= max_power; ++k) {
            result[k] += pw;
            pw *= v_prime;
        }
    }
    return result;
}

} // namespace pbe
