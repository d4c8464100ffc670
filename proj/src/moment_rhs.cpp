#include "pbe/moment_rhs.hpp"

#include <cmath>
#include <limits>

#include "pbe/simd.hpp"

namespace pbe {

std::vector<double> SourceEvaluation::total() const {
    std::vector<double> t(birth_agg.size());
    for (std::size_t k = 0; k < t.size(); ++k)
        t[k] = birth_agg[k] - death_agg[k] + birth_brk[k] - death_brk[k];
    return t;
}

SourceWorkspace make_source_workspace(int order, const KernelSet& kernels,
                                      const QuadratureRule& rule,
                                      bool with_aggregation, bool with_breakage) {
    SourceWorkspace ws;
    ws.order = order;
    ws.n_q = rule.size();
    ws.with_aggregation = with_aggregation;
    ws.with_breakage = with_breakage;
    ws.rule = rule;
    ws.phi_mono = monomial_node_matrix(order, rule);

    const int n_q = ws.n_q;
    const VolumeDomain& dom = kernels.domain;

    ws.gamma_nodes.assign(n_q, 0.0);
    ws.one_minus_g1.assign(n_q, 0.0);
    ws.beta_ints.assign(static_cast<std::size_t>(order + 1) * n_q, 0.0);
    if (with_breakage) {
        for (int q = 0; q < n_q; ++q) {
            const double vp = rule.nodes[q];
            ws.gamma_nodes[q] = breakage_frequency(vp, kernels);
            const DaughterProfile prof = daughter_profile(vp, kernels);
            ws.one_minus_g1[q] = 1.0 - prof.weights[0];
            const std::vector<double> ints =
                beta_monomial_integrals(vp, kernels, order, n_q, /*include_atom=*/false);
            for (int k = 0; k <= order; ++k)
                ws.beta_ints[static_cast<std::size_t>(k) * n_q + q] = ints[k];
        }
    }

    if (with_aggregation) {
        ws.gsub_nodes.assign(static_cast<std::size_t>(n_q) * n_q, 0.0);
        ws.asub_w.assign(static_cast<std::size_t>(n_q) * n_q, 0.0);
        const double len = dom.length();
        for (int i = 0; i < n_q; ++i) {
            const double v = rule.nodes[i];
            const double gprime = (dom.v_max - v) / len;
            for (int j = 0; j < n_q; ++j) {
                const double g = gprime * (rule.nodes[j] - dom.v_min) + dom.v_min;
                ws.gsub_nodes[static_cast<std::size_t>(i) * n_q + j] = g;
                ws.asub_w[static_cast<std::size_t>(i) * n_q + j] =
                    rule.weights[j] * aggregation_kernel(v, g, kernels) * gprime;
            }
        }
    }
    return ws;
}

namespace {

template <class F>
SourceEvaluation sources_impl(F&& density, const SourceWorkspace& ws) {
    const int n = ws.order + 1;
    const int n_q = ws.n_q;
    SourceEvaluation src;
    src.birth_agg.assign(n, 0.0);
    src.death_agg.assign(n, 0.0);
    src.birth_brk.assign(n, 0.0);
    src.death_brk.assign(n, 0.0);

    const std::vector<double> f = density_nodes(density, ws);
    std::vector<double> node_term(n_q, 0.0);

    if (ws.with_breakage) {
        // birth: outer over mothers with the f-independent daughter moment
        // integrals; death: Gamma (1 - g_1) f projected on the monomials.
        std::vector<double> gf(n_q);
        for (int q = 0; q < n_q; ++q) gf[q] = ws.rule.weights[q] * ws.gamma_nodes[q] * f[q];
        for (int k = 0; k < n; ++k)
            src.birth_brk[k] =
                simd::dot(ws.beta_ints.data() + static_cast<std::size_t>(k) * n_q, gf.data(), n_q);
        for (int q = 0; q < n_q; ++q) node_term[q] = gf[q] * ws.one_minus_g1[q];
        for (int k = 0; k < n; ++k)
            src.death_brk[k] = simd::dot(ws.phi_mono.data() + static_cast<std::size_t>(k) * n_q,
                                         node_term.data(), n_q);
    }

    if (ws.with_aggregation) {
        // Both aggregation terms are sums over the same substituted pair grid
        //   W_ij = w_i w_j omega(v_i, g_ij) g'(v_i) f(v_i) f(g_ij):
        // birth projects on m(v_i + g_ij)/2 + its mirror, death on the
        // symmetrized (m(v_i) + m(g_ij))/2, so the first-moment sums agree
        // termwise and aggregation conserves mass exactly, like the QMOM
        // sums do.
        std::vector<double> pv(n), pg(n), psum(n);
        for (int i = 0; i < n_q; ++i) {
            const double v = ws.rule.nodes[i];
            const double wf = ws.rule.weights[i] * f[i];
            if (wf == 0.0) continue;
            const std::size_t off = static_cast<std::size_t>(i) * n_q;
            for (int j = 0; j < n_q; ++j) {
                const double wq = ws.asub_w[off + j];
                if (wq == 0.0) continue;
                const double g = ws.gsub_nodes[off + j];
                const double pair_w = wf * wq * density(g);
                if (pair_w == 0.0) continue;
                double a = 1.0, b = 1.0, c = 1.0;
                for (int k = 0; k < n; ++k) {
                    src.birth_agg[k] += 0.5 * pair_w * c;
                    src.death_agg[k] += 0.5 * pair_w * (a + b);
                    a *= v;
                    b *= g;
                    c *= v + g;
                }
            }
        }
    }
    return src;
}

template <class F>
double cfl_impl(F&& density, const SourceWorkspace& ws, double safety) {
    if (!(safety > 0.0 && safety <= 1.0))
        throw std::invalid_argument("cfl_homogeneous: safety must be in (0, 1]");
    double bound = 0.0;
    if (ws.with_breakage)
        bound = simd::max_val(ws.gamma_nodes.data(), ws.n_q);
    if (ws.with_aggregation) {
        const int n_q = ws.n_q;
        for (int i = 0; i < n_q; ++i) {
            double acc = 0.0;
            const std::size_t off = static_cast<std::size_t>(i) * n_q;
            for (int j = 0; j < n_q; ++j)
                acc += ws.asub_w[off + j] * std::abs(density(ws.gsub_nodes[off + j]));
            bound = std::max(bound, acc);
        }
    }
    if (bound <= 0.0) return std::numeric_limits<double>::infinity();
    return safety / bound;
}

} // namespace

SourceEvaluation sources_continuous(const PolynomialReconstruction& recon,
                                    const SourceWorkspace& ws) {
    return sources_impl([&](double v) { return recon.density_at(v); }, ws);
}

SourceEvaluation sources_continuous(const MaxEntReconstruction& recon,
                                    const SourceWorkspace& ws) {
    return sources_impl([&](double v) { return recon.density_at(v); }, ws);
}

SourceEvaluation sources_continuous(const PolynomialReconstruction& recon,
                                    const KernelSet& kernels, const QuadratureRule& rule) {
    // ad-hoc workspace: fine for tests, hot paths reuse a shared one
    int order = static_cast<int>(recon.coefficients.size()) - 1;
    return sources_continuous(recon, make_source_workspace(order, kernels, rule));
}

SourceEvaluation sources_continuous(const MaxEntReconstruction& recon,
                                    const KernelSet& kernels, const QuadratureRule& rule) {
    int order = static_cast<int>(recon.alpha.size()) - 1;
    return sources_continuous(recon, make_source_workspace(order, kernels, rule));
}

SourceEvaluation sources_qmom(const AtomicReconstruction& recon, const KernelSet& kernels,
                              const QuadratureRule& rule, int order,
                              bool with_aggregation, bool with_breakage) {
    const int n = order + 1;
    SourceEvaluation src;
    src.birth_agg.assign(n, 0.0);
    src.death_agg.assign(n, 0.0);
    src.birth_brk.assign(n, 0.0);
    src.death_brk.assign(n, 0.0);

    if (with_aggregation) {
        for (int i = 0; i < recon.n; ++i) {
            for (int j = 0; j < recon.n; ++j) {
                const double om = aggregation_kernel(recon.abscissas[i], recon.abscissas[j], kernels);
                if (om == 0.0) continue;
                const double wij = recon.weights[i] * recon.weights[j] * om;
                double pw_sum = 1.0;
                const double vsum = recon.abscissas[i] + recon.abscissas[j];
                double pw_j = 1.0;
                for (int k = 0; k < n; ++k) {
                    src.birth_agg[k] += 0.5 * wij * pw_sum;
                    src.death_agg[k] += wij * pw_j;
                    pw_sum *= vsum;
                    pw_j *= recon.abscissas[j];
                }
            }
        }
    }

    if (with_breakage) {
        for (int i = 0; i < recon.n; ++i) {
            const double vi = recon.abscissas[i];
            const double wg = recon.weights[i] * breakage_frequency(vi, kernels);
            if (wg == 0.0) continue;
            const std::vector<double> ints =
                beta_monomial_integrals(vi, kernels, order, rule.size(), /*include_atom=*/true);
            double pw = 1.0;
            for (int k = 0; k < n; ++k) {
                src.birth_brk[k] += wg * ints[k];
                src.death_brk[k] += wg * pw;
                pw *= vi;
            }
        }
    }
    return src;
}

double cfl_homogeneous(const PolynomialReconstruction& recon, const SourceWorkspace& ws,
                       double safety) {
    return cfl_impl([&](double v) { return recon.density_at(v); }, ws, safety);
}

double cfl_homogeneous(const MaxEntReconstruction& recon, const SourceWorkspace& ws,
                       double safety) {
    return cfl_impl([&](double v) { return recon.density_at(v); }, ws, safety);
}

double cfl_homogeneous(const PolynomialReconstruction& recon, const KernelSet& kernels,
                       const QuadratureRule& rule, double safety) {
    return cfl_homogeneous(recon, make_source_workspace(0, kernels, rule), safety);
}

double cfl_homogeneous(const MaxEntReconstruction& recon, const KernelSet& kernels,
                       const QuadratureRule& rule, double safety) {
    return cfl_homogeneous(recon, make_source_workspace(0, kernels, rule), safety);
}

double cfl_homogeneous(const AtomicReconstruction& recon, const KernelSet& kernels,
                       const QuadratureRule& rule, double safety) {
    if (!(safety > 0.0 && safety <= 1.0))
        throw std::invalid_argument("cfl_homogeneous: safety must be in (0, 1]");
    double bound = 0.0;
    for (double v : rule.nodes) bound = std::max(bound, breakage_frequency(v, kernels));
    for (double v : rule.nodes) {
        double acc = 0.0;
        for (int a = 0; a < recon.n; ++a)
            acc += recon.weights[a] * aggregation_kernel(v, recon.abscissas[a], kernels);
        bound = std::max(bound, acc);
    }
    if (bound <= 0.0) return std::numeric_limits<double>::infinity();
    return safety / bound;
}

MomentVector step_homogeneous(const MomentVector& gamma, ClosureKind kind,
                              const KernelSet& kernels, const QuadratureRule& rule,
                              const NewtonParams& params, double dt,
                              const SourceWorkspace* ws, StepInfo* info) {
    SourceWorkspace local;
    if (!ws) {
        local = make_source_workspace(gamma.order, kernels, rule);
        ws = &local;
    }

    MomentVector out = gamma;
    SourceEvaluation src;
    switch (kind) {
    case ClosureKind::pn: {
        const PolynomialReconstruction rec =
            pn_close(basis_convert(gamma, MomentBasis::shifted_legendre));
        src = sources_continuous(rec, *ws);
        break;
    }
    case ClosureKind::mn: {
        const MaxEntReconstruction rec = maxent_solve(gamma, rule, params);
        if (rec.regularization_r > 0.0) out = rec.regularized_moments;
        if (info) {
            info->regularization_r = rec.regularization_r;
            info->newton_iterations = rec.newton_iterations;
            info->gradient_norm = rec.final_gradient_norm;
        }
        src = sources_continuous(rec, *ws);
        break;
    }
    case ClosureKind::qmom: {
        const AtomicReconstruction rec = wheeler_invert(gamma, qmom_atom_count(gamma.order));
        src = sources_qmom(rec, kernels, rule, gamma.order, ws->with_aggregation,
                           ws->with_breakage);
        break;
    }
    }

    const std::vector<double> t = src.total();
    for (int k = 0; k <= gamma.order; ++k) out.values[k] += dt * t[k];
    return out;
}

} // namespace pbe
