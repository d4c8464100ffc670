#include "pbe/closures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pbe/detail/linalg.hpp"
#include "pbe/simd.hpp"

namespace pbe {

// ----------------------------------------------------------------- P_N ----

double PolynomialReconstruction::density_at(double v) const {
    if (v < domain.v_min || v > domain.v_max) return 0.0;
    const int n = static_cast<int>(coefficients.size());
    const double xi = 2.0 * (v - domain.v_min) / domain.length() - 1.0;
    double pm1 = 1.0, p = xi;
    double acc = coefficients[0];
    if (n > 1) acc += coefficients[1] * xi;
    for (int i = 2; i < n; ++i) {
        const double pi = ((2.0 * i - 1.0) * xi * p - (i - 1.0) * pm1) / i;
        acc += coefficients[i] * pi;
        pm1 = p;
        p = pi;
    }
    return acc;
}

PolynomialReconstruction pn_close(const MomentVector& gamma) {
    if (gamma.basis != MomentBasis::shifted_legendre)
        throw std::invalid_argument("pn_close: expects shifted-Legendre moments");
    PolynomialReconstruction rec;
    rec.domain = gamma.domain;
    rec.coefficients.resize(gamma.order + 1);
    const double len = gamma.domain.length();
    for (int i = 0; i <= gamma.order; ++i)
        rec.coefficients[i] = gamma.values[i] * (2.0 * i + 1.0) / len;
    return rec;
}

// -------------------------------------------------------------- Wheeler ----

double AtomicReconstruction::monomial_moment(int k) const {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += weights[j] * std::pow(abscissas[j], k);
    return acc;
}

AtomicReconstruction wheeler_invert(const MomentVector& gamma, int n_atoms) {
    if (gamma.basis != MomentBasis::monomial)
        throw std::invalid_argument("wheeler_invert: expects monomial moments");
    if (n_atoms < 1) throw std::invalid_argument("wheeler_invert: n_atoms must be >= 1");
    if (gamma.order + 1 < 2 * n_atoms)
        throw std::invalid_argument("wheeler_invert: needs 2n moments");
    for (double x : gamma.values)
        if (!std::isfinite(x)) throw std::invalid_argument("wheeler_invert: non-finite moment");

    const int n = n_atoms;
    if (!(gamma.values[0] > 0.0))
        throw RealizabilityError(0, "wheeler_invert: gamma_0 must be positive");

    // Power-of-two rescaling of the volume variable keeps the moment table
    // well conditioned without perturbing the arithmetic.
    double s = 1.0;
    const double mean = gamma.values[1] / gamma.values[0];
    if (mean > 0.0 && std::isfinite(mean)) s = std::exp2(std::round(std::log2(mean)));
    std::vector<double> nu(2 * n);
    double spow = 1.0;
    for (int k = 0; k < 2 * n; ++k) {
        nu[k] = gamma.values[k] / spow;
        spow *= s;
    }

    std::vector<double> a(n, 0.0), b(n, 0.0);
    a[0] = nu[1] / nu[0];
    if (n > 1) {
        // sigma rows of the Wheeler (modified Chebyshev with raw moments)
        // recursion; only two previous rows are needed.
        std::vector<double> prev2(2 * n, 0.0), prev(2 * n, 0.0), cur(2 * n, 0.0);
        for (int l = 0; l < 2 * n; ++l) prev[l] = nu[l];
        double diag_prev = nu[0];
        for (int k = 1; k < n; ++k) {
            std::fill(cur.begin(), cur.end(), 0.0);
            for (int l = k; l <= 2 * n - 1 - k; ++l)
                cur[l] = prev[l + 1] - a[k - 1] * prev[l] - (k >= 2 ? b[k - 1] * prev2[l] : 0.0);
            const double diag = cur[k];
            if (!(diag > 0.0))
                throw RealizabilityError(2 * k,
                    "wheeler_invert: nonpositive pivot, moments through order " +
                        std::to_string(2 * k) + " are not realizable");
            b[k] = diag / diag_prev;
            a[k] = cur[k + 1] / diag - prev[k] / diag_prev;
            diag_prev = diag;
            std::swap(prev2, prev);
            std::swap(prev, cur);
        }
    }

    std::vector<double> d(a), e(n > 1 ? n - 1 : 0), z(n, 0.0);
    for (int k = 1; k < n; ++k) e[k - 1] = std::sqrt(b[k]);
    z[0] = 1.0;
    if (!detail::tridiag_ql(d, e, z))
        throw EvaluationError("wheeler_invert: tridiagonal eigensolver failed");

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return d[i] < d[j]; });

    AtomicReconstruction rec;
    rec.n = n;
    rec.weights.resize(n);
    rec.abscissas.resize(n);
    for (int j = 0; j < n; ++j) {
        rec.abscissas[j] = s * d[idx[j]];
        rec.weights[j] = nu[0] * z[idx[j]] * z[idx[j]];
    }
    return rec;
}

// -------------------------------------------------------------- maxent ----

void NewtonParams::validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("NewtonParams: tau must be positive");
    if (k_max < 1) throw std::invalid_argument("NewtonParams: k_max must be >= 1");
    if (!(chi > 0.0 && chi < 1.0)) throw std::invalid_argument("NewtonParams: chi in (0,1)");
    if (r_list.empty() || r_list.front() != 0.0 || r_list.back() != 1.0)
        throw std::invalid_argument("NewtonParams: r_list must start at 0 and end at 1");
    for (std::size_t i = 1; i < r_list.size(); ++i)
        if (r_list[i] < r_list[i - 1])
            throw std::invalid_argument("NewtonParams: r_list must be nondecreasing");
}

double MaxEntReconstruction::density_at(double v) const {
    if (v < domain.v_min || v > domain.v_max) return 0.0;
    const int n = static_cast<int>(alpha_legendre.size());
    std::vector<double> m(n);
    shifted_legendre_values(v, domain, n - 1, m.data());
    return std::exp(simd::dot(alpha_legendre.data(), m.data(), n));
}

namespace {

struct NewtonScratch {
    std::vector<double> eta, g_nodes, wg;
};

// One Newton run at a fixed target. phi_leg / phi_mono are (n x n_q)
// node-value matrices; beta0 are initial multipliers on the shifted-Legendre
// basis. On exit beta/c describe the working basis: G = exp(beta . C m_leg).
struct NewtonOutcome {
    bool converged = false;
    int iterations = 0;
    double grad_norm = std::numeric_limits<double>::infinity();
    std::vector<double> beta, c;
};

void eval_exp_nodes(const std::vector<double>& p, const std::vector<double>& beta, int n,
                    int n_q, const double* w, NewtonScratch& s) {
    s.eta.assign(n_q, 0.0);
    for (int i = 0; i < n; ++i)
        simd::axpy(beta[i], p.data() + static_cast<std::size_t>(i) * n_q, s.eta.data(), n_q);
    s.g_nodes.resize(n_q);
    for (int q = 0; q < n_q; ++q) s.g_nodes[q] = std::exp(s.eta[q]);
    s.wg.resize(n_q);
    simd::hadamard(w, s.g_nodes.data(), s.wg.data(), n_q);
}

// rows of x (block size cols) <- T^{-1} x for lower-triangular t
void rebase_rows(const std::vector<double>& t, int n, double* x, int cols) {
    for (int i = 0; i < n; ++i) {
        double* xi = x + static_cast<std::size_t>(i) * cols;
        for (int k = 0; k < i; ++k)
            simd::axpy(-t[i * n + k], x + static_cast<std::size_t>(k) * cols, xi, cols);
        simd::scale(1.0 / t[i * n + i], xi, cols);
    }
}

NewtonOutcome newton_solve(const std::vector<double>& phi_leg,
                           const std::vector<double>& phi_mono,
                           const QuadratureRule& rule, int n,
                           const std::vector<double>& gamma_target_mono,
                           const std::vector<double>& u_leg,
                           const std::vector<double>& beta0,
                           const NewtonParams& params) {
    const int n_q = rule.size();
    const double* w = rule.weights.data();

    NewtonOutcome out;
    out.beta = beta0;
    out.c.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) out.c[i * n + i] = 1.0;

    std::vector<double> p = phi_leg;           // working-basis node values
    std::vector<double> u = u_leg;             // target in working basis
    std::vector<double> h(static_cast<std::size_t>(n) * n);
    std::vector<double> g(n), d(n), beta_trial(n), beta_old(n), gm(n);
    NewtonScratch s, strial;

    eval_exp_nodes(p, out.beta, n, n_q, w, s);

    for (int iter = 0; iter < params.k_max; ++iter) {
        out.iterations = iter;
        for (int q = 0; q < n_q; ++q)
            if (!std::isfinite(s.wg[q])) return out;

        // Hessian in the current basis, then re-orthogonalize against its
        // Cholesky factor so the Newton direction is just the residual.
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j)
                h[i * n + j] = simd::dot3(p.data() + static_cast<std::size_t>(i) * n_q,
                                          p.data() + static_cast<std::size_t>(j) * n_q,
                                          s.wg.data(), n_q);
        if (!detail::cholesky(h, n, params.eps)) return out;

        rebase_rows(h, n, p.data(), n_q);
        rebase_rows(h, n, out.c.data(), n);
        detail::forward_solve(h, n, u.data());
        beta_old = out.beta;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = i; k < n; ++k) acc += h[k * n + i] * beta_old[k];
            out.beta[i] = acc;
        }

        // stopping criterion on the monomial-basis gradient
        double norm2 = 0.0;
        for (int k = 0; k < n; ++k) {
            gm[k] = simd::dot(phi_mono.data() + static_cast<std::size_t>(k) * n_q,
                              s.wg.data(), n_q) - gamma_target_mono[k];
            norm2 += gm[k] * gm[k];
        }
        out.grad_norm = std::sqrt(norm2);
        if (out.grad_norm < params.tau) {
            out.converged = true;
            return out;
        }

        for (int i = 0; i < n; ++i) {
            g[i] = simd::dot(p.data() + static_cast<std::size_t>(i) * n_q, s.wg.data(), n_q) - u[i];
            d[i] = -g[i];
        }
        const double slope = -simd::dot(g.data(), g.data(), n);
        const double h0 = simd::sum(s.wg.data(), n_q) - simd::dot(out.beta.data(), u.data(), n);

        // The sufficient-decrease test carries an eps |h| slack: near the
        // optimum the true decrease drops below the floating-point
        // resolution of h and the bare Armijo condition would reject the
        // final Newton steps.
        const double slack = params.eps * std::abs(h0);
        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 150; ++bt) {
            for (int i = 0; i < n; ++i) beta_trial[i] = out.beta[i] + step * d[i];
            eval_exp_nodes(p, beta_trial, n, n_q, w, strial);
            const double ht = simd::sum(strial.wg.data(), n_q) -
                              simd::dot(beta_trial.data(), u.data(), n);
            if (std::isfinite(ht) && ht <= h0 + 1e-4 * step * slope + slack) {
                accepted = true;
                break;
            }
            step *= params.chi;
            if (step < 1e-40) break;
        }
        if (!accepted) return out; // stalled at roundoff; caller regularizes

        out.beta = beta_trial;
        std::swap(s, strial);
    }
    return out;
}

} // namespace

MaxEntReconstruction maxent_solve(const MomentVector& gamma, const QuadratureRule& rule,
                                  const NewtonParams& params) {
    params.validate();
    if (gamma.basis != MomentBasis::monomial)
        throw std::invalid_argument("maxent_solve: expects monomial moments");
    const int n = gamma.order + 1;
    const int n_q = rule.size();
    if (n_q < n)
        throw std::invalid_argument("maxent_solve: needs n_q >= N+1 for a full-rank Hessian");
    for (double x : gamma.values)
        if (!std::isfinite(x)) throw OptimizationFailure(
            std::numeric_limits<double>::infinity(), "maxent_solve: non-finite moment");
    if (!(gamma.values[0] > 0.0))
        throw OptimizationFailure(std::numeric_limits<double>::infinity(),
                                  "maxent_solve: gamma_0 must be positive");

    // The stopping criterion and regularization targets live on the monomial
    // basis of v / s with s the nearest power of two to v_max: with raw SI
    // volumes the moments beyond order one drop below any absolute tolerance
    // and the criterion would stop constraining them. Power-of-two scaling is
    // exact, so the returned regularized moments match bitwise.
    const double vscale = std::exp2(std::round(std::log2(gamma.domain.v_max)));
    MomentVector gamma_s = gamma;
    {
        double spow = 1.0;
        for (int k = 0; k < n; ++k) {
            gamma_s.values[k] = gamma.values[k] / spow;
            spow *= vscale;
        }
    }

    const std::vector<double> phi_leg = legendre_node_matrix(gamma.order, rule);
    std::vector<double> phi_mono = monomial_node_matrix(gamma.order, rule);
    {
        double sc = 1.0;
        for (int k = 0; k < n; ++k) {
            simd::scale(sc, phi_mono.data() + static_cast<std::size_t>(k) * n_q, n_q);
            sc /= vscale;
        }
    }

    // Initial guess: the two-moment subproblem started from (ln gamma_0, 0),
    // padded with zeros. Affine exponents expand identically in both bases.
    std::vector<double> beta0(n, 0.0);
    int m1_iterations = 0;
    if (gamma.order == 0) {
        beta0[0] = std::log(gamma.values[0]);
    } else {
        MomentVector g1(1, MomentBasis::monomial, gamma.domain);
        g1.values = {gamma.values[0], gamma.values[1]};
        const MomentVector u1 = basis_convert(g1, MomentBasis::shifted_legendre);
        const std::vector<double> phi_leg1 = legendre_node_matrix(1, rule);
        std::vector<double> phi_mono1 = monomial_node_matrix(1, rule);
        simd::scale(1.0 / vscale, phi_mono1.data() + n_q, n_q);
        NewtonOutcome m1 = newton_solve(phi_leg1, phi_mono1, rule, 2,
                                        {gamma_s.values[0], gamma_s.values[1]}, u1.values,
                                        {std::log(gamma.values[0]), 0.0}, params);
        m1_iterations = m1.iterations;
        if (!m1.converged)
            throw OptimizationFailure(m1.grad_norm,
                                      "maxent_solve: two-moment subproblem did not converge");
        // alpha on the Legendre basis: C^T beta
        beta0[0] = m1.c[0] * m1.beta[0] + m1.c[2] * m1.beta[1];
        beta0[1] = m1.c[3] * m1.beta[1];
    }

    // Q through the same node-value route as the iteration gradient, so the
    // r = 1 rung of the ladder is consistent by construction.
    NewtonScratch s0;
    eval_exp_nodes(phi_leg, beta0, n, n_q, rule.weights.data(), s0);
    std::vector<double> q_scaled(n);
    for (int k = 0; k < n; ++k)
        q_scaled[k] = simd::dot(phi_mono.data() + static_cast<std::size_t>(k) * n_q,
                                s0.wg.data(), n_q);

    int total_iterations = m1_iterations;
    double last_grad = std::numeric_limits<double>::infinity();
    for (double r : params.r_list) {
        std::vector<double> target_s(n);
        MomentVector target(gamma.order, MomentBasis::monomial, gamma.domain);
        double spow = 1.0;
        for (int k = 0; k < n; ++k) {
            target_s[k] = (1.0 - r) * gamma_s.values[k] + r * q_scaled[k];
            target.values[k] = target_s[k] * spow;
            spow *= vscale;
        }
        const MomentVector u = basis_convert(target, MomentBasis::shifted_legendre);

        NewtonOutcome res =
            newton_solve(phi_leg, phi_mono, rule, n, target_s, u.values, beta0, params);
        total_iterations += res.iterations;
        last_grad = res.grad_norm;
        if (!res.converged) continue;

        MaxEntReconstruction rec;
        rec.domain = gamma.domain;
        rec.alpha_legendre.assign(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int k = i; k < n; ++k)
                rec.alpha_legendre[i] += res.c[k * n + i] * res.beta[k];
        // monomial multipliers from R^T alpha_mono = alpha_leg
        const std::vector<double> rmat = monomial_in_legendre_matrix(gamma.order, gamma.domain);
        rec.alpha = rec.alpha_legendre;
        for (int k = n - 1; k >= 0; --k) {
            double acc = rec.alpha[k];
            for (int j = k + 1; j < n; ++j) acc -= rmat[j * n + k] * rec.alpha[j];
            rec.alpha[k] = acc / rmat[k * n + k];
        }
        rec.regularization_r = r;
        rec.regularized_moments = target;
        rec.newton_iterations = total_iterations;
        rec.final_gradient_norm = res.grad_norm;
        return rec;
    }
    throw OptimizationFailure(last_grad, "maxent_solve: regularization ladder exhausted");
}

// --------------------------------------------------------- realizability ----

bool realizable_q(const MomentVector& gamma, const QuadratureRule& rule) {
    if (gamma.basis != MomentBasis::monomial)
        throw std::invalid_argument("realizable_q: expects monomial moments");
    const int n = gamma.order + 1;
    const int n_q = rule.size();
    if (n_q < n) throw std::invalid_argument("realizable_q: needs n_q >= N+1");
    for (double x : gamma.values)
        if (!std::isfinite(x)) return false;
    if (!(gamma.values[0] > 0.0)) return false;

    // max t  s.t.  V (s + t 1) = gamma, s >= 0;    x = (s, t+, t-).
    // Rows are rescaled to O(1) before the solve.
    const std::vector<double> phi = monomial_node_matrix(gamma.order, rule);
    std::vector<double> a(static_cast<std::size_t>(n) * (n_q + 2));
    std::vector<double> b(n);
    for (int k = 0; k < n; ++k) {
        double rowmax = std::abs(gamma.values[k]);
        for (int q = 0; q < n_q; ++q)
            rowmax = std::max(rowmax, std::abs(phi[k * n_q + q] * rule.weights[q]));
        const double sc = rowmax > 0.0 ? 1.0 / rowmax : 1.0;
        double colsum = 0.0;
        for (int q = 0; q < n_q; ++q) {
            const double vkq = phi[k * n_q + q] * rule.weights[q] * sc;
            a[k * (n_q + 2) + q] = vkq;
            colsum += vkq;
        }
        a[k * (n_q + 2) + n_q] = colsum;
        a[k * (n_q + 2) + n_q + 1] = -colsum;
        b[k] = gamma.values[k] * sc;
    }
    std::vector<double> c(n_q + 2, 0.0);
    c[n_q] = 1.0;
    c[n_q + 1] = -1.0;

    double margin = 0.0;
    std::vector<double> x;
    const int status = detail::dense_simplex(n, n_q + 2, a, b, c, margin, x);
    if (status != 0) return false;
    if (!(margin > 0.0)) return false;

    double fmax = 0.0;
    for (int q = 0; q < n_q; ++q) fmax = std::max(fmax, x[q] + margin);
    return margin >= 1e-14 * fmax;
}

} // namespace pbe
