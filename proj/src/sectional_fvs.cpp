#include "pbe/sectional_fvs.hpp"

#include <cmath>

#include "pbe/simd.hpp"

namespace pbe {

VolumeGrid::VolumeGrid(int n, const VolumeDomain& dom) : n_v(n), domain(dom) {
    if (n < 1) throw std::invalid_argument("VolumeGrid: n_v must be >= 1");
    dv = dom.length() / n;
    zeta = static_cast<int>(std::ceil(dom.v_min / dv - 0.5));
}

FvsWorkspace make_fvs_workspace(const VolumeGrid& grid, const KernelSet& kernels,
                                bool with_breakage, bool with_aggregation) {
    FvsWorkspace ws;
    ws.grid = grid;
    ws.with_breakage = with_breakage;
    ws.with_aggregation = with_aggregation;
    const int n = grid.n_v;

    if (with_breakage) {
        ws.beta_mat.assign(static_cast<std::size_t>(n) * n, 0.0);
        ws.gamma_mid.assign(n, 0.0);
        for (int l = 0; l < n; ++l) { // mother column
            const double vl = grid.midpoint(l + 1);
            ws.gamma_mid[l] = breakage_frequency(vl, kernels);
            const DaughterProfile prof = daughter_profile(vl, kernels);
            for (int d = 0; d <= l; ++d) // daughters at or below the mother
                ws.beta_mat[static_cast<std::size_t>(d) * n + l] =
                    beta_smooth(grid.midpoint(d + 1), prof, kernels);
        }
        ws.dcol.assign(n, 0.0);
        for (int d = 0; d < n; ++d) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += grid.midpoint(j + 1) * ws.beta_mat[static_cast<std::size_t>(j) * n + d];
            ws.dcol[d] = acc;
        }
    }

    if (with_aggregation) {
        ws.omega_mat.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int r = 0; r < n; ++r) {
            const double vr = grid.midpoint(r + 1);
            for (int c = r; c < n; ++c) {
                const double om = aggregation_kernel(vr, grid.midpoint(c + 1), kernels);
                ws.omega_mat[static_cast<std::size_t>(r) * n + c] = om;
                ws.omega_mat[static_cast<std::size_t>(c) * n + r] = om;
            }
        }
    }
    return ws;
}

double breakage_flux(const SectionalState& state, const VolumeGrid& grid,
                     const KernelSet& kernels, int i) {
    if (i < 0 || i > grid.n_v) throw std::invalid_argument("breakage_flux: edge index");
    if (i == 0 || i == grid.n_v) return 0.0;
    double flux = 0.0;
    for (int l = i + 1; l <= grid.n_v; ++l) {
        const double vl = grid.midpoint(l);
        const double fg = state.f[l - 1] * breakage_frequency(vl, kernels);
        if (fg == 0.0) continue;
        const DaughterProfile prof = daughter_profile(vl, kernels);
        double inner = 0.0;
        for (int j = 1; j <= i; ++j)
            inner += grid.midpoint(j) * beta_smooth(grid.midpoint(j), prof, kernels);
        flux -= fg * grid.dv * grid.dv * inner;
    }
    return flux;
}

double aggregation_flux(const SectionalState& state, const VolumeGrid& grid,
                        const KernelSet& kernels, int i) {
    if (i < 0 || i > grid.n_v) throw std::invalid_argument("aggregation_flux: edge index");
    if (i == 0 || i == grid.n_v) return 0.0;
    const int zeta = grid.zeta;
    const double dv = grid.dv;
    const double partial = grid.domain.v_min + (0.5 - zeta) * dv;
    double flux = 0.0;
    for (int l = 1; l <= i - zeta; ++l) {
        const double al = grid.midpoint(l) * state.f[l - 1] * dv;
        const int t = i - l + 1 - zeta;
        if (t >= 1 && t <= grid.n_v)
            flux += al * state.f[t - 1] *
                    aggregation_kernel(grid.midpoint(t), grid.midpoint(l), kernels) * partial;
        double inner = 0.0;
        for (int j = i - l + 2 - zeta; j <= grid.n_v; ++j)
            inner += state.f[j - 1] *
                     aggregation_kernel(grid.midpoint(j), grid.midpoint(l), kernels) * dv;
        flux += al * inner;
    }
    for (int l = std::max(i - zeta + 1, 1); l <= i; ++l) {
        const double al = grid.midpoint(l) * state.f[l - 1] * dv;
        double inner = 0.0;
        for (int j = 1; j <= grid.n_v; ++j)
            inner += state.f[j - 1] *
                     aggregation_kernel(grid.midpoint(j), grid.midpoint(l), kernels) * dv;
        flux += al * inner;
    }
    return flux;
}

std::vector<double> breakage_fluxes(const SectionalState& state, const FvsWorkspace& ws) {
    const int n = ws.grid.n_v;
    std::vector<double> flux(n + 1, 0.0);
    if (!ws.with_breakage) return flux;

    std::vector<double> fg(n);
    for (int l = 0; l < n; ++l) fg[l] = state.f[l] * ws.gamma_mid[l];

    // edge recurrence: J(i) = J(i-1) - dv^2 (v_d T_d - f_d Gamma_d D_d),
    // d = i-1 the 0-based daughter row, T_d the mother tail product.
    const double dv2 = ws.grid.dv * ws.grid.dv;
    for (int i = 1; i <= n - 1; ++i) {
        const int d = i - 1;
        const double tail = simd::dot(ws.beta_mat.data() + static_cast<std::size_t>(d) * n + d + 1,
                                      fg.data() + d + 1, n - d - 1);
        const double inc = -dv2 * (ws.grid.midpoint(i) * tail - fg[d] * ws.dcol[d]);
        flux[i] = flux[i - 1] + inc;
    }
    return flux;
}

std::vector<double> aggregation_fluxes(const SectionalState& state, const FvsWorkspace& ws) {
    const int n = ws.grid.n_v;
    std::vector<double> flux(n + 1, 0.0);
    if (!ws.with_aggregation) return flux;
    const VolumeGrid& grid = ws.grid;
    const int zeta = grid.zeta;
    const double dv = grid.dv;
    const double partial = grid.domain.v_min + (0.5 - zeta) * dv;

    std::vector<double> a(n), wsum(n), k_term(n), pref(n + 1, 0.0);
    for (int lc = 0; lc < n; ++lc) {
        a[lc] = grid.midpoint(lc + 1) * state.f[lc] * dv;
        wsum[lc] = dv * simd::dot(ws.omega_mat.data() + static_cast<std::size_t>(lc) * n,
                                  state.f.data(), n);
        k_term[lc] = a[lc] * wsum[lc];
        pref[lc + 1] = pref[lc] + k_term[lc];
    }

    // term 3: sliding window over the last zeta mothers below the edge
    for (int i = 1; i <= n - 1; ++i)
        flux[i] = pref[i] - pref[std::max(i - zeta, 0)];

    // terms 1 and 2 accumulated per mother column lc
    for (int lc = 0; lc <= n - 2 - zeta; ++lc) {
        const double al = a[lc];
        if (al == 0.0) {
            // suffix sums still advance, but nothing to add
            continue;
        }
        const double* om = ws.omega_mat.data() + static_cast<std::size_t>(lc) * n;
        const int i_hi = n - 1;
        const int i_lo = lc + zeta + 1;
        if (i_lo > i_hi) continue;
        int sc = i_hi - lc - zeta; // 0-based start column of the suffix at i_hi
        double suffix = dv * simd::dot(om + sc, state.f.data() + sc, n - sc);
        for (int i = i_hi;; --i) {
            flux[i] += al * suffix;                       // term 2
            const int tc = i - lc - zeta - 1;             // term 1 partner cell
            flux[i] += al * state.f[tc] * om[tc] * partial;
            if (i == i_lo) break;
            --sc;
            suffix += dv * state.f[sc] * om[sc];
        }
    }
    return flux;
}

SectionalState fvs_step(const SectionalState& state, const FvsWorkspace& ws, double dt) {
    const int n = ws.grid.n_v;
    const std::vector<double> jb = breakage_fluxes(state, ws);
    const std::vector<double> ja = aggregation_fluxes(state, ws);

    SectionalState out;
    out.f.resize(n);
    const double dv = ws.grid.dv;
    for (int c = 0; c < n; ++c) {
        const double jdiff = (ja[c + 1] - ja[c]) + (jb[c + 1] - jb[c]);
        out.f[c] = state.f[c] - dt / (dv * ws.grid.midpoint(c + 1)) * jdiff;
        if (out.f[c] < 0.0)
            throw TimeStepError("fvs_step: negative cell value, time step too large");
    }
    return out;
}

SectionalState fvs_advance(const SectionalState& state, const FvsWorkspace& ws, double dt) {
    for (int halvings = 0; halvings <= 20; ++halvings) {
        const int substeps = 1 << halvings;
        const double h = dt / substeps;
        try {
            SectionalState cur = state;
            for (int s = 0; s < substeps; ++s) cur = fvs_step(cur, ws, h);
            return cur;
        } catch (const TimeStepError&) {
            if (halvings == 20) throw;
        }
    }
    throw TimeStepError("fvs_advance: positivity not reached within 20 halvings");
}

double zeroth_moment(const SectionalState& state, const VolumeGrid& grid) {
    return grid.dv * simd::sum(state.f.data(), state.f.size());
}

double mass_moment(const SectionalState& state, const VolumeGrid& grid) {
    double acc = 0.0;
    for (int c = 0; c < grid.n_v; ++c) acc += grid.midpoint(c + 1) * state.f[c];
    return grid.dv * acc;
}

} // namespace pbe
