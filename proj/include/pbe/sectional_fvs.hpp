#ifndef PBE_SECTIONAL_FVS_HPP
#define PBE_SECTIONAL_FVS_HPP

#include <vector>

#include "pbe/kernels.hpp"
#include "pbe/types.hpp"

namespace pbe {

/// Uniform volume grid for the conservative mass-density form. Paper-style
/// 1-based cell indices: cell i spans [edge(i-1), edge(i)], midpoint v_i.
struct VolumeGrid {
    int n_v = 0;
    VolumeDomain domain;
    double dv = 0.0;
    int zeta = 0;

    VolumeGrid() = default;
    VolumeGrid(int n, const VolumeDomain& dom);

    double edge(int i) const { return domain.v_min + i * dv; }       // i = 0..n_v
    double midpoint(int i) const { return domain.v_min + (i - 0.5) * dv; } // i = 1..n_v
};

/// Cell-averaged number densities f_1..f_{n_v}.
struct SectionalState {
    std::vector<double> f;
};

/// Kernel tables shared across steps (and across spatial cells in the coupled
/// runs): beta_smooth at midpoint pairs, Gamma at midpoints, omega at
/// midpoint pairs with the cutoff baked in.
struct FvsWorkspace {
    VolumeGrid grid;
    bool with_breakage = true;
    bool with_aggregation = true;
    std::vector<double> beta_mat;  // [daughter * n_v + mother]
    std::vector<double> dcol;      // D_i = sum_{j<i} v_j beta(v_j, v_i), 0-based daughters
    std::vector<double> gamma_mid;
    std::vector<double> omega_mat; // [row * n_v + col], symmetric
};

FvsWorkspace make_fvs_workspace(const VolumeGrid& grid, const KernelSet& kernels,
                                bool with_breakage = true, bool with_aggregation = true);

/// Numerical breakage flux at edge index i (paper's J^brk_{i+1/2}, i = 0..n_v);
/// nonpositive, zero at both boundaries. Direct evaluation of the double sum.
double breakage_flux(const SectionalState& state, const VolumeGrid& grid,
                     const KernelSet& kernels, int i);

/// Numerical aggregation flux at edge index i (nonnegative, zero at both
/// boundaries). Direct evaluation of the printed three-sum form.
double aggregation_flux(const SectionalState& state, const VolumeGrid& grid,
                        const KernelSet& kernels, int i);

/// All interior edge fluxes in O(n_v^2), equal to the per-edge definitions.
std::vector<double> breakage_fluxes(const SectionalState& state, const FvsWorkspace& ws);
std::vector<double> aggregation_fluxes(const SectionalState& state, const FvsWorkspace& ws);

/// One conservative forward-Euler step; throws TimeStepError when a cell
/// would go negative.
SectionalState fvs_step(const SectionalState& state, const FvsWorkspace& ws, double dt);

/// Advance by dt, subdividing into 2^k equal substeps (k <= 20) when the
/// positivity restriction bites.
SectionalState fvs_advance(const SectionalState& state, const FvsWorkspace& ws, double dt);

double zeroth_moment(const SectionalState& state, const VolumeGrid& grid);
double mass_moment(const SectionalState& state, const VolumeGrid& grid);

} // namespace pbe

#endif
