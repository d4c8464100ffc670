#ifndef PBE_SPATIAL_HPP
#define PBE_SPATIAL_HPP

#include <string>
#include <vector>

#include "pbe/closures.hpp"
#include "pbe/moments.hpp"
#include "pbe/quadrature.hpp"
#include "pbe/types.hpp"

namespace pbe {

/// Uniform Cartesian cell grid on a rectangle; fields live at cell centers,
/// row-major with x contiguous: idx = j * nx + i.
struct Grid2D {
    int nx = 0, ny = 0;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

    Grid2D() = default;
    Grid2D(int nx_, int ny_) : nx(nx_), ny(ny_) {}

    double dx() const { return (x_max - x_min) / nx; }
    double dy() const { return (y_max - y_min) / ny; }
    double xc(int i) const { return x_min + (i + 0.5) * dx(); }
    double yc(int j) const { return y_min + (j + 0.5) * dy(); }
    int cells() const { return nx * ny; }
    int idx(int i, int j) const { return j * nx + i; }
};

/// Cell-centered velocity components and diffusion rate.
struct VelocityField {
    std::vector<double> u, z, d;
};

/// Three-argument slope limiter: minimal modulus under a common sign, else 0.
inline double minmod(double a, double b, double c) {
    if (a > 0.0 && b > 0.0 && c > 0.0) return a < b ? (a < c ? a : c) : (b < c ? b : c);
    if (a < 0.0 && b < 0.0 && c < 0.0) return a > b ? (a > c ? a : c) : (b > c ? b : c);
    return 0.0;
}

/// One positivity-preserving upwind/minmod advection + central diffusion step
/// of a scalar cell field. Zero-flux walls (zero normal velocity, homogeneous
/// Neumann for the diffusive flux). Throws CflError when dt exceeds the
/// admissible bound.
std::vector<double> advect_diffuse_step(const std::vector<double>& field,
                                        const VelocityField& vel, const Grid2D& grid,
                                        double dt);

/// Time-step bound of the positivity/realizability theorem: the advective
/// bounds grow with theta, the diffusive one decays, and the crossing is
/// located by bisection. Pure limits (theta -> 1 or 0) are handled.
double cfl_spatial(const VelocityField& vel, const Grid2D& grid, double safety);

/// Steady lid-driven-cavity velocity at the given Reynolds number:
/// vorticity-streamfunction form on the corner nodes (SOR to residual 1e-8),
/// then cell-centered velocities through wide central differences of the
/// cell-averaged streamfunction, which makes the discrete divergence vanish
/// identically. The diffusion member is left zero for the caller to fill.
VelocityField cavity_velocity(const Grid2D& grid, double reynolds, double lid_speed);

/// Plain-text matrix I/O for velocity components (ny rows bottom-to-top, nx
/// whitespace-separated values per row).
void save_field_text(const std::string& path, const std::vector<double>& field,
                     const Grid2D& grid);
std::vector<double> load_field_text(const std::string& path, const Grid2D& grid);

/// Per-cell moment vectors (monomial basis), cell-major storage:
/// values[cell * (order+1) + k].
struct MomentField {
    int order = 0;
    Grid2D grid;
    VolumeDomain domain;
    std::vector<double> values;

    MomentField() = default;
    MomentField(int n, const Grid2D& g, const VolumeDomain& dom)
        : order(n), grid(g), domain(dom),
          values(static_cast<std::size_t>(g.cells()) * (n + 1), 0.0) {}

    double* cell(int c) { return values.data() + static_cast<std::size_t>(c) * (order + 1); }
    const double* cell(int c) const {
        return values.data() + static_cast<std::size_t>(c) * (order + 1);
    }
    MomentVector moments_at(int c) const;
};

struct TransportStats {
    long newton_iterations = 0;
    long regularized_solves = 0;
    double max_regularization_r = 0.0;
    double max_gradient_norm = 0.0;
};

/// One transport step of the per-cell moments. P_N / M_N: per-cell
/// reconstructions are sampled at the quadrature nodes, the scalar scheme
/// acts nodewise, and the update is projected back onto the monomial basis.
/// QMOM: minmod-limited weight transport with frozen upwind-side abscissas
/// and moment-space diffusion. M_N solves may replace cell moments by their
/// regularized vectors; failures carry the cell coordinates.
MomentField transport_moments(const MomentField& field, ClosureKind kind,
                              const VelocityField& vel, const Grid2D& grid,
                              const QuadratureRule& rule, const NewtonParams& params,
                              double dt, int threads = 1, TransportStats* stats = nullptr);

} // namespace pbe

#endif
