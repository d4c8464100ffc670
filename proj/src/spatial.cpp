#include "pbe/spatial.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "pbe/simd.hpp"

namespace pbe {

namespace {

struct CflBounds {
    double a = 0.0, b = 0.0, e = 0.0; // e = c/dx^2 + d/dy^2
};

CflBounds cfl_bounds(const VelocityField& vel, const Grid2D& grid) {
    CflBounds r;
    double c = 0.0, d = 0.0;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int cidx = grid.idx(i, j);
            if (i + 1 < grid.nx)
                r.a = std::max(r.a, std::abs(vel.u[grid.idx(i + 1, j)] + vel.u[cidx]));
            if (j + 1 < grid.ny)
                r.b = std::max(r.b, std::abs(vel.z[grid.idx(i, j + 1)] + vel.z[cidx]));
            const double de = vel.d[grid.idx(std::min(i + 1, grid.nx - 1), j)];
            const double dw = vel.d[grid.idx(std::max(i - 1, 0), j)];
            const double dn = vel.d[grid.idx(i, std::min(j + 1, grid.ny - 1))];
            const double ds = vel.d[grid.idx(i, std::max(j - 1, 0))];
            c = std::max(c, de + 2.0 * vel.d[cidx] + dw);
            d = std::max(d, dn + 2.0 * vel.d[cidx] + ds);
        }
    }
    r.e = c / (grid.dx() * grid.dx()) + d / (grid.dy() * grid.dy());
    return r;
}

double cfl_dt(const CflBounds& bounds, const Grid2D& grid) {
    const double inf = std::numeric_limits<double>::infinity();
    const double kx = bounds.a > 0.0 ? grid.dx() / (2.0 * bounds.a) : inf;
    const double ky = bounds.b > 0.0 ? grid.dy() / (2.0 * bounds.b) : inf;
    const double ka = std::min(kx, ky);
    if (bounds.e <= 0.0) return ka; // pure advection, theta -> 1
    if (ka == inf) return 2.0 / bounds.e; // pure diffusion, theta -> 0
    // advective bound theta*ka rises, diffusive 2(1-theta)/e falls; bisect
    // the crossing of their difference.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double adv = mid * ka;
        const double dif = 2.0 * (1.0 - mid) / bounds.e;
        if (adv < dif) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi) * ka;
}

void check_cfl(double dt, const VelocityField& vel, const Grid2D& grid) {
    const double bound = cfl_dt(cfl_bounds(vel, grid), grid);
    if (dt > bound * (1.0 + 1e-12))
        throw CflError("transport: dt " + std::to_string(dt) +
                       " violates the time-step restriction " + std::to_string(bound));
}

template <class F>
void run_cells(int n, int threads, F&& fn) {
    if (threads <= 1) {
        for (int c = 0; c < n; ++c) fn(c);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mutex;
    auto worker = [&]() {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= n) return;
            try {
                fn(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

} // namespace

double cfl_spatial(const VelocityField& vel, const Grid2D& grid, double safety) {
    if (!(safety > 0.0 && safety <= 1.0))
        throw std::invalid_argument("cfl_spatial: safety must be in (0, 1]");
    return safety * cfl_dt(cfl_bounds(vel, grid), grid);
}

std::vector<double> advect_diffuse_step(const std::vector<double>& field,
                                        const VelocityField& vel, const Grid2D& grid,
                                        double dt) {
    check_cfl(dt, vel, grid);
    const int nx = grid.nx, ny = grid.ny;
    const double rx = dt / grid.dx(), ry = dt / grid.dy();

    std::vector<double> out = field;
    std::vector<double> slope(field.size(), 0.0);

    // x sweep
    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i + 1 < nx; ++i) {
            const int c = grid.idx(i, j);
            slope[c] = minmod(2.0 * (field[c + 1] - field[c]),
                              0.5 * (field[c + 1] - field[c - 1]),
                              2.0 * (field[c] - field[c - 1]));
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int c = grid.idx(i, j), e = c + 1;
            const double ue = 0.5 * (vel.u[c] + vel.u[e]);
            const double fplus = field[c] + 0.5 * slope[c];
            const double fminus = field[e] - 0.5 * slope[e];
            const double adv = std::max(ue, 0.0) * fplus + std::min(ue, 0.0) * fminus;
            const double dif = 0.5 * (vel.d[e] + vel.d[c]) / grid.dx() * (field[e] - field[c]);
            out[c] -= rx * (adv - dif);
            out[e] += rx * (adv - dif);
        }
    }

    // y sweep
    std::fill(slope.begin(), slope.end(), 0.0);
    for (int j = 1; j + 1 < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int c = grid.idx(i, j);
            slope[c] = minmod(2.0 * (field[c + nx] - field[c]),
                              0.5 * (field[c + nx] - field[c - nx]),
                              2.0 * (field[c] - field[c - nx]));
        }
    }
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int c = grid.idx(i, j), nn = c + nx;
            const double ze = 0.5 * (vel.z[c] + vel.z[nn]);
            const double fplus = field[c] + 0.5 * slope[c];
            const double fminus = field[nn] - 0.5 * slope[nn];
            const double adv = std::max(ze, 0.0) * fplus + std::min(ze, 0.0) * fminus;
            const double dif = 0.5 * (vel.d[nn] + vel.d[c]) / grid.dy() * (field[nn] - field[c]);
            out[c] -= ry * (adv - dif);
            out[nn] += ry * (adv - dif);
        }
    }
    return out;
}

VelocityField cavity_velocity(const Grid2D& grid, double reynolds, double lid_speed) {
    if (!(reynolds > 0.0)) throw std::invalid_argument("cavity_velocity: Re must be positive");
    const int nx = grid.nx, ny = grid.ny;
    VelocityField vel;
    vel.u.assign(grid.cells(), 0.0);
    vel.z.assign(grid.cells(), 0.0);
    vel.d.assign(grid.cells(), 0.0);
    if (lid_speed == 0.0) return vel;

    // corner-node vorticity-streamfunction solve
    const int mx = nx + 1, my = ny + 1;
    const double hx = (grid.x_max - grid.x_min) / nx;
    const double hy = (grid.y_max - grid.y_min) / ny;
    const double nu = lid_speed * (grid.x_max - grid.x_min) / reynolds;
    std::vector<double> psi(static_cast<std::size_t>(mx) * my, 0.0);
    std::vector<double> om(static_cast<std::size_t>(mx) * my, 0.0);
    auto at = [mx](int i, int j) { return static_cast<std::size_t>(j) * mx + i; };

    const double sor = 1.6;
    const double cx = 1.0 / (hx * hx), cy = 1.0 / (hy * hy);
    const double cdiag = 2.0 * (cx + cy);
    const double tol = 1e-8 * lid_speed / hx; // vorticity scale ~ U/h

    double res = std::numeric_limits<double>::infinity();
    const int max_outer = 200000;
    for (int outer = 0; outer < max_outer; ++outer) {
        // streamfunction Poisson sweep
        for (int j = 1; j < my - 1; ++j)
            for (int i = 1; i < mx - 1; ++i) {
                const double gs = (cx * (psi[at(i + 1, j)] + psi[at(i - 1, j)]) +
                                   cy * (psi[at(i, j + 1)] + psi[at(i, j - 1)]) + om[at(i, j)]) /
                                  cdiag;
                psi[at(i, j)] += sor * (gs - psi[at(i, j)]);
            }
        // wall vorticity (Thom), lid at the top moving +x
        for (int i = 1; i < mx - 1; ++i) {
            om[at(i, 0)] = -2.0 * psi[at(i, 1)] * cy;
            om[at(i, my - 1)] = -2.0 * psi[at(i, my - 2)] * cy - 2.0 * lid_speed / hy;
        }
        for (int j = 1; j < my - 1; ++j) {
            om[at(0, j)] = -2.0 * psi[at(1, j)] * cx;
            om[at(mx - 1, j)] = -2.0 * psi[at(mx - 2, j)] * cx;
        }
        // vorticity transport sweep (central, diffusion dominated at Re = 5)
        for (int j = 1; j < my - 1; ++j)
            for (int i = 1; i < mx - 1; ++i) {
                const double un = (psi[at(i, j + 1)] - psi[at(i, j - 1)]) / (2.0 * hy);
                const double zn = -(psi[at(i + 1, j)] - psi[at(i - 1, j)]) / (2.0 * hx);
                const double gs =
                    (nu * (cx * (om[at(i + 1, j)] + om[at(i - 1, j)]) +
                           cy * (om[at(i, j + 1)] + om[at(i, j - 1)])) -
                     un * (om[at(i + 1, j)] - om[at(i - 1, j)]) / (2.0 * hx) -
                     zn * (om[at(i, j + 1)] - om[at(i, j - 1)]) / (2.0 * hy)) /
                    (nu * cdiag);
                om[at(i, j)] += gs - om[at(i, j)];
            }

        if (outer % 50 == 49) {
            res = 0.0;
            for (int j = 1; j < my - 1; ++j)
                for (int i = 1; i < mx - 1; ++i) {
                    const double rp = cx * (psi[at(i + 1, j)] - 2.0 * psi[at(i, j)] + psi[at(i - 1, j)]) +
                                      cy * (psi[at(i, j + 1)] - 2.0 * psi[at(i, j)] + psi[at(i, j - 1)]) +
                                      om[at(i, j)];
                    res = std::max(res, std::abs(rp));
                }
            if (res < tol) break;
        }
    }
    if (!(res < tol))
        throw EvaluationError("cavity_velocity: steady solve did not reach residual " +
                              std::to_string(tol) + " (last " + std::to_string(res) + ")");

    // cell-averaged streamfunction with reflected ghosts (psi = 0 on walls),
    // then wide central differences; the central divergence of this
    // construction cancels identically.
    const int gx = nx + 2, gy = ny + 2;
    std::vector<double> pc(static_cast<std::size_t>(gx) * gy, 0.0);
    auto atc = [gx](int i, int j) { return static_cast<std::size_t>(j) * gx + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            pc[atc(i + 1, j + 1)] = 0.25 * (psi[at(i, j)] + psi[at(i + 1, j)] +
                                            psi[at(i, j + 1)] + psi[at(i + 1, j + 1)]);
    for (int j = 1; j <= ny; ++j) {
        pc[atc(0, j)] = -pc[atc(1, j)];
        pc[atc(gx - 1, j)] = -pc[atc(gx - 2, j)];
    }
    for (int i = 0; i < gx; ++i) {
        pc[atc(i, 0)] = -pc[atc(i, 1)];
        pc[atc(i, gy - 1)] = -pc[atc(i, gy - 2)];
    }
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            vel.u[grid.idx(i, j)] = (pc[atc(i + 1, j + 2)] - pc[atc(i + 1, j)]) / (2.0 * hy);
            vel.z[grid.idx(i, j)] = -(pc[atc(i + 2, j + 1)] - pc[atc(i, j + 1)]) / (2.0 * hx);
        }
    return vel;
}

void save_field_text(const std::string& path, const std::vector<double>& field,
                     const Grid2D& grid) {
    std::ofstream out(path);
    if (!out) throw EvaluationError("save_field_text: cannot open " + path);
    out.precision(17);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            if (i) out << ' ';
            out << field[grid.idx(i, j)];
        }
        out << '\n';
    }
}

std::vector<double> load_field_text(const std::string& path, const Grid2D& grid) {
    std::ifstream in(path);
    if (!in) throw EvaluationError("load_field_text: cannot open " + path);
    std::vector<double> field(grid.cells(), 0.0);
    std::string line;
    int j = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (j >= grid.ny) throw EvaluationError("load_field_text: too many rows in " + path);
        std::istringstream ls(line);
        for (int i = 0; i < grid.nx; ++i)
            if (!(ls >> field[grid.idx(i, j)]))
                throw EvaluationError("load_field_text: short row in " + path);
        double extra;
        if (ls >> extra) throw EvaluationError("load_field_text: long row in " + path);
        ++j;
    }
    if (j != grid.ny) throw EvaluationError("load_field_text: wrong row count in " + path);
    return field;
}

MomentVector MomentField::moments_at(int c) const {
    MomentVector g(order, MomentBasis::monomial, domain);
    for (int k = 0; k <= order; ++k) g.values[k] = cell(c)[k];
    return g;
}

namespace {

MomentField transport_continuous(const MomentField& field, ClosureKind kind,
                                 const VelocityField& vel, const Grid2D& grid,
                                 const QuadratureRule& rule, const NewtonParams& params,
                                 double dt, int threads, TransportStats* stats) {
    const int n_q = rule.size();
    const int nx = grid.nx, ny = grid.ny, ncell = grid.cells();
    const int n = field.order + 1;
    const double rx = dt / grid.dx(), ry = dt / grid.dy();

    MomentField next = field; // M_N regularization may rewrite cell moments
    std::vector<double> gval(static_cast<std::size_t>(ncell) * n_q);
    std::vector<long> iters(threads > 1 ? ncell : 1, 0);
    std::atomic<long> reg_count{0};
    std::vector<double> max_r(ncell, 0.0), max_g(ncell, 0.0);

    run_cells(ncell, threads, [&](int c) {
        try {
            const MomentVector gm = next.moments_at(c);
            double* dst = gval.data() + static_cast<std::size_t>(c) * n_q;
            if (kind == ClosureKind::pn) {
                const PolynomialReconstruction rec =
                    pn_close(basis_convert(gm, MomentBasis::shifted_legendre));
                for (int q = 0; q < n_q; ++q) dst[q] = rec.density_at(rule.nodes[q]);
            } else {
                const MaxEntReconstruction rec = maxent_solve(gm, rule, params);
                if (rec.regularization_r > 0.0) {
                    for (int k = 0; k < n; ++k)
                        next.cell(c)[k] = rec.regularized_moments.values[k];
                    reg_count.fetch_add(1);
                }
                max_r[c] = rec.regularization_r;
                max_g[c] = rec.final_gradient_norm;
                if (threads > 1) iters[c] = rec.newton_iterations;
                else iters[0] += rec.newton_iterations;
                for (int q = 0; q < n_q; ++q) dst[q] = rec.density_at(rule.nodes[q]);
            }
        } catch (const std::exception& e) {
            throw EvaluationError("transport_moments: closure failed at cell (" +
                                  std::to_string(c % nx) + ", " + std::to_string(c / nx) +
                                  "): " + e.what());
        }
    });

    if (stats) {
        for (long it : iters) stats->newton_iterations += it;
        stats->regularized_solves += reg_count.load();
        for (int c = 0; c < ncell; ++c) {
            stats->max_regularization_r = std::max(stats->max_regularization_r, max_r[c]);
            stats->max_gradient_norm = std::max(stats->max_gradient_norm, max_g[c]);
        }
    }

    auto row = [&](int c) { return gval.data() + static_cast<std::size_t>(c) * n_q; };
    std::vector<double> slope(static_cast<std::size_t>(ncell) * n_q, 0.0);
    std::vector<double> delta(static_cast<std::size_t>(ncell) * n_q, 0.0);
    std::vector<double> am(n_q), bm(n_q), cm(n_q), fl(n_q);

    auto limit = [&](int c, int lo, int hi) {
        for (int q = 0; q < n_q; ++q) {
            am[q] = 2.0 * (row(hi)[q] - row(c)[q]);
            bm[q] = 0.5 * (row(hi)[q] - row(lo)[q]);
            cm[q] = 2.0 * (row(c)[q] - row(lo)[q]);
        }
        simd::minmod3(am.data(), bm.data(), cm.data(),
                      slope.data() + static_cast<std::size_t>(c) * n_q, n_q);
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i + 1 < nx; ++i) limit(grid.idx(i, j), grid.idx(i - 1, j), grid.idx(i + 1, j));

    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const int c = grid.idx(i, j), e = c + 1;
            const double ue = 0.5 * (vel.u[c] + vel.u[e]);
            const double up = std::max(ue, 0.0), um = std::min(ue, 0.0);
            const double dq = 0.5 * (vel.d[e] + vel.d[c]) / grid.dx();
            const double* gc = row(c);
            const double* ge = row(e);
            const double* sc = slope.data() + static_cast<std::size_t>(c) * n_q;
            const double* se = slope.data() + static_cast<std::size_t>(e) * n_q;
            for (int q = 0; q < n_q; ++q)
                fl[q] = up * (gc[q] + 0.5 * sc[q]) + um * (ge[q] - 0.5 * se[q]) -
                        dq * (ge[q] - gc[q]);
            simd::axpy(-rx, fl.data(), delta.data() + static_cast<std::size_t>(c) * n_q, n_q);
            simd::axpy(rx, fl.data(), delta.data() + static_cast<std::size_t>(e) * n_q, n_q);
        }

    std::fill(slope.begin(), slope.end(), 0.0);
    for (int j = 1; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i) limit(grid.idx(i, j), grid.idx(i, j - 1), grid.idx(i, j + 1));

    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int c = grid.idx(i, j), nn = c + nx;
            const double ze = 0.5 * (vel.z[c] + vel.z[nn]);
            const double zp = std::max(ze, 0.0), zm = std::min(ze, 0.0);
            const double dq = 0.5 * (vel.d[nn] + vel.d[c]) / grid.dy();
            const double* gc = row(c);
            const double* gn = row(nn);
            const double* sc = slope.data() + static_cast<std::size_t>(c) * n_q;
            const double* sn = slope.data() + static_cast<std::size_t>(nn) * n_q;
            for (int q = 0; q < n_q; ++q)
                fl[q] = zp * (gc[q] + 0.5 * sc[q]) + zm * (gn[q] - 0.5 * sn[q]) -
                        dq * (gn[q] - gc[q]);
            simd::axpy(-ry, fl.data(), delta.data() + static_cast<std::size_t>(c) * n_q, n_q);
            simd::axpy(ry, fl.data(), delta.data() + static_cast<std::size_t>(nn) * n_q, n_q);
        }

    const std::vector<double> phi = monomial_node_matrix(field.order, rule);
    for (int c = 0; c < ncell; ++c) {
        double* dst = next.cell(c);
        const double* dc = delta.data() + static_cast<std::size_t>(c) * n_q;
        for (int k = 0; k < n; ++k)
            dst[k] += simd::dot3(phi.data() + static_cast<std::size_t>(k) * n_q,
                                 rule.weights.data(), dc, n_q);
    }
    return next;
}

MomentField transport_qmom(const MomentField& field, const VelocityField& vel,
                           const Grid2D& grid, double dt, int threads) {
    const int nx = grid.nx, ny = grid.ny, ncell = grid.cells();
    const int n = field.order + 1;
    const int na = (field.order + 1) / 2; // moment pairs feed atoms
    const double rx = dt / grid.dx(), ry = dt / grid.dy();

    std::vector<double> w_atoms(static_cast<std::size_t>(ncell) * na);
    std::vector<double> v_atoms(static_cast<std::size_t>(ncell) * na);
    run_cells(ncell, threads, [&](int c) {
        try {
            const AtomicReconstruction rec = wheeler_invert(field.moments_at(c), na);
            for (int a = 0; a < na; ++a) {
                w_atoms[static_cast<std::size_t>(c) * na + a] = rec.weights[a];
                v_atoms[static_cast<std::size_t>(c) * na + a] = rec.abscissas[a];
            }
        } catch (const std::exception& e) {
            throw EvaluationError("transport_moments: inversion failed at cell (" +
                                  std::to_string(c % nx) + ", " + std::to_string(c / nx) +
                                  "): " + e.what());
        }
    });

    MomentField next = field;
    auto wrow = [&](int c) { return w_atoms.data() + static_cast<std::size_t>(c) * na; };
    auto vrow = [&](int c) { return v_atoms.data() + static_cast<std::size_t>(c) * na; };

    std::vector<double> slope(static_cast<std::size_t>(ncell) * na, 0.0);
    auto limit = [&](int c, int lo, int hi) {
        double* s = slope.data() + static_cast<std::size_t>(c) * na;
        for (int a = 0; a < na; ++a)
            s[a] = minmod(2.0 * (wrow(hi)[a] - wrow(c)[a]), 0.5 * (wrow(hi)[a] - wrow(lo)[a]),
                          2.0 * (wrow(c)[a] - wrow(lo)[a]));
    };

    // x direction: limited weights, frozen upwind abscissas, moment diffusion
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i + 1 < nx; ++i) limit(grid.idx(i, j), grid.idx(i - 1, j), grid.idx(i + 1, j));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const int c = grid.idx(i, j), e = c + 1;
            const double ue = 0.5 * (vel.u[c] + vel.u[e]);
            const double up = std::max(ue, 0.0), um = std::min(ue, 0.0);
            const double dq = 0.5 * (vel.d[e] + vel.d[c]) / grid.dx();
            std::vector<double> fk(n, 0.0);
            for (int a = 0; a < na; ++a) {
                const double wp = up * (wrow(c)[a] + 0.5 * slope[static_cast<std::size_t>(c) * na + a]);
                const double wm = um * (wrow(e)[a] - 0.5 * slope[static_cast<std::size_t>(e) * na + a]);
                double pc = 1.0, pe = 1.0;
                for (int k = 0; k < n; ++k) {
                    fk[k] += wp * pc + wm * pe;
                    pc *= vrow(c)[a];
                    pe *= vrow(e)[a];
                }
            }
            for (int k = 0; k < n; ++k) {
                fk[k] -= dq * (field.cell(e)[k] - field.cell(c)[k]);
                next.cell(c)[k] -= rx * fk[k];
                next.cell(e)[k] += rx * fk[k];
            }
        }

    std::fill(slope.begin(), slope.end(), 0.0);
    for (int j = 1; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i) limit(grid.idx(i, j), grid.idx(i, j - 1), grid.idx(i, j + 1));
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int c = grid.idx(i, j), nn = c + nx;
            const double ze = 0.5 * (vel.z[c] + vel.z[nn]);
            const double zp = std::max(ze, 0.0), zm = std::min(ze, 0.0);
            const double dq = 0.5 * (vel.d[nn] + vel.d[c]) / grid.dy();
            std::vector<double> fk(n, 0.0);
            for (int a = 0; a < na; ++a) {
                const double wp = zp * (wrow(c)[a] + 0.5 * slope[static_cast<std::size_t>(c) * na + a]);
                const double wm = zm * (wrow(nn)[a] - 0.5 * slope[static_cast<std::size_t>(nn) * na + a]);
                double pc = 1.0, pn = 1.0;
                for (int k = 0; k < n; ++k) {
                    fk[k] += wp * pc + wm * pn;
                    pc *= vrow(c)[a];
                    pn *= vrow(nn)[a];
                }
            }
            for (int k = 0; k < n; ++k) {
                fk[k] -= dq * (field.cell(nn)[k] - field.cell(c)[k]);
                next.cell(c)[k] -= ry * fk[k];
                next.cell(nn)[k] += ry * fk[k];
            }
        }
    return next;
}

} // namespace

MomentField transport_moments(const MomentField& field, ClosureKind kind,
                              const VelocityField& vel, const Grid2D& grid,
                              const QuadratureRule& rule, const NewtonParams& params,
                              double dt, int threads, TransportStats* stats) {
    check_cfl(dt, vel, grid);
    if (kind == ClosureKind::qmom) return transport_qmom(field, vel, grid, dt, threads);
    return transport_continuous(field, kind, vel, grid, rule, params, dt, threads, stats);
}

} // namespace pbe
