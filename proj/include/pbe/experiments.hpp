#ifndef PBE_EXPERIMENTS_HPP
#define PBE_EXPERIMENTS_HPP

#include <limits>
#include <string>
#include <vector>

#include "pbe/kernels.hpp"
#include "pbe/moment_rhs.hpp"
#include "pbe/sectional_fvs.hpp"
#include "pbe/spatial.hpp"

namespace pbe {

enum class ExperimentKind { breakage, aggregation, cavity };
enum class Method { pn, mn, qmom, fvs };
enum class Profile { desk, paper };

/// Gaussian initial condition in the volume variable.
struct InitialCondition {
    double number_density = 52324.912797335433;   // N_0
    double mean_volume = 1.9111355309337916e-07;  // v_0
    double sigma = 3.8117990863556146e-08;        // 0.1 (v_max - v_min)

    bool operator==(const InitialCondition&) const = default;
};

/// Fully deterministic, RNG-free experiment description. The defaults are the
/// drop-volume domain and kernel constants of the desk profile.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::breakage;
    Method method = Method::mn;
    int order = 5;
    int n_q = 40;
    int n_v = 500;
    double dt = 0.01;
    double t_final = 1.0;
    double safety = 0.9;
    int threads = 1;
    int snapshot_every = 0;
    bool transport_only = false;
    bool audit_realizability = false;
    double gamma_scale = 1.0;
    double omega_scale = 1.0;

    double v_min = 5.2359877559829886e-10;
    double v_max = 3.8170350741115974e-07;
    InitialCondition initial;
    BreakageConfig breakage;
    AggregationConfig aggregation;
    NewtonParams newton;

    int nx = 20, ny = 20;
    double diffusion = 0.001;
    double reynolds = 5.0;
    double lid_speed = 1.0;
    std::string velocity_u_file, velocity_z_file;

    std::string out_dir;

    bool operator==(const ExperimentConfig&) const = default;

    VolumeDomain domain() const { return VolumeDomain(v_min, v_max); }
    KernelSet kernels() const;
    void validate() const;
};

void apply_profile(ExperimentConfig& config, Profile profile);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

struct RunReport {
    std::vector<double> times;
    std::vector<double> gamma0; // homogeneous value / cavity domain integral
    std::vector<double> gamma1;
    std::vector<std::vector<double>> gamma0_fields; // cavity only
    Grid2D grid;

    double e2 = std::numeric_limits<double>::quiet_NaN();
    double seconds_closure = 0.0;
    double seconds_sources = 0.0;
    double seconds_transport = 0.0;
    double seconds_total = 0.0;
    long newton_iterations = 0;
    long regularized_solves = 0;
    double max_regularization_r = 0.0;
    double max_gradient_norm = 0.0;
    bool realizability_ok = true;
    long realizability_checks = 0;
    double mass_initial = 0.0;
    double mass_final = 0.0;
    std::string csv_path;
    std::string summary;
};

/// Initial data builders (quadrature moments of the truncated Gaussian, exact
/// cell averages for the sectional state, midpoint-sampled spatial Gaussian
/// for the coupled case).
MomentVector initial_moments(const ExperimentConfig& config, const QuadratureRule& rule);
SectionalState initial_sectional(const ExperimentConfig& config, const VolumeGrid& grid);
MomentField initial_moment_field(const ExperimentConfig& config, const Grid2D& grid,
                                 const QuadratureRule& rule);
std::vector<double> initial_sectional_field(const ExperimentConfig& config, const Grid2D& grid,
                                            const VolumeGrid& vgrid);

/// Spatial factor of the coupled initial condition.
double cavity_spatial_gaussian(double x, double y);

/// Execute one experiment; writes CSV and a JSON summary line into out_dir
/// when it is set.
RunReport run(const ExperimentConfig& config);

/// Relative space-time L2 error: trapezoid in time, midpoint in space, with
/// the candidate linearly resampled onto the reference timestamps.
double relative_l2_error(const std::vector<double>& ref_times, const std::vector<double>& ref,
                         const std::vector<double>& cand_times, const std::vector<double>& cand);
double relative_l2_error_fields(const std::vector<double>& ref_times,
                                const std::vector<std::vector<double>>& ref,
                                const std::vector<double>& cand_times,
                                const std::vector<std::vector<double>>& cand);
double relative_l2_error(const RunReport& reference, const RunReport& candidate);

struct SweepRow {
    int order = 0;
    double seconds = 0.0;
    double e2 = 0.0;
};

/// One run per order against a common sectional reference (computed once
/// when not supplied). `parallel` trades timing comparability for speed.
std::vector<SweepRow> sweep_orders(const ExperimentConfig& config, const std::vector<int>& orders,
                                   bool parallel = false, const RunReport* reference = nullptr);

void write_series_csv(const std::string& path, const RunReport& report);
std::pair<std::vector<double>, std::vector<double>> read_series_csv(const std::string& path);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

} // namespace pbe

#endif
