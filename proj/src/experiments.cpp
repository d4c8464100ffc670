#include "pbe/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "pbe/simd.hpp"

namespace pbe {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

constexpr double kCavityCenter = 0.3;
constexpr double kCavityWidth = 0.08;

} // namespace

double cavity_spatial_gaussian(double x, double y) {
    const double w2 = kCavityWidth * kCavityWidth;
    const double pi = std::acos(-1.0);
    return std::exp(-0.5 * ((x - kCavityCenter) * (x - kCavityCenter) +
                            (y - kCavityCenter) * (y - kCavityCenter)) / w2) /
           (4.0 * pi * pi * w2);
}

KernelSet ExperimentConfig::kernels() const {
    KernelSet ks(domain(), breakage, aggregation);
    if (gamma_scale != 1.0) {
        const BreakageConfig cfg = breakage;
        const double scale = gamma_scale;
        ks.gamma_override = [cfg, scale](double v) { return scale * ct_breakage_rate(v, cfg); };
    }
    if (omega_scale != 1.0) {
        const AggregationConfig cfg = aggregation;
        const double scale = omega_scale;
        ks.omega_override = [cfg, scale](double v, double w) {
            return scale * ct_aggregation_rate(v, w, cfg);
        };
    }
    return ks;
}

void ExperimentConfig::validate() const {
    if (!(v_min > 0.0) || !(v_max > v_min))
        throw ConfigError("config: requires 0 < v_min < v_max");
    if (order < 0) throw ConfigError("config: order must be >= 0");
    if (n_q < 2) throw ConfigError("config: n_q must be >= 2");
    if (method == Method::mn && n_q < order + 1)
        throw ConfigError("config: the maximum-entropy closure needs n_q >= N+1");
    if (n_v < 1) throw ConfigError("config: n_v must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("config: dt must be positive");
    if (!(t_final >= 0.0)) throw ConfigError("config: t_final must be nonnegative");
    if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("config: safety must be in (0,1]");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    if (nx < 3 || ny < 3) throw ConfigError("config: grid must be at least 3x3");
    if (!(diffusion >= 0.0)) throw ConfigError("config: diffusion must be nonnegative");
    if (!(reynolds > 0.0)) throw ConfigError("config: reynolds must be positive");
    if (!(initial.number_density > 0.0) || !(initial.sigma > 0.0))
        throw ConfigError("config: initial condition parameters must be positive");
    if (gamma_scale < 0.0 || omega_scale < 0.0)
        throw ConfigError("config: kernel scales must be nonnegative");
    try {
        breakage.validate();
        aggregation.validate();
        newton.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

void apply_profile(ExperimentConfig& config, Profile profile) {
    if (profile == Profile::desk) {
        config.n_q = 40;
        config.n_v = 500;
        config.nx = config.ny = 20;
        config.t_final = 1.0;
    } else {
        config.n_q = 100;
        if (config.kind == ExperimentKind::cavity) {
            config.n_v = 2000;
            config.t_final = 5.0;
            config.nx = config.ny = 50;
        } else {
            config.n_v = 5000;
            config.t_final = 4.0;
        }
    }
}

// ------------------------------------------------------------- config I/O --

namespace {

const char* kind_name(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::breakage: return "breakage";
    case ExperimentKind::aggregation: return "aggregation";
    default: return "cavity";
    }
}

const char* method_name(Method m) {
    switch (m) {
    case Method::pn: return "pn";
    case Method::mn: return "mn";
    case Method::qmom: return "qmom";
    default: return "fvs";
    }
}

ExperimentKind parse_kind(const std::string& s) {
    if (s == "breakage") return ExperimentKind::breakage;
    if (s == "aggregation") return ExperimentKind::aggregation;
    if (s == "cavity") return ExperimentKind::cavity;
    throw ConfigError("config: unknown experiment kind '" + s + "'");
}

Method parse_method(const std::string& s) {
    if (s == "pn") return Method::pn;
    if (s == "mn") return Method::mn;
    if (s == "qmom") return Method::qmom;
    if (s == "fvs") return Method::fvs;
    throw ConfigError("config: unknown closure '" + s + "'");
}

double parse_double(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + s + "'");
    }
}

int parse_int(const std::string& key, const std::string& s) {
    const double v = parse_double(key, s);
    if (v != std::floor(v)) throw ConfigError("config: expected integer for " + key);
    return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config: expected boolean for " + key);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string k = section + "." + key;

        if (k == "experiment.kind") c.kind = parse_kind(val);
        else if (k == "experiment.closure") c.method = parse_method(val);
        else if (k == "experiment.order") c.order = parse_int(k, val);
        else if (k == "experiment.n_q") c.n_q = parse_int(k, val);
        else if (k == "experiment.dt") c.dt = parse_double(k, val);
        else if (k == "experiment.t_final") c.t_final = parse_double(k, val);
        else if (k == "experiment.safety") c.safety = parse_double(k, val);
        else if (k == "experiment.threads") c.threads = parse_int(k, val);
        else if (k == "experiment.snapshot_every") c.snapshot_every = parse_int(k, val);
        else if (k == "experiment.transport_only") c.transport_only = parse_bool(k, val);
        else if (k == "experiment.audit_realizability") c.audit_realizability = parse_bool(k, val);
        else if (k == "experiment.gamma_scale") c.gamma_scale = parse_double(k, val);
        else if (k == "experiment.omega_scale") c.omega_scale = parse_double(k, val);
        else if (k == "domain.v_min") c.v_min = parse_double(k, val);
        else if (k == "domain.v_max") c.v_max = parse_double(k, val);
        else if (k == "initial.n0") c.initial.number_density = parse_double(k, val);
        else if (k == "initial.v0") c.initial.mean_volume = parse_double(k, val);
        else if (k == "initial.sigma") c.initial.sigma = parse_double(k, val);
        else if (k == "sectional.n_v") c.n_v = parse_int(k, val);
        else if (k == "breakage.p") c.breakage.p = parse_int(k, val);
        else if (k == "breakage.m") c.breakage.m = parse_int(k, val);
        else if (k == "breakage.c1") c.breakage.C1 = parse_double(k, val);
        else if (k == "breakage.c2") c.breakage.C2 = parse_double(k, val);
        else if (k == "breakage.alpha_d") c.breakage.alpha_d = parse_double(k, val);
        else if (k == "breakage.epsilon") c.breakage.epsilon = parse_double(k, val);
        else if (k == "breakage.rho_d") c.breakage.rho_d = parse_double(k, val);
        else if (k == "breakage.sigma") c.breakage.sigma = parse_double(k, val);
        else if (k == "aggregation.c_omega") c.aggregation.C_omega = parse_double(k, val);
        else if (k == "aggregation.k_omega") c.aggregation.k_omega = parse_double(k, val);
        else if (k == "aggregation.alpha_d") c.aggregation.alpha_d = parse_double(k, val);
        else if (k == "aggregation.epsilon") c.aggregation.epsilon = parse_double(k, val);
        else if (k == "aggregation.rho_c") c.aggregation.rho_c = parse_double(k, val);
        else if (k == "aggregation.sigma") c.aggregation.sigma = parse_double(k, val);
        else if (k == "aggregation.eta_c") c.aggregation.eta_c = parse_double(k, val);
        else if (k == "newton.k_max") c.newton.k_max = parse_int(k, val);
        else if (k == "newton.eps") c.newton.eps = parse_double(k, val);
        else if (k == "newton.chi") c.newton.chi = parse_double(k, val);
        else if (k == "newton.tau") c.newton.tau = parse_double(k, val);
        else if (k == "newton.r_list") {
            c.newton.r_list.clear();
            std::istringstream rs(val);
            std::string tok;
            while (std::getline(rs, tok, ','))
                c.newton.r_list.push_back(parse_double(k, trim(tok)));
        } else if (k == "spatial.nx") c.nx = parse_int(k, val);
        else if (k == "spatial.ny") c.ny = parse_int(k, val);
        else if (k == "spatial.diffusion") c.diffusion = parse_double(k, val);
        else if (k == "spatial.reynolds") c.reynolds = parse_double(k, val);
        else if (k == "spatial.lid_speed") c.lid_speed = parse_double(k, val);
        else if (k == "spatial.u_file") c.velocity_u_file = val;
        else if (k == "spatial.z_file") c.velocity_z_file = val;
        else if (k == "output.dir") c.out_dir = val;
        else throw ConfigError("config: unknown key '" + k + "'");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "[experiment]\n";
    o << "kind = " << kind_name(c.kind) << "\n";
    o << "closure = " << method_name(c.method) << "\n";
    o << "order = " << c.order << "\n";
    o << "n_q = " << c.n_q << "\n";
    o << "dt = " << format_g17(c.dt) << "\n";
    o << "t_final = " << format_g17(c.t_final) << "\n";
    o << "safety = " << format_g17(c.safety) << "\n";
    o << "threads = " << c.threads << "\n";
    o << "snapshot_every = " << c.snapshot_every << "\n";
    o << "transport_only = " << (c.transport_only ? "true" : "false") << "\n";
    o << "audit_realizability = " << (c.audit_realizability ? "true" : "false") << "\n";
    o << "gamma_scale = " << format_g17(c.gamma_scale) << "\n";
    o << "omega_scale = " << format_g17(c.omega_scale) << "\n";
    o << "\n[domain]\n";
    o << "v_min = " << format_g17(c.v_min) << "\n";
    o << "v_max = " << format_g17(c.v_max) << "\n";
    o << "\n[initial]\n";
    o << "n0 = " << format_g17(c.initial.number_density) << "\n";
    o << "v0 = " << format_g17(c.initial.mean_volume) << "\n";
    o << "sigma = " << format_g17(c.initial.sigma) << "\n";
    o << "\n[sectional]\n";
    o << "n_v = " << c.n_v << "\n";
    o << "\n[breakage]\n";
    o << "p = " << c.breakage.p << "\n";
    o << "m = " << c.breakage.m << "\n";
    o << "c1 = " << format_g17(c.breakage.C1) << "\n";
    o << "c2 = " << format_g17(c.breakage.C2) << "\n";
    o << "alpha_d = " << format_g17(c.breakage.alpha_d) << "\n";
    o << "epsilon = " << format_g17(c.breakage.epsilon) << "\n";
    o << "rho_d = " << format_g17(c.breakage.rho_d) << "\n";
    o << "sigma = " << format_g17(c.breakage.sigma) << "\n";
    o << "\n[aggregation]\n";
    o << "c_omega = " << format_g17(c.aggregation.C_omega) << "\n";
    o << "k_omega = " << format_g17(c.aggregation.k_omega) << "\n";
    o << "alpha_d = " << format_g17(c.aggregation.alpha_d) << "\n";
    o << "epsilon = " << format_g17(c.aggregation.epsilon) << "\n";
    o << "rho_c = " << format_g17(c.aggregation.rho_c) << "\n";
    o << "sigma = " << format_g17(c.aggregation.sigma) << "\n";
    o << "eta_c = " << format_g17(c.aggregation.eta_c) << "\n";
    o << "\n[newton]\n";
    o << "k_max = " << c.newton.k_max << "\n";
    o << "eps = " << format_g17(c.newton.eps) << "\n";
    o << "chi = " << format_g17(c.newton.chi) << "\n";
    o << "tau = " << format_g17(c.newton.tau) << "\n";
    o << "r_list = ";
    for (std::size_t i = 0; i < c.newton.r_list.size(); ++i)
        o << (i ? "," : "") << format_g17(c.newton.r_list[i]);
    o << "\n";
    o << "\n[spatial]\n";
    o << "nx = " << c.nx << "\n";
    o << "ny = " << c.ny << "\n";
    o << "diffusion = " << format_g17(c.diffusion) << "\n";
    o << "reynolds = " << format_g17(c.reynolds) << "\n";
    o << "lid_speed = " << format_g17(c.lid_speed) << "\n";
    if (!c.velocity_u_file.empty()) o << "u_file = " << c.velocity_u_file << "\n";
    if (!c.velocity_z_file.empty()) o << "z_file = " << c.velocity_z_file << "\n";
    if (!c.out_dir.empty()) {
        o << "\n[output]\n";
        o << "dir = " << c.out_dir << "\n";
    }
    return o.str();
}

// ---------------------------------------------------------- initial data --

namespace {

double gaussian_density(const InitialCondition& ic, double v) {
    const double pi = std::acos(-1.0);
    const double z = (v - ic.mean_volume) / ic.sigma;
    return ic.number_density / (std::sqrt(2.0 * pi) * ic.sigma) * std::exp(-0.5 * z * z);
}

double gaussian_mass_between(const InitialCondition& ic, double a, double b) {
    const double s = ic.sigma * std::sqrt(2.0);
    return 0.5 * ic.number_density *
           (std::erf((b - ic.mean_volume) / s) - std::erf((a - ic.mean_volume) / s));
}

} // namespace

MomentVector initial_moments(const ExperimentConfig& config, const QuadratureRule& rule) {
    return moments_from_density([&](double v) { return gaussian_density(config.initial, v); },
                                config.order, MomentBasis::monomial, rule);
}

SectionalState initial_sectional(const ExperimentConfig& config, const VolumeGrid& grid) {
    SectionalState st;
    st.f.resize(grid.n_v);
    for (int c = 0; c < grid.n_v; ++c)
        st.f[c] = gaussian_mass_between(config.initial, grid.edge(c), grid.edge(c + 1)) / grid.dv;
    return st;
}

MomentField initial_moment_field(const ExperimentConfig& config, const Grid2D& grid,
                                 const QuadratureRule& rule) {
    MomentField field(config.order, grid, config.domain());
    const MomentVector base = initial_moments(config, rule);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double s = cavity_spatial_gaussian(grid.xc(i), grid.yc(j));
            double* dst = field.cell(grid.idx(i, j));
            for (int k = 0; k <= config.order; ++k) dst[k] = s * base.values[k];
        }
    return field;
}

std::vector<double> initial_sectional_field(const ExperimentConfig& config, const Grid2D& grid,
                                            const VolumeGrid& vgrid) {
    const SectionalState base = initial_sectional(config, vgrid);
    std::vector<double> field(static_cast<std::size_t>(grid.cells()) * vgrid.n_v);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double s = cavity_spatial_gaussian(grid.xc(i), grid.yc(j));
            double* dst = field.data() + static_cast<std::size_t>(grid.idx(i, j)) * vgrid.n_v;
            for (int c = 0; c < vgrid.n_v; ++c) dst[c] = s * base.f[c];
        }
    return field;
}

// ------------------------------------------------------------------- E_2 --

namespace {

// linear interpolation of a series onto a target time grid
std::vector<double> resample(const std::vector<double>& t_src, const std::vector<double>& src,
                             const std::vector<double>& t_dst) {
    std::vector<double> out(t_dst.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < t_dst.size(); ++i) {
        const double t = t_dst[i];
        while (k + 2 < t_src.size() && t_src[k + 1] < t) ++k;
        if (t <= t_src.front()) out[i] = src.front();
        else if (t >= t_src.back()) out[i] = src.back();
        else {
            const double w = (t - t_src[k]) / (t_src[k + 1] - t_src[k]);
            out[i] = (1.0 - w) * src[k] + w * src[k + 1];
        }
    }
    return out;
}

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
    std::vector<double> w(t.size(), 0.0);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double h = 0.5 * (t[i + 1] - t[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    return w;
}

} // namespace

double relative_l2_error(const std::vector<double>& ref_times, const std::vector<double>& ref,
                         const std::vector<double>& cand_times, const std::vector<double>& cand) {
    if (ref_times.size() != ref.size() || cand_times.size() != cand.size() || ref.empty())
        throw std::invalid_argument("relative_l2_error: inconsistent series");
    const std::vector<double> c =
        (ref_times == cand_times) ? cand : resample(cand_times, cand, ref_times);
    const std::vector<double> w = trapezoid_weights(ref_times);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        num += w[i] * (ref[i] - c[i]) * (ref[i] - c[i]);
        den += w[i] * ref[i] * ref[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

double relative_l2_error_fields(const std::vector<double>& ref_times,
                                const std::vector<std::vector<double>>& ref,
                                const std::vector<double>& cand_times,
                                const std::vector<std::vector<double>>& cand) {
    if (ref_times.size() != ref.size() || cand_times.size() != cand.size() || ref.empty())
        throw std::invalid_argument("relative_l2_error_fields: inconsistent histories");
    const std::size_t ncell = ref.front().size();
    const std::vector<double> w = trapezoid_weights(ref_times);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref_times.size(); ++i) {
        // candidate snapshot at the reference time by linear interpolation
        const std::vector<double>* lo = nullptr;
        const std::vector<double>* hi = nullptr;
        double frac = 0.0;
        const double t = ref_times[i];
        if (t <= cand_times.front()) lo = hi = &cand.front();
        else if (t >= cand_times.back()) lo = hi = &cand.back();
        else {
            std::size_t k = 0;
            while (k + 2 < cand_times.size() && cand_times[k + 1] < t) ++k;
            lo = &cand[k];
            hi = &cand[k + 1];
            frac = (t - cand_times[k]) / (cand_times[k + 1] - cand_times[k]);
        }
        if (lo->size() != ncell || hi->size() != ncell)
            throw std::invalid_argument("relative_l2_error_fields: grid mismatch");
        for (std::size_t cidx = 0; cidx < ncell; ++cidx) {
            const double cv = (1.0 - frac) * (*lo)[cidx] + frac * (*hi)[cidx];
            num += w[i] * (ref[i][cidx] - cv) * (ref[i][cidx] - cv);
            den += w[i] * ref[i][cidx] * ref[i][cidx];
        }
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

double relative_l2_error(const RunReport& reference, const RunReport& candidate) {
    if (!reference.gamma0_fields.empty() && !candidate.gamma0_fields.empty())
        return relative_l2_error_fields(reference.times, reference.gamma0_fields,
                                        candidate.times, candidate.gamma0_fields);
    return relative_l2_error(reference.times, reference.gamma0, candidate.times,
                             candidate.gamma0);
}

// ----------------------------------------------------------------- runner --

namespace {

struct PhaseTimers {
    double closure = 0.0, sources = 0.0, transport = 0.0;
};

ClosureKind closure_kind(Method m) {
    switch (m) {
    case Method::pn: return ClosureKind::pn;
    case Method::mn: return ClosureKind::mn;
    case Method::qmom: return ClosureKind::qmom;
    default: throw std::logic_error("closure_kind: sectional method has no closure");
    }
}

// Homogeneous closure advance by dt, substepping under the reaction bound.
void react_moments(MomentVector& gamma, const ExperimentConfig& config, const KernelSet& ks,
                   const QuadratureRule& rule, const SourceWorkspace& ws, double dt,
                   RunReport& rep, PhaseTimers& timers) {
    double remaining = dt;
    while (remaining > 0.0) {
        double h = remaining;
        SourceEvaluation src;
        const auto t0 = Clock::now();
        switch (config.method) {
        case Method::pn: {
            const PolynomialReconstruction rec =
                pn_close(basis_convert(gamma, MomentBasis::shifted_legendre));
            timers.closure += seconds_since(t0);
            h = std::min(h, cfl_homogeneous(rec, ws, config.safety));
            const auto t1 = Clock::now();
            src = sources_continuous(rec, ws);
            timers.sources += seconds_since(t1);
            break;
        }
        case Method::mn: {
            const MaxEntReconstruction rec = maxent_solve(gamma, rule, config.newton);
            timers.closure += seconds_since(t0);
            rep.newton_iterations += rec.newton_iterations;
            rep.max_gradient_norm = std::max(rep.max_gradient_norm, rec.final_gradient_norm);
            if (rec.regularization_r > 0.0) {
                ++rep.regularized_solves;
                rep.max_regularization_r =
                    std::max(rep.max_regularization_r, rec.regularization_r);
                gamma = rec.regularized_moments;
            }
            h = std::min(h, cfl_homogeneous(rec, ws, config.safety));
            const auto t1 = Clock::now();
            src = sources_continuous(rec, ws);
            timers.sources += seconds_since(t1);
            break;
        }
        case Method::qmom: {
            const AtomicReconstruction rec = wheeler_invert(gamma, qmom_atom_count(gamma.order));
            timers.closure += seconds_since(t0);
            h = std::min(h, cfl_homogeneous(rec, ks, rule, config.safety));
            const auto t1 = Clock::now();
            src = sources_qmom(rec, ks, rule, gamma.order, ws.with_aggregation, ws.with_breakage);
            timers.sources += seconds_since(t1);
            break;
        }
        default:
            throw std::logic_error("react_moments: sectional method handled elsewhere");
        }
        const std::vector<double> total = src.total();
        for (int k = 0; k <= gamma.order; ++k) gamma.values[k] += h * total[k];
        remaining -= h;
    }
}

RunReport run_homogeneous(const ExperimentConfig& config) {
    RunReport rep;
    const KernelSet ks = config.kernels();
    const bool with_brk = config.kind != ExperimentKind::aggregation;
    const bool with_agg = config.kind != ExperimentKind::breakage;
    const int steps = static_cast<int>(std::round(config.t_final / config.dt));
    PhaseTimers timers;
    const auto t_run = Clock::now();

    if (config.method == Method::fvs) {
        const VolumeGrid grid(config.n_v, config.domain());
        const FvsWorkspace ws = make_fvs_workspace(grid, ks, with_brk, with_agg);
        SectionalState state = initial_sectional(config, grid);
        rep.mass_initial = mass_moment(state, grid);
        rep.times.push_back(0.0);
        rep.gamma0.push_back(zeroth_moment(state, grid));
        rep.gamma1.push_back(rep.mass_initial);
        for (int s = 1; s <= steps; ++s) {
            const auto t1 = Clock::now();
            state = fvs_advance(state, ws, config.dt);
            timers.sources += seconds_since(t1);
            rep.times.push_back(s * config.dt);
            rep.gamma0.push_back(zeroth_moment(state, grid));
            rep.gamma1.push_back(mass_moment(state, grid));
        }
        rep.mass_final = mass_moment(state, grid);
    } else {
        const QuadratureRule rule = gauss_lobatto(config.n_q, config.domain());
        const SourceWorkspace ws = make_source_workspace(config.order, ks, rule, with_agg, with_brk);
        MomentVector gamma = initial_moments(config, rule);
        rep.mass_initial = gamma.values.size() > 1 ? gamma.values[1] : 0.0;
        rep.times.push_back(0.0);
        rep.gamma0.push_back(gamma.values[0]);
        rep.gamma1.push_back(rep.mass_initial);
        for (int s = 1; s <= steps; ++s) {
            react_moments(gamma, config, ks, rule, ws, config.dt, rep, timers);
            if (config.audit_realizability && config.method == Method::mn) {
                ++rep.realizability_checks;
                if (!realizable_q(gamma, rule)) rep.realizability_ok = false;
            }
            rep.times.push_back(s * config.dt);
            rep.gamma0.push_back(gamma.values[0]);
            rep.gamma1.push_back(gamma.values.size() > 1 ? gamma.values[1] : 0.0);
        }
        rep.mass_final = gamma.values.size() > 1 ? gamma.values[1] : 0.0;
    }
    rep.seconds_closure = timers.closure;
    rep.seconds_sources = timers.sources;
    rep.seconds_transport = 0.0;
    rep.seconds_total = seconds_since(t_run);
    return rep;
}

VelocityField cavity_field(const ExperimentConfig& config, const Grid2D& grid) {
    VelocityField vel;
    if (!config.velocity_u_file.empty() || !config.velocity_z_file.empty()) {
        if (config.velocity_u_file.empty() || config.velocity_z_file.empty())
            throw ConfigError("config: both u_file and z_file must be given");
        vel.u = load_field_text(config.velocity_u_file, grid);
        vel.z = load_field_text(config.velocity_z_file, grid);
        vel.d.assign(grid.cells(), 0.0);
    } else {
        vel = cavity_velocity(grid, config.reynolds, config.lid_speed);
    }
    vel.d.assign(grid.cells(), config.diffusion);
    return vel;
}

RunReport run_cavity(const ExperimentConfig& config) {
    RunReport rep;
    const KernelSet ks = config.kernels();
    const Grid2D grid(config.nx, config.ny);
    rep.grid = grid;
    const VelocityField vel = cavity_field(config, grid);
    const double cell_area = grid.dx() * grid.dy();
    const int steps = static_cast<int>(std::round(config.t_final / config.dt));
    PhaseTimers timers;
    const auto t_run = Clock::now();

    const double dt_transport = cfl_spatial(vel, grid, config.safety);

    if (config.method == Method::fvs) {
        const VolumeGrid vgrid(config.n_v, config.domain());
        const FvsWorkspace fws =
            make_fvs_workspace(vgrid, ks, !config.transport_only, !config.transport_only);
        std::vector<double> field = initial_sectional_field(config, grid, vgrid);
        const int ncell = grid.cells();

        auto gamma0_field = [&]() {
            std::vector<double> g(ncell);
            for (int c = 0; c < ncell; ++c)
                g[c] = vgrid.dv * simd::sum(field.data() + static_cast<std::size_t>(c) * vgrid.n_v,
                                            vgrid.n_v);
            return g;
        };
        auto mass_total = [&]() {
            double m = 0.0;
            for (int c = 0; c < ncell; ++c) {
                SectionalState st;
                st.f.assign(field.begin() + static_cast<std::size_t>(c) * vgrid.n_v,
                            field.begin() + static_cast<std::size_t>(c + 1) * vgrid.n_v);
                m += mass_moment(st, vgrid) * cell_area;
            }
            return m;
        };

        rep.mass_initial = mass_total();
        rep.times.push_back(0.0);
        rep.gamma0_fields.push_back(gamma0_field());
        {
            double tot = 0.0;
            for (double g : rep.gamma0_fields.back()) tot += g * cell_area;
            rep.gamma0.push_back(tot);
        }
        rep.gamma1.push_back(rep.mass_initial);

        std::vector<double> slice(ncell);
        for (int s = 1; s <= steps; ++s) {
            double remaining = config.dt;
            while (remaining > 0.0) {
                const double h = std::min(remaining, dt_transport);
                const auto t1 = Clock::now();
                for (int vc = 0; vc < vgrid.n_v; ++vc) {
                    for (int c = 0; c < ncell; ++c)
                        slice[c] = field[static_cast<std::size_t>(c) * vgrid.n_v + vc];
                    const std::vector<double> moved = advect_diffuse_step(slice, vel, grid, h);
                    for (int c = 0; c < ncell; ++c) {
                        if (moved[c] < 0.0)
                            throw TimeStepError("cavity fvs: negative cell after transport");
                        field[static_cast<std::size_t>(c) * vgrid.n_v + vc] = moved[c];
                    }
                }
                timers.transport += seconds_since(t1);
                if (!config.transport_only) {
                    const auto t2 = Clock::now();
                    for (int c = 0; c < ncell; ++c) {
                        SectionalState st;
                        st.f.assign(field.begin() + static_cast<std::size_t>(c) * vgrid.n_v,
                                    field.begin() + static_cast<std::size_t>(c + 1) * vgrid.n_v);
                        st = fvs_advance(st, fws, h);
                        std::copy(st.f.begin(), st.f.end(),
                                  field.begin() + static_cast<std::size_t>(c) * vgrid.n_v);
                    }
                    timers.sources += seconds_since(t2);
                }
                remaining -= h;
            }
            rep.times.push_back(s * config.dt);
            rep.gamma0_fields.push_back(gamma0_field());
            double tot = 0.0;
            for (double g : rep.gamma0_fields.back()) tot += g * cell_area;
            rep.gamma0.push_back(tot);
            rep.gamma1.push_back(mass_total());
        }
        rep.mass_final = mass_total();
    } else {
        const QuadratureRule rule = gauss_lobatto(config.n_q, config.domain());
        const SourceWorkspace sws = make_source_workspace(config.order, ks, rule, true, true);
        MomentField field = initial_moment_field(config, grid, rule);
        const int ncell = grid.cells();

        auto gamma0_field = [&]() {
            std::vector<double> g(ncell);
            for (int c = 0; c < ncell; ++c) g[c] = field.cell(c)[0];
            return g;
        };
        auto mass_total = [&]() {
            double m = 0.0;
            if (config.order >= 1)
                for (int c = 0; c < ncell; ++c) m += field.cell(c)[1] * cell_area;
            return m;
        };

        rep.mass_initial = mass_total();
        rep.times.push_back(0.0);
        rep.gamma0_fields.push_back(gamma0_field());
        {
            double tot = 0.0;
            for (double g : rep.gamma0_fields.back()) tot += g * cell_area;
            rep.gamma0.push_back(tot);
        }
        rep.gamma1.push_back(rep.mass_initial);

        for (int s = 1; s <= steps; ++s) {
            double remaining = config.dt;
            while (remaining > 0.0) {
                const double h = std::min(remaining, dt_transport);
                TransportStats tstats;
                const auto t1 = Clock::now();
                field = transport_moments(field, closure_kind(config.method), vel, grid, rule,
                                          config.newton, h, config.threads, &tstats);
                timers.transport += seconds_since(t1);
                rep.newton_iterations += tstats.newton_iterations;
                rep.regularized_solves += tstats.regularized_solves;
                rep.max_regularization_r =
                    std::max(rep.max_regularization_r, tstats.max_regularization_r);
                rep.max_gradient_norm = std::max(rep.max_gradient_norm, tstats.max_gradient_norm);

                if (!config.transport_only) {
                    // reaction on every cell, substepping under the per-cell bound
                    const auto t2 = Clock::now();
                    const int slots = config.threads > 1 ? ncell : 1;
                    std::vector<PhaseTimers> cell_timers(slots);
                    std::vector<RunReport> cell_reports(slots);
                    auto react_cell = [&](int c) {
                        MomentVector gm = field.moments_at(c);
                        RunReport& r = cell_reports[config.threads > 1 ? c : 0];
                        PhaseTimers& pt = cell_timers[config.threads > 1 ? c : 0];
                        react_moments(gm, config, ks, rule, sws, h, r, pt);
                        double* dst = field.cell(c);
                        for (int k = 0; k <= config.order; ++k) dst[k] = gm.values[k];
                    };
                    if (config.threads > 1) {
                        std::vector<std::future<void>> futs;
                        std::atomic<int> next{0};
                        for (int t = 0; t < config.threads; ++t)
                            futs.push_back(std::async(std::launch::async, [&]() {
                                for (;;) {
                                    const int c = next.fetch_add(1);
                                    if (c >= ncell) return;
                                    react_cell(c);
                                }
                            }));
                        for (auto& f : futs) f.get();
                    } else {
                        for (int c = 0; c < ncell; ++c) react_cell(c);
                    }
                    for (const auto& r : cell_reports) {
                        rep.newton_iterations += r.newton_iterations;
                        rep.regularized_solves += r.regularized_solves;
                        rep.max_regularization_r =
                            std::max(rep.max_regularization_r, r.max_regularization_r);
                        rep.max_gradient_norm = std::max(rep.max_gradient_norm, r.max_gradient_norm);
                    }
                    for (const auto& pt : cell_timers) timers.closure += pt.closure;
                    timers.sources += seconds_since(t2);
                }
                remaining -= h;
            }
            if (config.audit_realizability && config.method == Method::mn) {
                for (int c = 0; c < ncell; ++c) {
                    ++rep.realizability_checks;
                    if (!realizable_q(field.moments_at(c), rule)) rep.realizability_ok = false;
                }
            }
            rep.times.push_back(s * config.dt);
            rep.gamma0_fields.push_back(gamma0_field());
            double tot = 0.0;
            for (double g : rep.gamma0_fields.back()) tot += g * cell_area;
            rep.gamma0.push_back(tot);
            rep.gamma1.push_back(mass_total());
        }
        rep.mass_final = mass_total();
    }
    rep.seconds_closure = timers.closure;
    rep.seconds_sources = timers.sources;
    rep.seconds_transport = timers.transport;
    rep.seconds_total = seconds_since(t_run);
    return rep;
}

void write_snapshots(const ExperimentConfig& config, const RunReport& rep) {
    if (config.snapshot_every <= 0 || rep.gamma0_fields.empty() || config.out_dir.empty())
        return;
    const Grid2D& grid = rep.grid;
    for (std::size_t s = 0; s < rep.gamma0_fields.size();
         s += static_cast<std::size_t>(config.snapshot_every)) {
        char name[128];
        std::snprintf(name, sizeof name, "%s_%s_gamma0_step%06zu.txt", kind_name(config.kind),
                      method_name(config.method), s);
        save_field_text((std::filesystem::path(config.out_dir) / name).string(),
                        rep.gamma0_fields[s], grid);
    }
}

} // namespace

RunReport run(const ExperimentConfig& config) {
    config.validate();
    RunReport rep = (config.kind == ExperimentKind::cavity) ? run_cavity(config)
                                                            : run_homogeneous(config);

    nlohmann::json j;
    j["experiment"] = kind_name(config.kind);
    j["closure"] = method_name(config.method);
    j["order"] = config.order;
    j["n_q"] = config.n_q;
    j["n_v"] = config.n_v;
    j["dt"] = config.dt;
    j["t_final"] = config.t_final;
    j["seconds"] = {{"closure", rep.seconds_closure},
                    {"sources", rep.seconds_sources},
                    {"transport", rep.seconds_transport},
                    {"total", rep.seconds_total}};
    j["newton"] = {{"iterations", rep.newton_iterations},
                   {"regularized_solves", rep.regularized_solves},
                   {"max_r", rep.max_regularization_r},
                   {"max_gradient_norm", rep.max_gradient_norm}};
    const double den = rep.mass_initial != 0.0 ? std::abs(rep.mass_initial) : 1.0;
    j["mass_drift_rel"] = std::abs(rep.mass_final - rep.mass_initial) / den;
    if (!std::isnan(rep.e2)) j["e2"] = rep.e2;
    if (config.audit_realizability)
        j["realizability"] = {{"checks", rep.realizability_checks}, {"ok", rep.realizability_ok}};
    rep.summary = j.dump();

    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        char name[128];
        std::snprintf(name, sizeof name, "%s_%s_N%d.csv", kind_name(config.kind),
                      method_name(config.method), config.order);
        rep.csv_path = (std::filesystem::path(config.out_dir) / name).string();
        write_series_csv(rep.csv_path, rep);
        write_snapshots(config, rep);
        std::ofstream sum(std::filesystem::path(config.out_dir) /
                          (std::string(name) + ".summary.json"));
        sum << rep.summary << "\n";
    }
    return rep;
}

std::vector<SweepRow> sweep_orders(const ExperimentConfig& config, const std::vector<int>& orders,
                                   bool parallel, const RunReport* reference) {
    if (config.method == Method::fvs)
        throw ConfigError("sweep: closure must be pn, mn or qmom");
    RunReport local_ref;
    if (!reference) {
        ExperimentConfig rc = config;
        rc.method = Method::fvs;
        rc.out_dir.clear();
        local_ref = run(rc);
        reference = &local_ref;
    }

    std::vector<SweepRow> rows(orders.size());
    auto member = [&](std::size_t i) {
        ExperimentConfig mc = config;
        mc.order = orders[i];
        mc.out_dir.clear();
        const RunReport rep = run(mc);
        rows[i].order = orders[i];
        rows[i].seconds = rep.seconds_total;
        rows[i].e2 = relative_l2_error(*reference, rep);
    };
    if (parallel) {
        std::vector<std::future<void>> futs;
        for (std::size_t i = 0; i < orders.size(); ++i)
            futs.push_back(std::async(std::launch::async, member, i));
        for (auto& f : futs) f.get();
    } else {
        for (std::size_t i = 0; i < orders.size(); ++i) member(i);
    }
    return rows;
}

void write_series_csv(const std::string& path, const RunReport& report) {
    std::ofstream out(path);
    if (!out) throw EvaluationError("write_series_csv: cannot open " + path);
    out << "t,gamma0,gamma1\n";
    for (std::size_t i = 0; i < report.times.size(); ++i)
        out << format_g17(report.times[i]) << ',' << format_g17(report.gamma0[i]) << ','
            << format_g17(report.gamma1[i]) << '\n';
}

std::pair<std::vector<double>, std::vector<double>> read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EvaluationError("read_series_csv: cannot open " + path);
    std::string line;
    std::vector<double> t, g;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::getline(ls, tok, ',');
        t.push_back(std::stod(tok));
        std::getline(ls, tok, ',');
        g.push_back(std::stod(tok));
    }
    return {t, g};
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw EvaluationError("write_sweep_csv: cannot open " + path);
    out << "order,seconds,e2\n";
    for (const SweepRow& r : rows)
        out << r.order << ',' << format_g17(r.seconds) << ',' << format_g17(r.e2) << '\n';
}

} // namespace pbe
