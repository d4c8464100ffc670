#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbe/experiments.hpp"

namespace {

// exit codes: 0 ok, 2 config error, 3 closure failure, 4 CFL/time-step
constexpr int kExitConfig = 2;
constexpr int kExitClosure = 3;
constexpr int kExitCfl = 4;

struct CommonOpts {
    std::string config_path;
    std::string closure;
    int order = -1;
    std::string out_dir;
    std::string profile;
};

pbe::ExperimentConfig resolve_config(const CommonOpts& opts) {
    pbe::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = pbe::load_config(opts.config_path);
    if (!opts.profile.empty()) {
        if (opts.profile == "desk") pbe::apply_profile(cfg, pbe::Profile::desk);
        else if (opts.profile == "paper") pbe::apply_profile(cfg, pbe::Profile::paper);
        else throw pbe::ConfigError("unknown profile '" + opts.profile + "'");
    }
    if (!opts.closure.empty()) {
        if (opts.closure == "pn") cfg.method = pbe::Method::pn;
        else if (opts.closure == "mn") cfg.method = pbe::Method::mn;
        else if (opts.closure == "qmom") cfg.method = pbe::Method::qmom;
        else if (opts.closure == "fvs") cfg.method = pbe::Method::fvs;
        else throw pbe::ConfigError("unknown closure '" + opts.closure + "'");
    }
    if (opts.order >= 0) cfg.order = opts.order;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    cfg.validate();
    return cfg;
}

std::vector<int> parse_orders(const std::string& spec) {
    std::vector<int> orders;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t comma = spec.find(',', pos);
        if (comma == std::string::npos) comma = spec.size();
        const std::string tok = spec.substr(pos, comma - pos);
        const std::size_t dash = tok.find('-');
        if (dash != std::string::npos && dash > 0) {
            const int lo = std::stoi(tok.substr(0, dash));
            const int hi = std::stoi(tok.substr(dash + 1));
            for (int n = lo; n <= hi; ++n) orders.push_back(n);
        } else {
            orders.push_back(std::stoi(tok));
        }
        pos = comma + 1;
    }
    if (orders.empty()) throw pbe::ConfigError("empty order list");
    return orders;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pbe: population balance moment-closure solver suite"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string orders_spec = "1-9";
    bool parallel = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "configuration file (INI)");
        cmd->add_option("--closure", opts.closure, "pn | mn | qmom | fvs");
        cmd->add_option("--order", opts.order, "moment order N");
        cmd->add_option("--out", opts.out_dir, "output directory");
        cmd->add_option("--profile", opts.profile, "desk | paper parameter profile");
    };

    CLI::App* cmd_run = app.add_subcommand("run", "run one experiment, write CSV + summary");
    add_common(cmd_run);

    CLI::App* cmd_sweep =
        app.add_subcommand("sweep", "run an order sweep against the sectional reference");
    add_common(cmd_sweep);
    cmd_sweep->add_option("--orders", orders_spec, "orders, e.g. 1-9 or 1,3,5");
    cmd_sweep->add_flag("--parallel", parallel,
                        "run members concurrently (forfeits timing comparability)");

    std::string ref_csv, cand_csv;
    CLI::App* cmd_error = app.add_subcommand("error", "relative L2 error between two run CSVs");
    cmd_error->add_option("--ref", ref_csv, "reference series CSV")->required();
    cmd_error->add_option("--cand", cand_csv, "candidate series CSV")->required();

    std::string u_out = "cavity_u.txt", z_out = "cavity_z.txt";
    CLI::App* cmd_cavity = app.add_subcommand(
        "cavity-velocity", "compute the steady cavity field and export u/z matrix files");
    add_common(cmd_cavity);
    cmd_cavity->add_option("--u-out", u_out, "output file for the x velocity component");
    cmd_cavity->add_option("--z-out", z_out, "output file for the y velocity component");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            pbe::ExperimentConfig cfg = resolve_config(opts);
            if (cfg.out_dir.empty()) cfg.out_dir = ".";
            const pbe::RunReport rep = pbe::run(cfg);
            std::printf("%s\n", rep.summary.c_str());
            if (!rep.csv_path.empty()) std::printf("wrote %s\n", rep.csv_path.c_str());
        } else if (cmd_sweep->parsed()) {
            pbe::ExperimentConfig cfg = resolve_config(opts);
            const std::vector<int> orders = parse_orders(orders_spec);
            const auto rows = pbe::sweep_orders(cfg, orders, parallel);
            std::string path = cfg.out_dir.empty() ? "sweep.csv" : cfg.out_dir + "/sweep.csv";
            if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
            pbe::write_sweep_csv(path, rows);
            std::printf("order,seconds,e2\n");
            for (const auto& r : rows) std::printf("%d,%.6g,%.12g\n", r.order, r.seconds, r.e2);
            std::printf("wrote %s\n", path.c_str());
        } else if (cmd_error->parsed()) {
            const auto ref = pbe::read_series_csv(ref_csv);
            const auto cand = pbe::read_series_csv(cand_csv);
            std::printf("%.12g\n",
                        pbe::relative_l2_error(ref.first, ref.second, cand.first, cand.second));
        } else if (cmd_cavity->parsed()) {
            pbe::ExperimentConfig cfg = resolve_config(opts);
            const pbe::Grid2D grid(cfg.nx, cfg.ny);
            const pbe::VelocityField vel =
                pbe::cavity_velocity(grid, cfg.reynolds, cfg.lid_speed);
            pbe::save_field_text(u_out, vel.u, grid);
            pbe::save_field_text(z_out, vel.z, grid);
            std::printf("wrote %s and %s (%dx%d)\n", u_out.c_str(), z_out.c_str(), cfg.nx, cfg.ny);
        }
    } catch (const pbe::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const pbe::OptimizationFailure& e) {
        std::fprintf(stderr, "closure failure: %s\n", e.what());
        return kExitClosure;
    } catch (const pbe::RealizabilityError& e) {
        std::fprintf(stderr, "closure failure: %s\n", e.what());
        return kExitClosure;
    } catch (const pbe::CflError& e) {
        std::fprintf(stderr, "cfl violation: %s\n", e.what());
        return kExitCfl;
    } catch (const pbe::TimeStepError& e) {
        std::fprintf(stderr, "time-step restriction: %s\n", e.what());
        return kExitCfl;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
