#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kinkflow/cli.hpp"

namespace {

kinkflow::io::ExperimentConfig load(const std::string& path) { return kinkflow::io::load_config(path); }

}  // namespace

int main(int argc, char** argv) {
    using namespace kinkflow;
    CLI::App app{"Phase-field elastic curves with kinks: gradient flow, recovery sequences and eps sweeps"};
    app.require_subcommand(1);
    app.footer(io::config_help() + "\nEnvironment:\n  KINKFLOW_THREADS caps the number of sweep workers.\n"
               "\nExit codes: 0 success, 2 usage or input error, 3 flow blow-up.\n");

    std::string config;
    auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config, "configuration file")->required(); };

    auto* evolve = app.add_subcommand("evolve", "run the gradient flow; writes energy.csv and snapshots");
    add_config(evolve);
    std::string out_dir;
    evolve->add_option("--output", out_dir, "output directory (overrides output.directory)");

    auto* sweep = app.add_subcommand("sweep", "eps sweep of recovery energies against the sharp energy");
    add_config(sweep);
    cli::SweepRequest sweep_req;
    std::vector<double> sweep_eps;
    sweep->add_option("--eps", sweep_eps, "eps values, strictly decreasing")->delimiter(',');
    sweep->add_option("--sharp", sweep_req.sharp_file, "sharp state file");
    sweep->add_option("--output", sweep_req.output, "CSV path (default <output.directory>/sweep.csv)");
    sweep->add_option("--threads", sweep_req.threads, "worker threads (0: all cores)");

    auto* recover = app.add_subcommand("recover", "build the recovery sequence of a sharp state");
    add_config(recover);
    cli::RecoverRequest rec_req;
    double rec_eps = 0.0;
    recover->add_option("--sharp", rec_req.sharp_file, "sharp state file");
    auto* rec_eps_opt = recover->add_option("--eps", rec_eps, "eps of the construction");
    recover->add_option("--output", rec_req.output, "snapshot CSV path (default <output.directory>/recovery.csv)");

    auto* energy = app.add_subcommand("energy", "print the energy of a snapshot");
    add_config(energy);
    std::string state_file;
    energy->add_option("--state", state_file, "snapshot CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::exit_ok : cli::exit_usage;
    }

    io::ExperimentConfig cfg;
    try {
        cfg = load(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_usage;
    }
    if (*evolve) {
        if (!out_dir.empty()) cfg.output.directory = out_dir;
        return cli::cmd_evolve(cfg, std::cout, std::cerr);
    }
    if (*sweep) {
        sweep_req.eps = sweep_eps;
        return cli::cmd_sweep(cfg, sweep_req, std::cout, std::cerr);
    }
    if (*recover) {
        if (*rec_eps_opt) rec_req.eps = rec_eps;
        return cli::cmd_recover(cfg, rec_req, std::cout, std::cerr);
    }
    return cli::cmd_energy(cfg, state_file, std::cout, std::cerr);
}
