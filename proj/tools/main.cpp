// ensemble-backstep: kernels, closed-loop simulation and verification of
// backstepping control for ensembles of hyperbolic PDEs.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "ebs/cli.hpp"

namespace {

template <typename T>
void apply(std::optional<T>& opt, T& target) {
    if (opt) target = *opt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backstepping kernels and simulation for ensemble hyperbolic systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> model, mode, out, snapshots, kernels;
    std::optional<ebs::Index> nx, ny;
    std::optional<double> dt, t_final;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--model", model, "builtin model: toy or pure-transport");
        sub->add_option("--nx", nx, "x intervals");
        sub->add_option("--ny", ny, "ensemble nodes");
        sub->add_option("--dt", dt, "time step");
        sub->add_option("--t-final", t_final, "final time");
        sub->add_option("--mode", mode, "open, closed, target or verify");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--snapshots", snapshots, "comma separated snapshot times");
        sub->add_option("--seed", seed, "seed of the randomized checks");
        sub->add_option("--kernels", kernels, "kernels.csv to use instead of solving");
    };
    add_common(app.add_subcommand("kernels", "solve the kernel equations"));
    add_common(app.add_subcommand("simulate", "run the plant or the target system"));
    add_common(app.add_subcommand("verify", "run the invariant suite"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ebs::exit_ok : ebs::exit_bad_config;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    ebs::RunConfig config;
    try {
        if (!config_path.empty()) config = ebs::parse_config_file(config_path);
        apply(model, config.model);
        apply(mode, config.mode);
        apply(nx, config.grid.nx);
        apply(ny, config.grid.ny);
        apply(dt, config.grid.dt);
        apply(t_final, config.grid.t_final);
        apply(seed, config.seed);
        if (out) config.output_dir = *out;
        if (kernels) config.kernels_file = *kernels;
        if (snapshots) config.snapshot_times = ebs::parse_real_list(*snapshots);
    } catch (const ebs::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ebs::exit_bad_config;
    }
    return ebs::run_command(command, config, std::cerr);
}
