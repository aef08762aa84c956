#include "smaflow/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace smaflow;

int main(int argc, char** argv) {
    CLI::App app{"smaflow: split-type Monge-Ampere flow solver and verification lab"};
    app.require_subcommand(1);
    std::string config_path, out;
    bool deterministic = false;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "config file")->required();
    app.add_flag("--deterministic", deterministic, "fixed reduction order (serial kernels)");
    app.add_option("--out", out, "output directory, overrides [output] directory");
    app.add_option("--seed", seed, "seed for random initial data and identity fixtures");
    for (const auto& name : command_names()) app.add_subcommand(name);
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    exec::set_deterministic(deterministic);

    CommandResult r = guarded([&] {
        ExperimentConfig cfg = parse_config(config_path);
        if (!out.empty()) cfg.output.directory = out;
        if (seed) {
            cfg.initial.seed = *seed;
            cfg.identities.seed = *seed;
        }
        return run_command(cmd, cfg, true);
    });
    if (r.exit_code == kExitConfig || r.exit_code == kExitNumerical)
        std::cerr << "smaflow " << cmd << ": " << r.message << "\n";
    else
        std::cout << "smaflow " << cmd << ": " << r.message << " (exit " << r.exit_code << ")\n";
    return r.exit_code;
}
