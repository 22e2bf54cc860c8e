#include <iostream>
#include <string>

#ifdef SSHCHAIN_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "sshchain/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Finite SSH chain: spectra, topology, transmission and circuit fits"};
    app.require_subcommand(1);
    app.fallthrough();

    sshchain::cli::RunConfig config;
    std::string config_path;
    std::string out_dir;
    std::string label;
    std::uint64_t seed = 0;

    app.add_option("-c,--config", config_path, "JSON config document")->check(CLI::ExistingFile);
    app.add_option("-s,--set", config.overrides, "Override a config value: dotted.path=value");
    app.add_option("-o,--out", out_dir,
                   "Output directory (default: $" + std::string(sshchain::cli::kOutputDirEnv) + " or .)");
    app.add_option("-l,--label", label, "Output name suffix (default: UTC timestamp)");
    auto* seed_opt = app.add_option("--seed", seed, "Seed for the disorder ensemble");
    app.add_option("-j,--threads", config.threads, "Worker threads (0: all cores)")->capture_default_str();
    app.add_flag("--dry-run", config.dry_run, "Validate and print the resolved config, compute nothing");

    const std::pair<const char*, const char*> commands[] = {
        {"spectrum", "Eigenmodes and edge/bulk classification of one chain"},
        {"sweep", "Spectrum and FSR versus coupling inductance"},
        {"winding", "Real-space and/or k-space winding number"},
        {"ipr", "Inverse participation ratios and edge localization lengths"},
        {"disorder", "Seeded disorder ensemble of the real-space winding number"},
        {"s21", "Two-port transmission of the circuit ladder and its peaks"},
        {"gatesweep", "Transmission traces along a joint or single gate sweep"},
        {"powersweep", "Spectrum versus signal current at a fixed gate setting"},
        {"fit", "Fit circuit parameters to a list of eigenfrequencies"},
    };
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help)->callback([&config, name = name] { config.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : sshchain::cli::kValidationFailure;
    }

    if (!config_path.empty()) config.config_path = config_path;
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!label.empty()) config.label = label;
    if (seed_opt->count() > 0) config.seed = seed;
    return sshchain::cli::run(config, std::cout, std::cerr);
}
