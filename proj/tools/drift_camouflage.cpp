#include <iostream>

#include <CLI11.hpp>

#include "driftcam/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Hidden-drift simulation and verification experiments", "drift-camouflage"};
    app.require_subcommand(1);

    driftcam::CliOptions opts;
    std::string config;
    std::uint64_t seed = 0;
    for (const char* name : {"hidden", "concat", "discrete", "calibrate"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "experiment configuration (JSON)")->required();
        sub->add_option("--seed", seed, "master seed, overrides the config file");
        sub->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", opts.out, "output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? driftcam::kExitOk : driftcam::kExitConfig;
    }

    const auto* chosen = app.get_subcommands().front();
    opts.command = chosen->get_name();
    opts.config = config;
    if (chosen->count("--seed") > 0) opts.seed = seed;
    return driftcam::run_cli(opts);
}
