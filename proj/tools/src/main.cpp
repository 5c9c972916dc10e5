#include <iostream>

#include <CLI11.hpp>

#include "nzsg_tools/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Solver and Nash-equilibrium verifier for two-player stochastic differential games"};
    app.set_version_flag("--version", std::string(nzsg::tools::kVersion));
    app.require_subcommand(1);

    nzsg::tools::CommandLine cli;
    std::string scenario, config, out_dir;
    std::uint64_t seed = 0;

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"validate", "Check the standing assumptions of a scenario by sampling"},
        {"solve", "Solve the HJBI system on expanding domains and dump the field"},
        {"verify", "Solve (or load) a field, then run the value-match and Girsanov checks"},
        {"deviate", "Solve (or load) a field, then run the Nash deviation suite"},
        {"scenarios", "List the built-in scenarios"},
        {"export", "Re-emit a stored field file as CSV"},
    };
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        if (std::string(s.name) == "scenarios") continue;
        sub->add_option("--scenario", scenario, "Built-in scenario name");
        sub->add_option("--config", config, "Config file")->check(CLI::ExistingFile);
        sub->add_option("--set", cli.sets, "Override: section.key=value (repeatable)");
        sub->add_option("--out-dir", out_dir, "Directory for reports and fields");
        sub->add_option("--seed", seed, "Monte-Carlo seed");
        sub->add_flag("--quiet", cli.quiet, "Only print errors");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : nzsg::tools::kConfigError;
    }

    for (CLI::App* sub : app.get_subcommands()) {
        cli.command = sub->get_name();
        if (cli.command == "scenarios") break;
        if (sub->count("--scenario")) cli.scenario = scenario;
        if (sub->count("--config")) cli.config_path = config;
        if (sub->count("--out-dir")) cli.out_dir = out_dir;
        if (sub->count("--seed")) cli.seed = seed;
    }
    return nzsg::tools::run(cli, std::cout, std::cerr);
}
