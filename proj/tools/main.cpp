// Command-line front end: one subcommand per artifact set, a config file as
// the single source of parameters, optional --out/--seed overrides.
// Exit codes: 0 success, 1 domain error during the run, 2 usage or
// configuration error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bilat/commands.hpp"
#include "bilat/config.hpp"
#include "bilat/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bichromatic triangular-lattice instrument model"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    for (const std::string& name : bilat::commands::subcommands()) {
        CLI::App* sub = app.add_subcommand(name, bilat::commands::description(name));
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
        sub->add_option("--seed", seed, "random seed (overrides run.seed)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 2;
    }

    const CLI::App* sub = app.get_subcommands().front();
    try {
        bilat::config::RunConfig cfg = bilat::config::parse_config_file(config_path);
        if (sub->count("--out") > 0) cfg.output.directory = out_dir;
        if (sub->count("--seed") > 0) cfg.run.seed = seed;
        bilat::commands::run(sub->get_name(), cfg);
        return 0;
    } catch (const bilat::ConfigError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 2;
    } catch (const bilat::Error& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    }
}
