#include "selftrain/cli/cli.hpp"

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "selftrain/cli/commands.hpp"
#include "selftrain/errors.hpp"

namespace selftrain::cli {

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Iterative ensemble self-training for semi-supervised classification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string journal_path;

    CLI::App* gen_data = app.add_subcommand(
        "gen-data", "Generate a synthetic benchmark as CSV files");
    gen_data->add_option("--config", config_path, "Run configuration file")->required();

    CLI::App* run = app.add_subcommand(
        "run", "Run the configured experiment(s) and write journal + reports");
    run->add_option("--config", config_path, "Run configuration file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides config)");

    CLI::App* report = app.add_subcommand(
        "report", "Regenerate report tables from a journal");
    report->add_option("--journal", journal_path, "Journal file from a previous run")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen_data->parsed()) {
            cmd_gen_data(config_path, std::cout);
        } else if (run->parsed()) {
            cmd_run(config_path, out_dir, std::cout);
        } else if (report->parsed()) {
            cmd_report(journal_path, std::cout);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 2;
    } catch (const TrainingDivergence& e) {
        std::cerr << "error: training: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace selftrain::cli
