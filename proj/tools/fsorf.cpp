#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fsorf/cli/commands.hpp"
#include "fsorf/cli/config.hpp"
#include "fsorf/error.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool verbose = false;
};

void add_common(CLI::App& sub, Flags& flags) {
    sub.add_option("--config,-c", flags.config, "TOML run configuration")->required()->check(CLI::ExistingFile);
    sub.add_option("--out,-o", flags.out, "CSV destination (defaults to output.csv, then stdout)");
    sub.add_option("--seed", flags.seed, "override simulation.seed");
    sub.add_option("--threads,-j", flags.threads, "worker threads for sweep points (0 = all cores)");
    sub.add_flag("--verbose,-v", flags.verbose, "debug logging");
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("fsorf"));
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Performance analysis of hybrid FSO/RF networks sharing one backup RF link"};
    app.require_subcommand(1);
    Flags flags;
    for (const auto cmd : {fsorf::cli::Command::Channel, fsorf::cli::Command::Solve, fsorf::cli::Command::Sweep,
                           fsorf::cli::Command::OptimizeP, fsorf::cli::Command::Simulate}) {
        static const char* help[] = {
            "link-level outage probabilities and average SNRs",
            "per-node metrics at the base network values",
            "per-node metrics over the declared sweep",
            "persistence probability maximizing total throughput",
            "joint or chain-level Monte-Carlo run with analytic columns",
        };
        add_common(*app.add_subcommand(std::string(fsorf::cli::to_string(cmd)), help[static_cast<int>(cmd)]), flags);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }
    if (flags.verbose) {
        spdlog::set_level(spdlog::level::debug);
    }

    try {
        const auto cmd = fsorf::cli::command_from_string(app.get_subcommands().front()->get_name());
        const auto cfg = fsorf::cli::load_config(flags.config);
        const auto table = fsorf::cli::run_command(cmd, cfg, {flags.seed, flags.threads});

        std::optional<std::filesystem::path> out;
        if (!flags.out.empty()) {
            out = flags.out;
        } else if (cfg.output.csv) {
            out = *cfg.output.csv;
        }
        if (out && *out != "-") {
            fsorf::cli::write_csv_file(table, *out);
            spdlog::info("wrote {} rows to {}", table.rows.size(), out->string());
        } else {
            fsorf::cli::write_csv(table, std::cout);
        }
    } catch (const fsorf::ValidationError& e) {
        spdlog::error("{}", e.what());
        return kExitValidation;
    } catch (const fsorf::NumericError& e) {
        spdlog::error("{}", e.what());
        return kExitNumeric;
    } catch (const std::filesystem::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitNumeric;
    }
    return 0;
}
