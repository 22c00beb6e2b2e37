#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsorf/cli/config.hpp"

namespace fsorf::cli {

enum class Command { Channel, Solve, Sweep, OptimizeP, Simulate };

std::string_view to_string(Command cmd);
Command command_from_string(std::string_view text);

struct RunOptions {
    std::optional<std::uint64_t> seed;  ///< overrides simulation.seed
    unsigned threads = 0;               ///< 0 picks the hardware concurrency
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Column order shared by solve, sweep and simulate.
const std::vector<std::string>& metrics_columns();
/// Extra columns appended by simulate.
const std::vector<std::string>& simulation_columns();

/// Evaluate `cmd` for `cfg`. Rows come out ordered by series value, sweep
/// value, protocol entry and node, whatever the thread count.
Table run_command(Command cmd, const RunConfig& cfg, const RunOptions& options = {});

/// Shortest round-trip form limited to `precision` significant digits,
/// independent of the C locale. NaN and infinities print as "undefined".
std::string format_number(double value, int precision);

void write_csv(const Table& table, std::ostream& out);

/// Writes to `<path>.partial` and renames into place, so a failed run never
/// leaves a truncated file behind.
void write_csv_file(const Table& table, const std::filesystem::path& path);

}  // namespace fsorf::cli
