#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fsorf/channel.hpp"
#include "fsorf/protocol.hpp"
#include "fsorf/simulator.hpp"

namespace fsorf::cli {

/// (a, b) given directly, bypassing the link physics.
struct DirectChannel {
    double a = 0.0;
    double b = 0.0;
    std::optional<double> gamma_T;  ///< linear
};

struct PhysicalChannel {
    channel::FsoParams fso;
    channel::RfParams rf;
    int modulation_order = 16;
    double target_ber = 1e-6;
    std::optional<channel::ScintillationParams> turbulence;  ///< direct alpha/beta/xi
};

using ChannelSource = std::variant<DirectChannel, PhysicalChannel>;

enum class SweepVariable { Omega, P, OmegaRatio, A, B, N };

std::string_view to_string(SweepVariable v);

struct Sweep {
    SweepVariable variable = SweepVariable::Omega;
    std::vector<double> values;
};

struct ProtocolSpec {
    protocol::Mode mode = protocol::Mode::PPersistence;
    double p = 1.0;
};

struct NetworkSection {
    int n_nodes = 1;
    int buffer_size = 1;
    int omega_ratio = 1;
    double omega = 0.5;
    std::vector<ProtocolSpec> protocols;
    std::optional<Sweep> sweep;
    /// Optional outer loop over a second variable (one curve per value).
    std::optional<Sweep> series;
};

struct OutputSection {
    std::optional<std::filesystem::path> csv;
    int precision = 12;
};

struct RunConfig {
    ChannelSource channel;
    std::optional<NetworkSection> network;  ///< not needed by the channel command
    std::optional<simulator::SimConfig> simulation;
    OutputSection output;
    /// Free-form numeric annotations (e.g. R_in, N_s, r). Never interpreted.
    std::map<std::string, double> metadata;
};

/// Parse and validate a TOML run configuration. Syntax errors carry the
/// source line; validation errors name the offending field. Both throw
/// ValidationError.
RunConfig parse_config(std::string_view text, std::string_view source_name = "config");

RunConfig load_config(const std::filesystem::path& path);

}  // namespace fsorf::cli
