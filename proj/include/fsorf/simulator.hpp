#pragma once

// Seeded Monte-Carlo simulators.
//
// simulate_chain steps one node's transmit-buffer chain outcome by outcome;
// its long-run state frequencies estimate the steady-state vector.
// simulate_network runs all N buffers against one shared RF link with the
// actual arbitration rule, without the per-node decoupling the analytical
// cascade relies on.
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by
// the C++ standard, with uniforms formed from the top 53 bits. Each node has
// its own stream; the RF arbiter has another. Equal seeds give equal results
// on every platform.

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "fsorf/markov.hpp"
#include "fsorf/protocol.hpp"

namespace fsorf::simulator {

struct ChainLevel {
    int node = 1;  ///< 1-based node whose cascade chain is simulated
};
struct JointSystem {};

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint64_t steps = 1'000'000;  ///< total steps, warmup included
    std::uint64_t warmup = 0;         ///< leading steps excluded from statistics
    std::variant<JointSystem, ChainLevel> scope = JointSystem{};

    void validate() const;
    std::uint64_t measured_steps() const { return steps - warmup; }
};

struct NodeSimStats {
    std::uint64_t arrivals = 0;   ///< offered frames, including lost ones
    std::uint64_t delivered = 0;
    std::uint64_t lost = 0;
    std::uint64_t buffer_at_start = 0;  ///< frames queued when measurement began
    std::uint64_t buffer_at_end = 0;
    double time_avg_buffer = 0.0;
    double mean_tagged_delay = 0.0;     ///< steps from arrival to departure, delivered frames
    std::vector<std::uint64_t> state_occupancy;  ///< chain-level runs only

    double throughput(std::uint64_t measured_steps) const;
    double loss_rate(std::uint64_t measured_steps) const;
};

struct SimStats {
    std::vector<NodeSimStats> nodes;
    std::uint64_t measured_steps = 0;
    double rf_busy_fraction = 0.0;
    std::uint64_t rf_grant_events = 0;
    /// Largest number of nodes seen on the RF link in one step; at most 1.
    int max_concurrent_rf = 0;
};

/// Counter-based seed derivation (splitmix64) for independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

SimStats simulate_chain(const markov::ChainParams& params, const SimConfig& sim);

SimStats simulate_network(double a,
                          double b,
                          const protocol::ProtocolConfig& cfg,
                          const protocol::NetworkShape& shape,
                          const SimConfig& sim);

/// 0.5 * sum |empirical - analytic| over the chain states.
double total_variation(const std::vector<std::uint64_t>& occupancy, const Eigen::VectorXd& steady);

}  // namespace fsorf::simulator
