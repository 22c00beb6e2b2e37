#pragma once

#include <optional>
#include <vector>

#include "fsorf/markov.hpp"
#include "fsorf/protocol.hpp"

namespace fsorf::metrics {

struct NodeMetrics {
    int node_index = 0;                  ///< 1-based priority order
    double throughput = 0.0;             ///< frames per step
    double avg_buffer = 0.0;             ///< frames
    std::optional<double> queue_delay;   ///< steps; empty when throughput is 0
    double loss_prob = 0.0;              ///< frames per step
    std::optional<double> efficiency;    ///< empty when omega is 0
};

struct NetworkMetrics {
    std::vector<NodeMetrics> per_node;
    double total_throughput = 0.0;
    double rf_need_prob = 0.0;     ///< N_e
    double rf_utilization = 0.0;   ///< U
};

/// Frames delivered per step. A frame on the RF link counts 1/Omega per step
/// it is on the air.
double throughput(const markov::ChainSolution& chain);

double avg_buffer_size(const markov::ChainSolution& chain);

/// Little's law. Empty when `throughput` is zero.
std::optional<double> queue_delay(double avg_buffer, double throughput);

/// omega - throughput, clamped at zero. Negative values below -1e-9 are
/// logged as a warning before clamping.
double loss_prob(double omega, double throughput);

std::optional<double> efficiency(double omega, double throughput);

struct RfUsage {
    double need = 0.0;         ///< 1 - (1 - a)^N
    double utilization = 0.0;  ///< (1 - b) p N_e
};

RfUsage rf_need_and_utilization(double a, double b, double p, int n_nodes);

NodeMetrics node_metrics(const markov::ChainSolution& chain, int node_index);

/// Per-node and network-wide metrics for a solved cascade. Equal-priority
/// runs use p = 1 in the utilization formula.
NetworkMetrics evaluate(const protocol::CascadeResult& cascade,
                        double a,
                        double b,
                        const protocol::ProtocolConfig& cfg);

}  // namespace fsorf::metrics
