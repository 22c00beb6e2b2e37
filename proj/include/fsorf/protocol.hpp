#pragma once

// Allocation of the shared backup RF link among the N remote nodes.
//
// Equal priority: every node with a failed FSO link is equally likely to be
// served. Non-equal priority with p-persistence: the RF link goes to the
// failed node with the smallest index, and only with probability p. The
// per-node RF service probability then depends on how often every
// higher-priority node keeps the link busy, which is resolved by a single
// forward pass over the nodes in priority order.

#include <string_view>
#include <vector>

#include "fsorf/markov.hpp"

namespace fsorf::protocol {

enum class Mode { EqualPriority, PPersistence };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view text);

struct ProtocolConfig {
    Mode mode = Mode::PPersistence;
    double p = 1.0;   ///< persistence probability; ignored for EqualPriority
    int n_nodes = 1;

    void validate() const;
};

struct NodeSolution {
    double p_rf = 0.0;            ///< P_RF for this node
    markov::ChainSolution chain;
    double y = 0.0;               ///< P[RF link used by this node in a step]
    double x = 1.0;               ///< 1 - y
};

struct CascadeResult {
    std::vector<NodeSolution> nodes;  ///< index 0 is the highest-priority node
};

/// ((1 - b) / N) * (1 - (1 - a)^N)
double equal_priority_prf(double a, double b, int n_nodes);

/// Probability that a node with the given solved chain occupies the RF link
/// in a step: starts on it from an empty or backlogged buffer, or is in the
/// middle of an RF transmission. `start_prob` weights the two start terms;
/// the p-persistence cascade uses a(1-b)p.
double rf_service_prob_y(const markov::ChainSolution& chain, double omega, double start_prob);

/// Same quantity written with the protocol inputs: start_prob = a(1-b)p.
double rf_service_prob_y(const markov::ChainSolution& chain, double omega, double a, double b, double p);

struct NetworkShape {
    double omega = 0.0;
    int buffer_size = 1;
    int omega_ratio = 1;
};

/// Solve every node's chain. In PPersistence mode node J sees
/// P_RF = a(1-b)p * x_1 * ... * x_{J-1}; in EqualPriority mode every node
/// uses equal_priority_prf. Chain failures are rethrown with the node index.
CascadeResult cascade_solve(double a,
                            double b,
                            const ProtocolConfig& cfg,
                            const NetworkShape& shape,
                            const markov::SolverOptions& solver = {});

}  // namespace fsorf::protocol
