#include "fsorf/metrics.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "fsorf/error.hpp"

namespace fsorf::metrics {

double throughput(const markov::ChainSolution& chain) {
    const auto& p = chain.params;
    const double per_step_service = p.p_fso + p.p_rf / p.omega_ratio;
    return p.omega * chain.at(0, 0) * per_step_service + per_step_service * chain.idle_backlog_mass() +
           chain.rf_in_progress_mass() / p.omega_ratio;
}

double avg_buffer_size(const markov::ChainSolution& chain) { return chain.mean_occupancy(); }

std::optional<double> queue_delay(double avg_buffer, double throughput) {
    if (!(throughput > 0.0)) {
        return std::nullopt;
    }
    return avg_buffer / throughput;
}

double loss_prob(double omega, double throughput) {
    const double loss = omega - throughput;
    if (loss < -1e-9) {
        spdlog::warn("negative frame loss {:.3e} (omega {}, throughput {}) clamped to 0", loss, omega,
                     throughput);
    }
    return loss < 0.0 ? 0.0 : loss;
}

std::optional<double> efficiency(double omega, double throughput) {
    if (!(omega > 0.0)) {
        return std::nullopt;
    }
    return throughput / omega;
}

RfUsage rf_need_and_utilization(double a, double b, double p, int n_nodes) {
    detail::require(n_nodes >= 1, "number of nodes N must be >= 1");
    RfUsage out;
    out.need = 1.0 - std::pow(1.0 - a, n_nodes);
    out.utilization = (1.0 - b) * p * out.need;
    return out;
}

NodeMetrics node_metrics(const markov::ChainSolution& chain, int node_index) {
    NodeMetrics m;
    m.node_index = node_index;
    m.throughput = throughput(chain);
    m.avg_buffer = avg_buffer_size(chain);
    m.queue_delay = queue_delay(m.avg_buffer, m.throughput);
    m.loss_prob = loss_prob(chain.params.omega, m.throughput);
    m.efficiency = efficiency(chain.params.omega, m.throughput);
    return m;
}

NetworkMetrics evaluate(const protocol::CascadeResult& cascade,
                        double a,
                        double b,
                        const protocol::ProtocolConfig& cfg) {
    NetworkMetrics out;
    out.per_node.reserve(cascade.nodes.size());
    int J = 1;
    for (const auto& node : cascade.nodes) {
        out.per_node.push_back(node_metrics(node.chain, J++));
        out.total_throughput += out.per_node.back().throughput;
    }
    const double p = cfg.mode == protocol::Mode::EqualPriority ? 1.0 : cfg.p;
    const RfUsage usage = rf_need_and_utilization(a, b, p, cfg.n_nodes);
    out.rf_need_prob = usage.need;
    out.rf_utilization = usage.utilization;
    return out;
}

}  // namespace fsorf::metrics
