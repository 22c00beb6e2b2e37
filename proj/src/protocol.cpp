#include "fsorf/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsorf/error.hpp"

namespace fsorf::protocol {

using detail::require;

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::EqualPriority:
            return "equal-priority";
        case Mode::PPersistence:
            return "p-persistence";
    }
    return "unknown";
}

Mode mode_from_string(std::string_view text) {
    if (text == "equal-priority" || text == "equal") {
        return Mode::EqualPriority;
    }
    if (text == "p-persistence" || text == "priority") {
        return Mode::PPersistence;
    }
    throw ValidationError("unknown protocol mode '" + std::string(text) +
                          "' (expected 'equal-priority' or 'p-persistence')");
}

void ProtocolConfig::validate() const {
    require(n_nodes >= 1, "number of nodes N must be >= 1");
    if (mode == Mode::PPersistence) {
        require(p >= 0.0 && p <= 1.0, "persistence probability p must lie in [0, 1]");
    }
}

double equal_priority_prf(double a, double b, int n_nodes) {
    require(a >= 0.0 && a <= 1.0, "a must lie in [0, 1]");
    require(b >= 0.0 && b <= 1.0, "b must lie in [0, 1]");
    require(n_nodes >= 1, "number of nodes N must be >= 1");
    return (1.0 - b) / n_nodes * (1.0 - std::pow(1.0 - a, n_nodes));
}

double rf_service_prob_y(const markov::ChainSolution& chain, double omega, double start_prob) {
    const double y = chain.at(0, 0) * omega * start_prob + start_prob * chain.idle_backlog_mass() +
                     chain.rf_in_progress_mass();
    return std::clamp(y, 0.0, 1.0);
}

double rf_service_prob_y(const markov::ChainSolution& chain, double omega, double a, double b, double p) {
    return rf_service_prob_y(chain, omega, a * (1.0 - b) * p);
}

CascadeResult cascade_solve(double a,
                            double b,
                            const ProtocolConfig& cfg,
                            const NetworkShape& shape,
                            const markov::SolverOptions& solver) {
    require(a >= 0.0 && a <= 1.0, "a must lie in [0, 1]");
    require(b >= 0.0 && b <= 1.0, "b must lie in [0, 1]");
    cfg.validate();

    CascadeResult out;
    out.nodes.reserve(static_cast<std::size_t>(cfg.n_nodes));

    const double start_prob = a * (1.0 - b) * cfg.p;
    const double shared_prf = cfg.mode == Mode::EqualPriority ? equal_priority_prf(a, b, cfg.n_nodes) : 0.0;
    double not_taken = 1.0;  // x_0 * x_1 * ... * x_{J-1}

    for (int J = 1; J <= cfg.n_nodes; ++J) {
        NodeSolution node;
        node.p_rf = cfg.mode == Mode::EqualPriority ? shared_prf : start_prob * not_taken;
        const markov::ChainParams params{
            .omega = shape.omega,
            .p_fso = 1.0 - a,
            .p_rf = node.p_rf,
            .buffer_size = shape.buffer_size,
            .omega_ratio = shape.omega_ratio,
        };
        try {
            node.chain = markov::solve_chain(params, solver);
        } catch (const ValidationError& e) {
            throw ValidationError("node " + std::to_string(J) + ": " + e.what());
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("node " + std::to_string(J) + ": " + e.what());
        } catch (const SingularChainError& e) {
            throw SingularChainError("node " + std::to_string(J) + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("node " + std::to_string(J) + ": " + e.what());
        }
        // Equal priority has no persistence draw; the node's own P_RF is its start probability.
        node.y = rf_service_prob_y(node.chain, shape.omega,
                                   cfg.mode == Mode::EqualPriority ? node.p_rf : start_prob);
        node.x = 1.0 - node.y;
        not_taken *= node.x;
        out.nodes.push_back(std::move(node));
    }
    return out;
}

}  // namespace fsorf::protocol
