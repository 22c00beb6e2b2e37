#include "fsorf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fsorf/error.hpp"

namespace fsorf::simulator {

namespace {

// FIFO of arrival timestamps; its size is the buffer occupancy.
class FrameQueue {
  public:
    std::size_t size() const { return stamps_.size(); }
    bool empty() const { return stamps_.empty(); }
    void push(std::uint64_t t) { stamps_.push_back(t); }
    std::uint64_t pop() {
        const auto t = stamps_.front();
        stamps_.pop_front();
        return t;
    }

  private:
    std::deque<std::uint64_t> stamps_;
};

struct Accumulator {
    NodeSimStats stats;
    double buffer_sum = 0.0;
    double delay_sum = 0.0;

    void finish(std::uint64_t measured, std::size_t end_buffer) {
        stats.buffer_at_end = end_buffer;
        stats.time_avg_buffer = measured ? buffer_sum / static_cast<double>(measured) : 0.0;
        stats.mean_tagged_delay = stats.delivered ? delay_sum / static_cast<double>(stats.delivered) : 0.0;
    }
};

// Per-step event recorder that only counts once measurement has started.
struct NodeTrack {
    FrameQueue queue;
    Accumulator acc;

    void arrive(std::uint64_t t, bool measured) {
        queue.push(t);
        if (measured) {
            ++acc.stats.arrivals;
        }
    }
    void drop(bool measured) {
        if (measured) {
            ++acc.stats.arrivals;
            ++acc.stats.lost;
        }
    }
    void depart(std::uint64_t t, bool measured) {
        const auto born = queue.pop();
        if (measured) {
            ++acc.stats.delivered;
            acc.delay_sum += static_cast<double>(t - born);
        }
    }
    // Arrival that leaves in its own step.
    void pass_through(bool measured) {
        if (measured) {
            ++acc.stats.arrivals;
            ++acc.stats.delivered;
        }
    }
};

}  // namespace

void SimConfig::validate() const {
    detail::require(steps > warmup, "simulation steps must exceed warmup");
    if (const auto* chain = std::get_if<ChainLevel>(&scope)) {
        detail::require(chain->node >= 1, "chain-level node index must be >= 1");
    }
}

double NodeSimStats::throughput(std::uint64_t measured_steps) const {
    return measured_steps ? static_cast<double>(delivered) / static_cast<double>(measured_steps) : 0.0;
}

double NodeSimStats::loss_rate(std::uint64_t measured_steps) const {
    return measured_steps ? static_cast<double>(lost) / static_cast<double>(measured_steps) : 0.0;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SimStats simulate_chain(const markov::ChainParams& params, const SimConfig& sim) {
    sim.validate();
    const auto outcomes = markov::step_outcomes(params);

    // Cumulative thresholds per source state.
    std::vector<std::vector<double>> cumulative(outcomes.size());
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        double acc = 0.0;
        for (const auto& o : outcomes[k]) {
            acc += o.prob;
            cumulative[k].push_back(acc);
        }
    }

    std::mt19937_64 gen(derive_seed(sim.seed, 0));
    NodeTrack node;
    node.acc.stats.state_occupancy.assign(outcomes.size(), 0);
    std::size_t state = 0;

    for (std::uint64_t t = 0; t < sim.steps; ++t) {
        const bool measured = t >= sim.warmup;
        if (t == sim.warmup) {
            node.acc.stats.buffer_at_start = node.queue.size();
        }
        const auto& cum = cumulative[state];
        const double u = uniform01(gen) * cum.back();
        const auto pick = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        const auto& o = outcomes[state][std::min(pick, cum.size() - 1)];

        if (o.lost) {
            node.drop(measured);
        }
        if (o.arrived && o.departed && node.queue.empty()) {
            node.pass_through(measured);
        } else {
            if (o.departed) {
                node.depart(t, measured);
            }
            if (o.arrived) {
                node.arrive(t, measured);
            }
        }
        state = o.target;
        if (measured) {
            ++node.acc.stats.state_occupancy[state];
            node.acc.buffer_sum += static_cast<double>(node.queue.size());
        }
    }

    SimStats out;
    out.measured_steps = sim.measured_steps();
    node.acc.finish(out.measured_steps, node.queue.size());
    out.nodes.push_back(std::move(node.acc.stats));
    return out;
}

SimStats simulate_network(double a,
                          double b,
                          const protocol::ProtocolConfig& cfg,
                          const protocol::NetworkShape& shape,
                          const SimConfig& sim) {
    sim.validate();
    cfg.validate();
    detail::require(a >= 0.0 && a <= 1.0, "a must lie in [0, 1]");
    detail::require(b >= 0.0 && b <= 1.0, "b must lie in [0, 1]");
    detail::require(shape.omega >= 0.0 && shape.omega <= 1.0, "omega must lie in [0, 1]");
    detail::require(shape.buffer_size >= 1, "buffer size B must be >= 1");
    detail::require(shape.omega_ratio >= 1, "rate ratio Omega must be >= 1");

    const auto n = static_cast<std::size_t>(cfg.n_nodes);
    const auto B = static_cast<std::size_t>(shape.buffer_size);
    const int W = shape.omega_ratio;

    std::vector<std::mt19937_64> node_gen;
    node_gen.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        node_gen.emplace_back(derive_seed(sim.seed, k + 1));
    }
    std::mt19937_64 arbiter(derive_seed(sim.seed, 0));

    std::vector<NodeTrack> nodes(n);
    std::vector<char> arrival(n), fso_good(n);
    std::vector<std::size_t> contenders;
    contenders.reserve(n);

    int rf_owner = -1;  // node holding the RF link
    int rf_elapsed = 0; // steps of the current RF frame already on the air
    std::uint64_t busy_steps = 0;
    SimStats out;

    auto admit = [&](NodeTrack& node, std::uint64_t t, bool measured) {
        if (node.queue.size() < B) {
            node.arrive(t, measured);
        } else {
            node.drop(measured);
        }
    };

    for (std::uint64_t t = 0; t < sim.steps; ++t) {
        const bool measured = t >= sim.warmup;
        if (t == sim.warmup) {
            for (auto& node : nodes) {
                node.acc.stats.buffer_at_start = node.queue.size();
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            arrival[k] = uniform01(node_gen[k]) < shape.omega;
            fso_good[k] = uniform01(node_gen[k]) >= a;
        }

        const bool busy_at_start = rf_owner >= 0;
        bool release = false;
        int on_air = 0;
        contenders.clear();

        for (std::size_t k = 0; k < n; ++k) {
            auto& node = nodes[k];
            if (static_cast<int>(k) == rf_owner) {
                ++on_air;
                if (rf_elapsed == W - 1) {
                    node.depart(t, measured);
                    if (arrival[k]) {
                        node.arrive(t, measured);
                    }
                    release = true;
                } else {
                    ++rf_elapsed;
                    if (arrival[k]) {
                        admit(node, t, measured);
                    }
                }
                continue;
            }
            const bool has_frame = !node.queue.empty() || arrival[k];
            if (!has_frame) {
                continue;
            }
            if (fso_good[k]) {
                if (node.queue.empty()) {
                    node.pass_through(measured);
                } else {
                    node.depart(t, measured);
                    if (arrival[k]) {
                        node.arrive(t, measured);
                    }
                }
            } else {
                contenders.push_back(k);
            }
        }

        // Arbitration happens only if nobody held the link entering the step.
        std::ptrdiff_t winner = -1;
        if (!busy_at_start && !contenders.empty() && uniform01(arbiter) >= b) {
            if (cfg.mode == protocol::Mode::PPersistence) {
                if (uniform01(arbiter) < cfg.p) {
                    winner = static_cast<std::ptrdiff_t>(contenders.front());
                }
            } else {
                const auto pick = static_cast<std::size_t>(uniform01(arbiter) * static_cast<double>(contenders.size()));
                winner = static_cast<std::ptrdiff_t>(contenders[std::min(pick, contenders.size() - 1)]);
            }
        }

        for (const auto k : contenders) {
            auto& node = nodes[k];
            if (static_cast<std::ptrdiff_t>(k) != winner) {
                if (arrival[k]) {
                    admit(node, t, measured);
                }
                continue;
            }
            ++on_air;
            if (measured) {
                ++out.rf_grant_events;
            }
            if (W == 1) {
                if (node.queue.empty()) {
                    node.pass_through(measured);
                } else {
                    node.depart(t, measured);
                    if (arrival[k]) {
                        node.arrive(t, measured);
                    }
                }
            } else {
                // The head frame stays queued while it is on the air.
                if (arrival[k]) {
                    admit(node, t, measured);
                }
                rf_owner = static_cast<int>(k);
                rf_elapsed = 1;
            }
        }
        if (release) {
            rf_owner = -1;
            rf_elapsed = 0;
        }

        out.max_concurrent_rf = std::max(out.max_concurrent_rf, on_air);
        if (measured) {
            if (on_air > 0) {
                ++busy_steps;
            }
            for (auto& node : nodes) {
                node.acc.buffer_sum += static_cast<double>(node.queue.size());
            }
        }
    }

    out.measured_steps = sim.measured_steps();
    out.rf_busy_fraction = static_cast<double>(busy_steps) / static_cast<double>(out.measured_steps);
    out.nodes.reserve(n);
    for (auto& node : nodes) {
        node.acc.finish(out.measured_steps, node.queue.size());
        out.nodes.push_back(std::move(node.acc.stats));
    }
    return out;
}

double total_variation(const std::vector<std::uint64_t>& occupancy, const Eigen::VectorXd& steady) {
    detail::require(occupancy.size() == static_cast<std::size_t>(steady.size()),
                    "occupancy histogram and steady-state vector differ in length");
    std::uint64_t total = 0;
    for (const auto c : occupancy) {
        total += c;
    }
    detail::require(total > 0, "empty occupancy histogram");
    double tv = 0.0;
    for (std::size_t k = 0; k < occupancy.size(); ++k) {
        tv += std::abs(static_cast<double>(occupancy[k]) / static_cast<double>(total) -
                       steady(static_cast<Eigen::Index>(k)));
    }
    return 0.5 * tv;
}

}  // namespace fsorf::simulator
