#include "fsorf/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "fsorf/channel.hpp"
#include "fsorf/error.hpp"
#include "fsorf/metrics.hpp"
#include "fsorf/optimizer.hpp"
#include "fsorf/protocol.hpp"
#include "fsorf/simulator.hpp"

namespace fsorf::cli {

std::string_view to_string(Command cmd) {
    switch (cmd) {
        case Command::Channel:
            return "channel";
        case Command::Solve:
            return "solve";
        case Command::Sweep:
            return "sweep";
        case Command::OptimizeP:
            return "optimize-p";
        case Command::Simulate:
            return "simulate";
    }
    return "unknown";
}

Command command_from_string(std::string_view text) {
    for (const Command c :
         {Command::Channel, Command::Solve, Command::Sweep, Command::OptimizeP, Command::Simulate}) {
        if (text == to_string(c)) {
            return c;
        }
    }
    throw ValidationError("unknown command '" + std::string(text) + "'");
}

const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> cols{
        "series_var", "series_value", "sweep_var", "sweep_value", "protocol", "p",  "a",  "b",
        "omega",      "B",            "Omega",     "N",           "node",     "p_rf", "y", "Th",
        "Qa",         "Tq",           "PL",        "phi",         "Th_total", "Ne",   "U"};
    return cols;
}

const std::vector<std::string>& simulation_columns() {
    static const std::vector<std::string> cols{"sim_Th",      "sim_PL",        "sim_Qa",     "sim_Tq",
                                               "sim_rf_busy", "sim_rf_grants", "tv_distance"};
    return cols;
}

std::string format_number(double value, int precision) {
    if (!std::isfinite(value)) {
        return "undefined";
    }
    if (value == 0.0) {
        value = 0.0;  // drops the sign of negative zero
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, precision);
    return std::string(buf, res.ptr);
}

namespace {

constexpr std::string_view kUndefined = "undefined";
constexpr std::string_view kNone = "none";

struct Link {
    double a = 0.0;
    double b = 0.0;
    std::optional<double> gamma_T;
    std::optional<double> avg_snr_fso;
    std::optional<double> avg_snr_rf;
    std::optional<channel::ScintillationParams> scint;
};

Link resolve_link(const ChannelSource& source) {
    if (const auto* d = std::get_if<DirectChannel>(&source)) {
        return Link{d->a, d->b, d->gamma_T, std::nullopt, std::nullopt, std::nullopt};
    }
    const auto& p = std::get<PhysicalChannel>(source);
    const auto state = channel::evaluate_link(p.fso, p.rf, p.modulation_order, p.target_ber, p.turbulence);
    return Link{state.a,
                state.b,
                state.gamma_T,
                state.avg_snr_fso,
                state.avg_snr_rf,
                p.turbulence ? *p.turbulence : channel::scintillation(p.fso)};
}

// One evaluation point of the series x sweep grid.
struct Point {
    std::optional<double> series_value;
    std::optional<double> sweep_value;
    double a = 0.0;
    double b = 0.0;
    double omega = 0.0;
    int buffer_size = 1;
    int omega_ratio = 1;
    int n_nodes = 1;
    std::optional<double> p;  ///< set when p itself is swept
};

void apply(Point& pt, SweepVariable var, double value) {
    switch (var) {
        case SweepVariable::Omega:
            pt.omega = value;
            break;
        case SweepVariable::P:
            pt.p = value;
            break;
        case SweepVariable::OmegaRatio:
            pt.omega_ratio = static_cast<int>(value);
            break;
        case SweepVariable::A:
            pt.a = value;
            break;
        case SweepVariable::B:
            pt.b = value;
            break;
        case SweepVariable::N:
            pt.n_nodes = static_cast<int>(value);
            break;
    }
}

std::vector<Point> grid(const NetworkSection& net, const Link& link, bool use_sweeps) {
    Point base;
    base.a = link.a;
    base.b = link.b;
    base.omega = net.omega;
    base.buffer_size = net.buffer_size;
    base.omega_ratio = net.omega_ratio;
    base.n_nodes = net.n_nodes;

    const std::vector<std::optional<double>> unset{std::nullopt};
    auto values = [&](const std::optional<Sweep>& s) {
        if (!use_sweeps || !s) {
            return unset;
        }
        std::vector<std::optional<double>> out(s->values.begin(), s->values.end());
        return out;
    };

    std::vector<Point> out;
    for (const auto& sv : values(net.series)) {
        for (const auto& wv : values(net.sweep)) {
            Point pt = base;
            pt.series_value = sv;
            pt.sweep_value = wv;
            if (sv) {
                apply(pt, net.series->variable, *sv);
            }
            if (wv) {
                apply(pt, net.sweep->variable, *wv);
            }
            out.push_back(pt);
        }
    }
    return out;
}

const NetworkSection& require_network(const RunConfig& cfg, Command cmd) {
    if (!cfg.network) {
        throw ValidationError("network: the " + std::string(to_string(cmd)) + " command needs a [network] section");
    }
    return *cfg.network;
}

unsigned thread_count(const RunOptions& options, std::size_t jobs) {
    unsigned n = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Runs job(k) for k in [0, count) on a small worker pool. If several jobs
// throw, the one with the lowest index is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
    std::atomic<std::size_t> next{0};
    std::mutex error_lock;
    std::exception_ptr error;
    std::size_t error_index = count;

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= count) {
                return;
            }
            try {
                job(k);
            } catch (...) {
                const std::lock_guard lock(error_lock);
                if (k < error_index) {
                    error_index = k;
                    error = std::current_exception();
                }
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

class RowBuilder {
  public:
    explicit RowBuilder(int precision) : precision_(precision) {}

    RowBuilder& num(double v) {
        row_.push_back(format_number(v, precision_));
        return *this;
    }
    RowBuilder& num(const std::optional<double>& v) {
        return v ? num(*v) : text(kUndefined);
    }
    RowBuilder& integer(long long v) {
        row_.push_back(std::to_string(v));
        return *this;
    }
    RowBuilder& text(std::string_view v) {
        row_.emplace_back(v);
        return *this;
    }
    std::vector<std::string> take() { return std::move(row_); }

  private:
    int precision_;
    std::vector<std::string> row_;
};

struct Job {
    std::size_t point = 0;
    std::size_t protocol = 0;
};

protocol::ProtocolConfig protocol_at(const Point& pt, const ProtocolSpec& spec) {
    protocol::ProtocolConfig cfg;
    cfg.mode = spec.mode;
    cfg.p = (spec.mode == protocol::Mode::PPersistence && pt.p) ? *pt.p : spec.p;
    cfg.n_nodes = pt.n_nodes;
    return cfg;
}

// Analytic rows for one (point, protocol) pair, one per node.
std::vector<std::vector<std::string>> analytic_rows(const NetworkSection& net,
                                                    const Point& pt,
                                                    const ProtocolSpec& spec,
                                                    int precision,
                                                    protocol::CascadeResult* keep = nullptr) {
    const auto cfg = protocol_at(pt, spec);
    const protocol::NetworkShape shape{pt.omega, pt.buffer_size, pt.omega_ratio};
    auto cascade = protocol::cascade_solve(pt.a, pt.b, cfg, shape);
    const auto metrics = metrics::evaluate(cascade, pt.a, pt.b, cfg);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < cascade.nodes.size(); ++k) {
        const auto& node = cascade.nodes[k];
        const auto& m = metrics.per_node[k];
        RowBuilder r(precision);
        r.text(net.series ? to_string(net.series->variable) : kNone)
            .num(pt.series_value)
            .text(net.sweep && pt.sweep_value ? to_string(net.sweep->variable) : kNone)
            .num(pt.sweep_value)
            .text(protocol::to_string(cfg.mode));
        if (cfg.mode == protocol::Mode::PPersistence) {
            r.num(cfg.p);
        } else {
            r.text(kUndefined);
        }
        r.num(pt.a)
            .num(pt.b)
            .num(pt.omega)
            .integer(pt.buffer_size)
            .integer(pt.omega_ratio)
            .integer(pt.n_nodes)
            .integer(m.node_index)
            .num(node.p_rf)
            .num(node.y)
            .num(m.throughput)
            .num(m.avg_buffer)
            .num(m.queue_delay)
            .num(m.loss_prob)
            .num(m.efficiency)
            .num(metrics.total_throughput)
            .num(metrics.rf_need_prob)
            .num(metrics.rf_utilization);
        rows.push_back(r.take());
    }
    if (keep) {
        *keep = std::move(cascade);
    }
    return rows;
}

Table evaluate_points(const RunConfig& cfg,
                      const RunOptions& options,
                      bool use_sweeps,
                      bool simulate) {
    const auto& net = *cfg.network;
    const Link link = resolve_link(cfg.channel);
    const auto points = grid(net, link, use_sweeps);
    const int precision = cfg.output.precision;

    std::optional<simulator::SimConfig> sim;
    if (simulate) {
        if (!cfg.simulation) {
            throw ValidationError("simulation: the simulate command needs a [simulation] section");
        }
        sim = *cfg.simulation;
        if (options.seed) {
            sim->seed = *options.seed;
        }
        sim->validate();
    }

    std::vector<Job> jobs;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = 0; j < net.protocols.size(); ++j) {
            jobs.push_back({i, j});
        }
    }
    std::vector<std::vector<std::vector<std::string>>> results(jobs.size());

    parallel_for(jobs.size(), thread_count(options, jobs.size()), [&](std::size_t k) {
        const Point& pt = points[jobs[k].point];
        const ProtocolSpec& spec = net.protocols[jobs[k].protocol];
        protocol::CascadeResult cascade;
        auto rows = analytic_rows(net, pt, spec, precision, &cascade);
        if (!sim) {
            results[k] = std::move(rows);
            return;
        }

        // Each job gets its own stream family; the seed does not depend on
        // which thread runs it.
        simulator::SimConfig run = *sim;
        run.seed = simulator::derive_seed(sim->seed, 1000 + k);

        if (const auto* chain = std::get_if<simulator::ChainLevel>(&sim->scope)) {
            if (chain->node > pt.n_nodes) {
                throw ValidationError("simulation.node: node " + std::to_string(chain->node) +
                                      " exceeds the number of nodes " + std::to_string(pt.n_nodes));
            }
            const auto idx = static_cast<std::size_t>(chain->node - 1);
            const auto& solved = cascade.nodes[idx].chain;
            const auto stats = simulator::simulate_chain(solved.params, run);
            const auto& s = stats.nodes.front();
            const std::uint64_t n = stats.measured_steps;
            RowBuilder extra(precision);
            extra.num(s.throughput(n))
                .num(s.loss_rate(n))
                .num(s.time_avg_buffer)
                .num(s.delivered ? std::optional<double>(s.mean_tagged_delay) : std::nullopt)
                .text(kUndefined)
                .text(kUndefined)
                .num(simulator::total_variation(s.state_occupancy, solved.steady));
            auto row = std::move(rows[idx]);
            for (auto& cell : extra.take()) {
                row.push_back(std::move(cell));
            }
            results[k].push_back(std::move(row));
            return;
        }

        const auto cfg_p = protocol_at(pt, spec);
        const protocol::NetworkShape shape{pt.omega, pt.buffer_size, pt.omega_ratio};
        const auto stats = simulator::simulate_network(pt.a, pt.b, cfg_p, shape, run);
        const std::uint64_t n = stats.measured_steps;
        for (std::size_t j = 0; j < rows.size(); ++j) {
            const auto& s = stats.nodes[j];
            RowBuilder extra(precision);
            extra.num(s.throughput(n))
                .num(s.loss_rate(n))
                .num(s.time_avg_buffer)
                .num(s.delivered ? std::optional<double>(s.mean_tagged_delay) : std::nullopt)
                .num(stats.rf_busy_fraction)
                .integer(static_cast<long long>(stats.rf_grant_events))
                .text(kUndefined);
            for (auto& cell : extra.take()) {
                rows[j].push_back(std::move(cell));
            }
        }
        results[k] = std::move(rows);
    });

    Table table;
    table.header = metrics_columns();
    if (simulate) {
        const auto& extra = simulation_columns();
        table.header.insert(table.header.end(), extra.begin(), extra.end());
    }
    for (auto& block : results) {
        for (auto& row : block) {
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

Table channel_table(const RunConfig& cfg) {
    const Link link = resolve_link(cfg.channel);
    const int precision = cfg.output.precision;
    auto db = [](const std::optional<double>& v) -> std::optional<double> {
        if (!v) {
            return std::nullopt;
        }
        return channel::linear_to_db(*v);
    };
    auto field = [&](auto member) -> std::optional<double> {
        if (!link.scint) {
            return std::nullopt;
        }
        const double v = (*link.scint).*member;
        return std::isnan(v) ? std::nullopt : std::optional<double>(v);
    };

    Table table;
    table.header = {"a",          "b",         "gamma_T",     "gamma_T_dB", "avg_snr_fso", "avg_snr_fso_dB",
                    "avg_snr_rf", "avg_snr_rf_dB", "alpha",   "beta",       "xi",          "rytov_var"};
    RowBuilder r(precision);
    r.num(link.a)
        .num(link.b)
        .num(link.gamma_T)
        .num(db(link.gamma_T))
        .num(link.avg_snr_fso)
        .num(db(link.avg_snr_fso))
        .num(link.avg_snr_rf)
        .num(db(link.avg_snr_rf))
        .num(field(&channel::ScintillationParams::alpha))
        .num(field(&channel::ScintillationParams::beta))
        .num(field(&channel::ScintillationParams::xi))
        .num(field(&channel::ScintillationParams::rytov_var));
    table.rows.push_back(r.take());
    return table;
}

Table optimize_table(const RunConfig& cfg, const RunOptions& options) {
    const auto& net = *cfg.network;
    for (const auto* s : {&net.sweep, &net.series}) {
        if (*s && (*s)->variable == SweepVariable::P) {
            throw ValidationError("network.sweep: optimize-p searches over p itself; p cannot be swept");
        }
    }
    const Link link = resolve_link(cfg.channel);
    const auto points = grid(net, link, true);
    std::vector<optimizer::OptimizationResult> results(points.size());
    parallel_for(points.size(), thread_count(options, points.size()), [&](std::size_t k) {
        const Point& pt = points[k];
        results[k] = optimizer::optimize_p(
            optimizer::Scenario{pt.a, pt.b, pt.omega, pt.buffer_size, pt.omega_ratio, pt.n_nodes});
    });

    Table table;
    table.header = {"series_var", "series_value", "sweep_var", "sweep_value", "a",          "b",
                    "omega",      "B",            "Omega",     "N",           "p_star",     "Th_total",
                    "iterations", "bracket_width", "grid_fallback"};
    for (std::size_t k = 0; k < points.size(); ++k) {
        const Point& pt = points[k];
        const auto& res = results[k];
        RowBuilder r(cfg.output.precision);
        r.text(net.series ? to_string(net.series->variable) : kNone)
            .num(pt.series_value)
            .text(net.sweep ? to_string(net.sweep->variable) : kNone)
            .num(pt.sweep_value)
            .num(pt.a)
            .num(pt.b)
            .num(pt.omega)
            .integer(pt.buffer_size)
            .integer(pt.omega_ratio)
            .integer(pt.n_nodes)
            .num(res.p_star)
            .num(res.th_total_at_star)
            .integer(res.iterations)
            .num(res.bracket_width)
            .integer(res.used_grid_fallback ? 1 : 0);
        table.rows.push_back(r.take());
    }
    return table;
}

}  // namespace

Table run_command(Command cmd, const RunConfig& cfg, const RunOptions& options) {
    switch (cmd) {
        case Command::Channel:
            return channel_table(cfg);
        case Command::Solve: {
            const auto& net = require_network(cfg, cmd);
            if (net.sweep || net.series) {
                spdlog::info("solve evaluates the base network values; use 'sweep' for the declared ranges");
            }
            return evaluate_points(cfg, options, false, false);
        }
        case Command::Sweep: {
            const auto& net = require_network(cfg, cmd);
            if (!net.sweep) {
                throw ValidationError("network.sweep: the sweep command needs a [network.sweep] section");
            }
            return evaluate_points(cfg, options, true, false);
        }
        case Command::OptimizeP:
            require_network(cfg, cmd);
            return optimize_table(cfg, options);
        case Command::Simulate:
            require_network(cfg, cmd);
            return evaluate_points(cfg, options, true, true);
    }
    throw ValidationError("unknown command");
}

void write_csv(const Table& table, std::ostream& out) {
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) {
                out << ',';
            }
            out << cells[k];
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) {
        line(row);
    }
}

void write_csv_file(const Table& table, const std::filesystem::path& path) {
    auto partial = path;
    partial += ".partial";
    try {
        {
            std::ofstream out(partial, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw ValidationError("cannot open '" + partial.string() + "' for writing");
            }
            write_csv(table, out);
            out.flush();
            if (!out) {
                throw ValidationError("write to '" + partial.string() + "' failed");
            }
        }
        std::filesystem::rename(partial, path);
    } catch (...) {
        std::error_code ignored;
        std::filesystem::remove(partial, ignored);
        throw;
    }
}

}  // namespace fsorf::cli
