#include "fsorf/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "fsorf/error.hpp"

namespace fsorf::cli {

std::string_view to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::Omega:
            return "omega";
        case SweepVariable::P:
            return "p";
        case SweepVariable::OmegaRatio:
            return "Omega";
        case SweepVariable::A:
            return "a";
        case SweepVariable::B:
            return "b";
        case SweepVariable::N:
            return "N";
    }
    return "unknown";
}

namespace {

std::string where(const toml::node& node) {
    const auto& src = node.source();
    if (src.begin.line == 0) {
        return {};
    }
    return " (line " + std::to_string(src.begin.line) + ")";
}

// Typed access to one TOML table. Every key read is recorded so that
// finish() can reject typos instead of silently ignoring them.
class Section {
  public:
    Section(const toml::table& table, std::string name) : table_(table), name_(std::move(name)) {}

    const std::string& name() const { return name_; }
    bool has(std::string_view key) const { return table_.contains(key); }

    std::optional<double> number(std::string_view key) {
        const toml::node* node = fetch(key);
        if (!node) {
            return std::nullopt;
        }
        if (auto v = node->value<double>(); v && (node->is_integer() || node->is_floating_point())) {
            if (!std::isfinite(*v)) {
                fail(key, "must be finite", *node);
            }
            return v;
        }
        fail(key, "must be a number", *node);
    }

    double required_number(std::string_view key) {
        auto v = number(key);
        if (!v) {
            missing(key);
        }
        return *v;
    }

    std::optional<std::int64_t> integer(std::string_view key) {
        const toml::node* node = fetch(key);
        if (!node) {
            return std::nullopt;
        }
        if (node->is_integer()) {
            return node->value<std::int64_t>();
        }
        if (node->is_floating_point()) {
            const double v = *node->value<double>();
            if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15) {
                return static_cast<std::int64_t>(v);
            }
            fail(key, "is restricted to integer values, got " + std::to_string(v), *node);
        }
        fail(key, "must be an integer", *node);
    }

    std::int64_t required_integer(std::string_view key) {
        auto v = integer(key);
        if (!v) {
            missing(key);
        }
        return *v;
    }

    std::optional<std::string> string(std::string_view key) {
        const toml::node* node = fetch(key);
        if (!node) {
            return std::nullopt;
        }
        if (auto v = node->value<std::string>(); v && node->is_string()) {
            return v;
        }
        fail(key, "must be a string", *node);
    }

    std::optional<std::vector<double>> numbers(std::string_view key) {
        const toml::node* node = fetch(key);
        if (!node) {
            return std::nullopt;
        }
        const auto* arr = node->as_array();
        if (!arr) {
            fail(key, "must be an array of numbers", *node);
        }
        std::vector<double> out;
        for (const auto& item : *arr) {
            auto v = item.value<double>();
            if (!v || !(item.is_integer() || item.is_floating_point()) || !std::isfinite(*v)) {
                fail(key, "must contain only finite numbers", item);
            }
            out.push_back(*v);
        }
        return out;
    }

    std::optional<Section> table(std::string_view key) {
        const toml::node* node = fetch(key);
        if (!node) {
            return std::nullopt;
        }
        const auto* t = node->as_table();
        if (!t) {
            fail(key, "must be a table", *node);
        }
        return Section(*t, qualify(key));
    }

    std::vector<Section> tables(std::string_view key) {
        const toml::node* node = fetch(key);
        if (!node) {
            return {};
        }
        const auto* arr = node->as_array();
        if (!arr) {
            fail(key, "must be an array of tables ([[" + qualify(key) + "]])", *node);
        }
        std::vector<Section> out;
        std::size_t k = 0;
        for (const auto& item : *arr) {
            const auto* t = item.as_table();
            if (!t) {
                fail(key, "must contain only tables", item);
            }
            out.emplace_back(*t, qualify(key) + "[" + std::to_string(k++) + "]");
        }
        return out;
    }

    // Everything in the table, for free-form sections.
    const toml::table& raw() {
        for (const auto& [k, v] : table_) {
            used_.insert(std::string(k.str()));
        }
        return table_;
    }

    void finish() const {
        for (const auto& [k, v] : table_) {
            if (!used_.contains(std::string(k.str()))) {
                throw ValidationError(qualify(k.str()) + ": unknown key" + where(v));
            }
        }
    }

    [[noreturn]] void fail(std::string_view key, const std::string& what, const toml::node& node) const {
        throw ValidationError(qualify(key) + ": " + what + where(node));
    }

    [[noreturn]] void missing(std::string_view key) const {
        throw ValidationError(qualify(key) + ": required field is missing");
    }

  private:
    std::string qualify(std::string_view key) const {
        return name_.empty() ? std::string(key) : name_ + "." + std::string(key);
    }

    const toml::node* fetch(std::string_view key) {
        used_.insert(std::string(key));
        return table_.get(key);
    }

    const toml::table& table_;
    std::string name_;
    std::set<std::string> used_;
};

// Reads `<stem>_W` or `<stem>_dBm`; exactly one may be present.
std::optional<double> power_W(Section& s, const std::string& stem) {
    const auto watts = s.number(stem + "_W");
    const auto dbm = s.number(stem + "_dBm");
    if (watts && dbm) {
        throw ValidationError(s.name() + ": give only one of " + stem + "_W and " + stem + "_dBm");
    }
    if (dbm) {
        return channel::db_to_linear(*dbm) * 1e-3;
    }
    return watts;
}

channel::FsoParams parse_fso(Section s) {
    channel::FsoParams p;
    auto set = [&](std::string_view key, double& field) {
        if (auto v = s.number(key)) {
            field = *v;
        }
    };
    set("wavelength_m", p.wavelength_m);
    if (auto v = power_W(s, "lo_power")) {
        p.lo_power_W = *v;
    }
    set("shot_noise_var", p.shot_noise_var);
    set("responsivity_A_per_W", p.responsivity_A_per_W);
    set("detector_diameter_m", p.detector_diameter_m);
    if (auto v = power_W(s, "tx_power")) {
        p.tx_power_W = *v;
    }
    set("divergence_rad", p.divergence_rad);
    set("jitter_std_m", p.jitter_std_m);
    set("link_distance_m", p.link_distance_m);
    set("cn2", p.cn2);
    set("weather_atten_dB_per_km", p.weather_atten_dB_per_km);
    set("avg_symbol_energy", p.avg_symbol_energy);
    s.finish();
    try {
        p.validate();
    } catch (const ValidationError& e) {
        throw ValidationError("channel." + std::string(e.what()));
    }
    return p;
}

channel::RfParams parse_rf(Section s) {
    channel::RfParams p;
    auto set = [&](std::string_view key, double& field) {
        if (auto v = s.number(key)) {
            field = *v;
        }
    };
    set("carrier_hz", p.carrier_hz);
    set("bandwidth_hz", p.bandwidth_hz);
    if (auto v = power_W(s, "tx_power")) {
        p.tx_power_W = *v;
    }
    set("tx_gain_dBi", p.tx_gain_dBi);
    set("rx_gain_dBi", p.rx_gain_dBi);
    set("noise_psd_dBm_per_MHz", p.noise_psd_dBm_per_MHz);
    set("noise_figure_dB", p.noise_figure_dB);
    set("oxygen_atten_dB_per_km", p.oxygen_atten_dB_per_km);
    set("rain_atten_dB_per_km", p.rain_atten_dB_per_km);
    set("nakagami_m", p.nakagami_m);
    set("link_distance_m", p.link_distance_m);
    set("avg_symbol_energy", p.avg_symbol_energy);
    s.finish();
    try {
        p.validate();
    } catch (const ValidationError& e) {
        throw ValidationError("channel." + std::string(e.what()));
    }
    return p;
}

ChannelSource parse_channel(Section s) {
    const bool physical = s.has("fso") || s.has("rf") || s.has("link") || s.has("turbulence");
    const bool direct = s.has("a") || s.has("b");
    if (physical && direct) {
        throw ValidationError("channel: give either physical parameters ([channel.fso]/[channel.rf]) or a direct "
                              "(a, b) override, not both");
    }
    if (!physical && !direct) {
        throw ValidationError("channel: missing link description; give [channel.fso] and [channel.rf] or "
                              "channel.a and channel.b");
    }

    if (direct) {
        DirectChannel d;
        d.a = s.required_number("a");
        d.b = s.required_number("b");
        if (d.a < 0.0 || d.a > 1.0) {
            throw ValidationError("channel.a: must lie in [0, 1]");
        }
        if (d.b < 0.0 || d.b > 1.0) {
            throw ValidationError("channel.b: must lie in [0, 1]");
        }
        const auto lin = s.number("gamma_T");
        const auto db = s.number("gamma_T_dB");
        if (lin && db) {
            throw ValidationError("channel: give only one of gamma_T and gamma_T_dB");
        }
        if (db) {
            d.gamma_T = channel::db_to_linear(*db);
        } else if (lin) {
            d.gamma_T = *lin;
        }
        if (d.gamma_T && !(*d.gamma_T > 0.0)) {
            throw ValidationError("channel.gamma_T: must be > 0");
        }
        s.finish();
        return d;
    }

    PhysicalChannel p;
    auto fso = s.table("fso");
    auto rf = s.table("rf");
    if (!fso || !rf) {
        throw ValidationError("channel: physical description needs both [channel.fso] and [channel.rf]");
    }
    p.fso = parse_fso(*fso);
    p.rf = parse_rf(*rf);
    if (auto link = s.table("link")) {
        if (auto m = link->integer("modulation_order")) {
            p.modulation_order = static_cast<int>(*m);
        }
        if (auto ber = link->number("target_ber")) {
            p.target_ber = *ber;
        }
        link->finish();
    }
    try {
        (void)channel::switching_threshold(p.modulation_order, p.target_ber);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("channel.link: ") + e.what());
    }
    if (auto turb = s.table("turbulence")) {
        const double alpha = turb->required_number("alpha");
        const double beta = turb->required_number("beta");
        const double xi = turb->required_number("xi");
        turb->finish();
        try {
            p.turbulence = channel::ScintillationParams::direct(alpha, beta, xi);
        } catch (const ValidationError& e) {
            throw ValidationError(std::string("channel.turbulence: ") + e.what());
        }
    }
    s.finish();
    return p;
}

SweepVariable sweep_variable(const std::string& name, const std::string& field) {
    if (name == "omega") return SweepVariable::Omega;
    if (name == "p") return SweepVariable::P;
    if (name == "Omega" || name == "omega_ratio") return SweepVariable::OmegaRatio;
    if (name == "a") return SweepVariable::A;
    if (name == "b") return SweepVariable::B;
    if (name == "N" || name == "nodes") return SweepVariable::N;
    throw ValidationError(field + ": unknown sweep variable '" + name + "' (expected omega, p, Omega, a, b or N)");
}

void check_sweep_value(SweepVariable v, double x, const std::string& field) {
    auto bad = [&](const std::string& what) {
        throw ValidationError(field + ": value " + std::to_string(x) + " " + what);
    };
    switch (v) {
        case SweepVariable::Omega:
        case SweepVariable::A:
        case SweepVariable::B:
        case SweepVariable::P:
            if (x < 0.0 || x > 1.0) bad("must lie in [0, 1]");
            break;
        case SweepVariable::OmegaRatio:
        case SweepVariable::N:
            if (x != std::floor(x)) bad("is restricted to integer values");
            if (x < 1.0) bad("must be >= 1");
            break;
    }
}

Sweep parse_sweep(Section s) {
    Sweep out;
    const auto var = s.string("variable");
    if (!var) {
        s.missing("variable");
    }
    out.variable = sweep_variable(*var, s.name() + ".variable");

    auto values = s.numbers("values");
    const auto start = s.number("start");
    const auto stop = s.number("stop");
    const auto step = s.number("step");
    if (values && (start || stop || step)) {
        throw ValidationError(s.name() + ": give either values or start/stop/step, not both");
    }
    if (values) {
        out.values = std::move(*values);
    } else {
        if (!start || !stop || !step) {
            throw ValidationError(s.name() + ": a range needs start, stop and step");
        }
        if (!(*step > 0.0)) {
            throw ValidationError(s.name() + ".step: must be > 0");
        }
        if (*stop < *start) {
            throw ValidationError(s.name() + ": stop must be >= start");
        }
        const auto count = static_cast<std::int64_t>(std::floor((*stop - *start) / *step + 1e-9)) + 1;
        if (count > 10'000'000) {
            throw ValidationError(s.name() + ": range has too many points");
        }
        for (std::int64_t k = 0; k < count; ++k) {
            // Computed from the index so the grid does not drift.
            out.values.push_back(*start + static_cast<double>(k) * *step);
        }
    }
    if (out.values.empty()) {
        throw ValidationError(s.name() + ": sweep range is empty");
    }
    for (const double x : out.values) {
        check_sweep_value(out.variable, x, s.name());
    }
    s.finish();
    return out;
}

NetworkSection parse_network(Section s) {
    NetworkSection n;
    n.n_nodes = static_cast<int>(s.required_integer("nodes"));
    n.buffer_size = static_cast<int>(s.required_integer("buffer_size"));
    n.omega_ratio = static_cast<int>(s.required_integer("omega_ratio"));
    if (n.n_nodes < 1) throw ValidationError("network.nodes: must be >= 1");
    if (n.buffer_size < 1) throw ValidationError("network.buffer_size: must be >= 1");
    if (n.omega_ratio < 1) throw ValidationError("network.omega_ratio: must be >= 1");
    if (auto w = s.number("omega")) {
        n.omega = *w;
    }
    if (n.omega < 0.0 || n.omega > 1.0) throw ValidationError("network.omega: must lie in [0, 1]");

    const auto default_p = s.number("p");
    for (auto& entry : s.tables("protocol")) {
        ProtocolSpec spec;
        const auto mode = entry.string("mode");
        if (!mode) {
            entry.missing("mode");
        }
        try {
            spec.mode = protocol::mode_from_string(*mode);
        } catch (const ValidationError& e) {
            throw ValidationError(entry.name() + ".mode: " + e.what());
        }
        if (auto p = entry.number("p")) {
            spec.p = *p;
        } else if (spec.mode == protocol::Mode::PPersistence) {
            spec.p = default_p.value_or(1.0);
        }
        if (spec.p < 0.0 || spec.p > 1.0) {
            throw ValidationError(entry.name() + ".p: must lie in [0, 1]");
        }
        entry.finish();
        n.protocols.push_back(spec);
    }
    if (n.protocols.empty()) {
        n.protocols.push_back({protocol::Mode::PPersistence, default_p.value_or(1.0)});
        if (n.protocols.back().p < 0.0 || n.protocols.back().p > 1.0) {
            throw ValidationError("network.p: must lie in [0, 1]");
        }
    }
    if (auto sweep = s.table("sweep")) {
        n.sweep = parse_sweep(std::move(*sweep));
    }
    if (auto series = s.table("series")) {
        n.series = parse_sweep(std::move(*series));
        if (n.sweep && n.sweep->variable == n.series->variable) {
            throw ValidationError("network.series: must vary a different variable than network.sweep");
        }
    }
    s.finish();
    return n;
}

simulator::SimConfig parse_simulation(Section s) {
    simulator::SimConfig sim;
    if (auto seed = s.integer("seed")) {
        if (*seed < 0) throw ValidationError("simulation.seed: must be >= 0");
        sim.seed = static_cast<std::uint64_t>(*seed);
    }
    const auto steps = s.required_integer("steps");
    const auto warmup = s.integer("warmup").value_or(0);
    if (steps < 1) throw ValidationError("simulation.steps: must be >= 1");
    if (warmup < 0) throw ValidationError("simulation.warmup: must be >= 0");
    sim.steps = static_cast<std::uint64_t>(steps);
    sim.warmup = static_cast<std::uint64_t>(warmup);
    if (sim.steps <= sim.warmup) throw ValidationError("simulation.steps: must exceed simulation.warmup");
    const auto scope = s.string("scope").value_or("joint");
    if (scope == "joint") {
        sim.scope = simulator::JointSystem{};
    } else if (scope == "chain") {
        const auto node = s.integer("node").value_or(1);
        if (node < 1) throw ValidationError("simulation.node: must be >= 1");
        sim.scope = simulator::ChainLevel{static_cast<int>(node)};
    } else {
        throw ValidationError("simulation.scope: expected 'joint' or 'chain', got '" + scope + "'");
    }
    s.finish();
    return sim;
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view source_name) {
    toml::table root;
    try {
        root = toml::parse(text, source_name);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source_name << ":" << e.source().begin.line << ":" << e.source().begin.column
            << ": parse error: " << e.description();
        throw ValidationError(msg.str());
    }

    Section top(root, "");
    RunConfig cfg;

    auto channel = top.table("channel");
    if (!channel) {
        throw ValidationError("channel: missing [channel] section");
    }
    cfg.channel = parse_channel(std::move(*channel));

    if (auto network = top.table("network")) {
        cfg.network = parse_network(std::move(*network));
    }
    if (auto sim = top.table("simulation")) {
        cfg.simulation = parse_simulation(std::move(*sim));
    }
    if (auto out = top.table("output")) {
        if (auto path = out->string("csv")) {
            cfg.output.csv = *path;
        }
        if (auto prec = out->integer("precision")) {
            if (*prec < 1 || *prec > 17) throw ValidationError("output.precision: must lie in [1, 17]");
            cfg.output.precision = static_cast<int>(*prec);
        }
        out->finish();
    }
    if (auto meta = top.table("metadata")) {
        for (const auto& [k, v] : meta->raw()) {
            auto num = v.value<double>();
            if (!num || !(v.is_integer() || v.is_floating_point())) {
                throw ValidationError("metadata." + std::string(k.str()) + ": must be a number" + where(v));
            }
            cfg.metadata.emplace(std::string(k.str()), *num);
        }
    }
    top.finish();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

}  // namespace fsorf::cli
