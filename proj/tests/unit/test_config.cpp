#include <doctest.h>

#include <string>

#include "fsorf/cli/config.hpp"
#include "fsorf/error.hpp"

using namespace fsorf;
using namespace fsorf::cli;

namespace {

const std::string kDirect = R"(
[channel]
a = 0.9
b = 0.22
)";

const std::string kNetwork = R"(
[network]
nodes = 4
buffer_size = 10
omega_ratio = 2
omega = 0.5
)";

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "test.toml");
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("the shipped link budget is a valid physical channel") {
    const auto cfg = load_config(std::string(FSORF_RECIPE_DIR) + "/link_budget.toml");
    REQUIRE(std::holds_alternative<PhysicalChannel>(cfg.channel));
    const auto& p = std::get<PhysicalChannel>(cfg.channel);
    CHECK(p.fso.tx_power_W == doctest::Approx(0.0316227766016838));
    CHECK(p.rf.tx_power_W == doctest::Approx(0.316227766016838));
    CHECK(p.rf.noise_psd_dBm_per_MHz == -114.0);
    CHECK(p.fso.detector_diameter_m == 0.2);
    CHECK(p.modulation_order == 16);
    CHECK(p.target_ber == 1e-6);
    CHECK_FALSE(cfg.network.has_value());
}

TEST_CASE("direct channel with network, protocols and a range sweep") {
    const auto cfg = parse_config(kDirect + kNetwork + R"(
[network.sweep]
variable = "omega"
start = 0.1
stop = 0.5
step = 0.1

[[network.protocol]]
mode = "p-persistence"
p = 0.5

[[network.protocol]]
mode = "equal-priority"

[output]
precision = 10

[metadata]
R_in = 2.5
)");
    const auto& d = std::get<DirectChannel>(cfg.channel);
    CHECK(d.a == 0.9);
    CHECK(d.b == 0.22);
    REQUIRE(cfg.network);
    CHECK(cfg.network->n_nodes == 4);
    REQUIRE(cfg.network->sweep);
    CHECK(cfg.network->sweep->values.size() == 5);
    CHECK(cfg.network->sweep->values.back() == doctest::Approx(0.5));
    REQUIRE(cfg.network->protocols.size() == 2);
    CHECK(cfg.network->protocols[0].p == 0.5);
    CHECK(cfg.network->protocols[1].mode == protocol::Mode::EqualPriority);
    CHECK(cfg.output.precision == 10);
    CHECK(cfg.metadata.at("R_in") == 2.5);
}

TEST_CASE("a channel section must describe the link one way") {
    CHECK(contains(error_of(kNetwork + "[channel]\n"), "channel"));
    CHECK(contains(error_of(kNetwork), "channel"));
    CHECK(contains(error_of(kDirect + kNetwork + "[channel.fso]\ncn2 = 1e-14\n"), "not both"));
}

TEST_CASE("non-integer rate ratio is rejected") {
    const auto msg = error_of(kDirect + "[network]\nnodes = 2\nbuffer_size = 3\nomega_ratio = 1.5\n");
    CHECK(contains(msg, "restricted to integer values"));
    CHECK(contains(msg, "network.omega_ratio"));
}

TEST_CASE("integral floats are accepted where integers are expected") {
    const auto cfg = parse_config(kDirect + "[network]\nnodes = 2.0\nbuffer_size = 3\nomega_ratio = 2\n");
    CHECK(cfg.network->n_nodes == 2);
}

TEST_CASE("sweep ranges must be nonempty with a positive step") {
    CHECK(contains(error_of(kDirect + kNetwork + "[network.sweep]\nvariable = \"omega\"\nvalues = []\n"), "empty"));
    CHECK(contains(error_of(kDirect + kNetwork +
                            "[network.sweep]\nvariable = \"omega\"\nstart = 0.1\nstop = 0.5\nstep = 0\n"),
                   "step"));
    CHECK(contains(error_of(kDirect + kNetwork +
                            "[network.sweep]\nvariable = \"omega\"\nstart = 0.5\nstop = 0.1\nstep = 0.1\n"),
                   "stop"));
    CHECK(contains(error_of(kDirect + kNetwork + "[network.sweep]\nvariable = \"Omega\"\nvalues = [1, 2.5]\n"),
                   "integer"));
    CHECK(contains(error_of(kDirect + kNetwork + "[network.sweep]\nvariable = \"gamma\"\nvalues = [1]\n"),
                   "unknown sweep variable"));
    CHECK(contains(error_of(kDirect + kNetwork + "[network.sweep]\nvariable = \"omega\"\nvalues = [1.5]\n"),
                   "[0, 1]"));
}

TEST_CASE("syntax errors report the line") {
    const auto msg = error_of("[channel]\na = 0.9\nb = = 0.2\n");
    CHECK(contains(msg, "test.toml:3"));
}

TEST_CASE("unknown keys and sections are rejected with their location") {
    const auto msg = error_of(kDirect + kNetwork + "bufer_size = 4\n");
    CHECK(contains(msg, "network.bufer_size"));
    CHECK(contains(msg, "line"));
    CHECK(contains(error_of(kDirect + kNetwork + "[plot]\nx = 1\n"), "plot"));
}

TEST_CASE("field-level validation names the field") {
    CHECK(contains(error_of("[channel]\na = 1.2\nb = 0.2\n"), "channel.a"));
    CHECK(contains(error_of(kDirect + "[network]\nnodes = 0\nbuffer_size = 3\nomega_ratio = 2\n"), "network.nodes"));
    CHECK(contains(error_of(kDirect + kNetwork + "[[network.protocol]]\nmode = \"p-persistence\"\np = 2\n"),
                   "network.protocol[0].p"));
    CHECK(contains(error_of(kDirect + kNetwork + "[[network.protocol]]\nmode = \"fifo\"\n"), "mode"));
    CHECK(contains(error_of(kDirect + kNetwork + "[simulation]\nsteps = 10\nwarmup = 10\n"), "simulation.steps"));
    CHECK(contains(error_of(kDirect + kNetwork + "[simulation]\nsteps = 10\nscope = \"all\"\n"), "simulation.scope"));
    CHECK(contains(error_of(R"(
[channel.fso]
tx_power_W = 0.03
tx_power_dBm = 15
[channel.rf]
)"), "tx_power"));
    CHECK(contains(error_of("[channel.fso]\n[channel.rf]\n[channel.link]\nmodulation_order = 8\n"), "channel.link"));
    CHECK(contains(error_of("[channel.fso]\ncn2 = -1\n[channel.rf]\n"), "fso.cn2"));
}

TEST_CASE("power fields accept watts or dBm") {
    const auto cfg = parse_config("[channel.fso]\ntx_power_W = 0.5\n[channel.rf]\ntx_power_dBm = 30\n");
    const auto& p = std::get<PhysicalChannel>(cfg.channel);
    CHECK(p.fso.tx_power_W == 0.5);
    CHECK(p.rf.tx_power_W == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("simulation section") {
    const auto cfg = parse_config(kDirect + kNetwork + "[simulation]\nseed = 7\nsteps = 1000\nwarmup = 10\nscope = \"chain\"\nnode = 2\n");
    REQUIRE(cfg.simulation);
    CHECK(cfg.simulation->seed == 7);
    CHECK(cfg.simulation->measured_steps() == 990);
    CHECK(std::get<simulator::ChainLevel>(cfg.simulation->scope).node == 2);
}
