#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fsorf/cli/commands.hpp"
#include "fsorf/error.hpp"

using namespace fsorf;
using namespace fsorf::cli;

namespace {

RunConfig recipe(const std::string& name) { return load_config(std::string(FSORF_RECIPE_DIR) + "/" + name); }

std::string csv(const Table& t) {
    std::ostringstream out;
    write_csv(t, out);
    return out.str();
}

std::size_t column(const Table& t, const std::string& name) {
    for (std::size_t k = 0; k < t.header.size(); ++k) {
        if (t.header[k] == name) {
            return k;
        }
    }
    FAIL("missing column " << name);
    return 0;
}

}  // namespace

TEST_CASE("numbers print with 12 significant digits and no locale") {
    CHECK(format_number(0.1, 12) == "0.1");
    CHECK(format_number(1.0 / 3.0, 12) == "0.333333333333");
    CHECK(format_number(2.46900795832e-15, 12) == "2.46900795832e-15");
    CHECK(format_number(-0.0, 12) == "0");
    CHECK(format_number(1234567.0, 12) == "1234567");
    CHECK(format_number(std::nan(""), 12) == "undefined");
}

TEST_CASE("command names") {
    CHECK(command_from_string("optimize-p") == Command::OptimizeP);
    CHECK(to_string(Command::Simulate) == "simulate");
    CHECK_THROWS_AS(command_from_string("plot"), ValidationError);
}

TEST_CASE("throughput sweep has one row per point, protocol and node") {
    const auto t = run_command(Command::Sweep, recipe("throughput_vs_omega.toml"), {std::nullopt, 4});
    CHECK(t.header == metrics_columns());
    CHECK(t.rows.size() == 100 * 3 * 4);
    for (const auto& name : {"omega", "node", "protocol", "p", "Th", "Qa", "Tq", "PL", "phi"}) {
        column(t, name);
    }
    std::set<std::string> protocols;
    for (const auto& row : t.rows) {
        protocols.insert(row[column(t, "protocol")]);
        CHECK(row.size() == t.header.size());
    }
    CHECK(protocols == std::set<std::string>{"p-persistence", "equal-priority"});
    // Rows are ordered by sweep value, protocol, then node.
    CHECK(t.rows[0][column(t, "omega")] == "0.01");
    CHECK(t.rows[0][column(t, "node")] == "1");
    CHECK(t.rows[3][column(t, "node")] == "4");
    CHECK(t.rows[4][column(t, "p")] == "0.5");
    CHECK(t.rows[8][column(t, "p")] == "undefined");
}

TEST_CASE("output is identical for any thread count") {
    const auto cfg = recipe("frame_loss_vs_rate_ratio.toml");
    CHECK(csv(run_command(Command::Sweep, cfg, {std::nullopt, 1})) ==
          csv(run_command(Command::Sweep, cfg, {std::nullopt, 8})));
}

TEST_CASE("utilization column for the node-count sweep") {
    const auto t = run_command(Command::Sweep, recipe("rf_utilization_vs_nodes.toml"), {std::nullopt, 4});
    const auto u = column(t, "U");
    const auto n = column(t, "N");
    const auto a = column(t, "a");
    double last = -1.0;
    for (const auto& row : t.rows) {
        if (row[a] == "0.9" && row[column(t, "p")] == "0.5" && row[column(t, "node")] == "1") {
            const double v = std::stod(row[u]);
            CHECK(v >= last);
            last = v;
            if (row[n] == "50") {
                CHECK(v == doctest::Approx(0.39).epsilon(1e-3));
            }
        }
    }
}

TEST_CASE("solve ignores the sweep and evaluates the base values") {
    const auto t = run_command(Command::Solve, recipe("throughput_vs_omega.toml"));
    CHECK(t.rows.size() == 3 * 4);
    CHECK(t.rows[0][column(t, "omega")] == "0.5");
    CHECK(t.rows[0][column(t, "sweep_var")] == "none");
}

TEST_CASE("sweep and simulate need the matching sections") {
    auto cfg = recipe("throughput_vs_omega.toml");
    cfg.network->sweep.reset();
    CHECK_THROWS_AS(run_command(Command::Sweep, cfg), ValidationError);
    CHECK_THROWS_AS(run_command(Command::Simulate, cfg), ValidationError);
    CHECK_THROWS_AS(run_command(Command::Solve, recipe("link_budget.toml")), ValidationError);
    CHECK_THROWS_AS(run_command(Command::OptimizeP, recipe("throughput_vs_p_strong_turbulence.toml")),
                    ValidationError);
}

TEST_CASE("channel command reports the link state") {
    const auto t = run_command(Command::Channel, recipe("link_budget.toml"));
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][column(t, "avg_snr_fso_dB")] == "32.8");
    CHECK(std::stod(t.rows[0][column(t, "gamma_T_dB")]) == doctest::Approx(20.8657595));

    const auto d = run_command(Command::Channel, recipe("throughput_vs_omega.toml"));
    CHECK(d.rows[0][column(d, "a")] == "0.9");
    CHECK(d.rows[0][column(d, "avg_snr_rf")] == "undefined");
}

TEST_CASE("optimize-p reports one row per point") {
    auto cfg = recipe("throughput_vs_fso_outage.toml");
    cfg.network->sweep->values = {0.5, 0.9};
    const auto t = run_command(Command::OptimizeP, cfg, {std::nullopt, 2});
    REQUIRE(t.rows.size() == 2);
    const double p = std::stod(t.rows[1][column(t, "p_star")]);
    CHECK(p >= 0.001);
    CHECK(p <= 1.0);
}

TEST_CASE("simulate appends empirical columns and honours the seed override") {
    auto cfg = recipe("joint_simulation_vs_analytics.toml");
    cfg.network->sweep->values = {0.3};
    cfg.simulation->steps = 20000;
    cfg.simulation->warmup = 100;
    const auto t = run_command(Command::Simulate, cfg, {std::nullopt, 2});
    CHECK(t.header.size() == metrics_columns().size() + simulation_columns().size());
    CHECK(t.rows.size() == 2 * 4);
    CHECK(t.rows[0][column(t, "tv_distance")] == "undefined");
    CHECK(csv(t) == csv(run_command(Command::Simulate, cfg, {std::nullopt, 1})));
    CHECK(csv(t) != csv(run_command(Command::Simulate, cfg, {std::uint64_t{99}, 2})));

    cfg.simulation->scope = simulator::ChainLevel{2};
    const auto c = run_command(Command::Simulate, cfg, {std::nullopt, 2});
    CHECK(c.rows.size() == 2);
    CHECK(c.rows[0][column(c, "node")] == "2");
    CHECK(std::stod(c.rows[0][column(c, "tv_distance")]) < 0.2);
}

TEST_CASE("csv files are written atomically") {
    const auto dir = std::filesystem::temp_directory_path() / "fsorf_commands_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.csv";
    Table t{{"x", "y"}, {{"1", "2"}}};
    write_csv_file(t, path);
    std::ifstream in(path);
    std::stringstream body;
    body << in.rdbuf();
    CHECK(body.str() == "x,y\n1,2\n");
    CHECK_FALSE(std::filesystem::exists(dir / "out.csv.partial"));

    CHECK_THROWS(write_csv_file(t, dir / "missing" / "out.csv"));
    CHECK_FALSE(std::filesystem::exists(dir / "missing" / "out.csv.partial"));
    std::filesystem::remove_all(dir);
}
