#include <doctest.h>

#include "fsorf/error.hpp"
#include "fsorf/metrics.hpp"

using namespace fsorf;
using namespace fsorf::metrics;

namespace {

markov::ChainSolution small_chain() {
    markov::ChainParams p;
    p.omega = 0.7;
    p.p_fso = 0.1;
    p.p_rf = 0.3;
    p.buffer_size = 1;
    p.omega_ratio = 2;
    return markov::solve_chain(p);
}

}  // namespace

TEST_CASE("metrics of the B = 1, Omega = 2 chain") {
    const auto m = node_metrics(small_chain(), 1);
    CHECK(m.throughput == doctest::Approx(868.0 / 2941.0).epsilon(1e-13));
    CHECK(m.avg_buffer == doctest::Approx(0.8639918395103706).epsilon(1e-13));
    REQUIRE(m.queue_delay);
    CHECK(*m.queue_delay == doctest::Approx(2.9274193548387095).epsilon(1e-13));
    CHECK(m.loss_prob == doctest::Approx(0.40486229173750427).epsilon(1e-13));
    REQUIRE(m.efficiency);
    CHECK(*m.efficiency == doctest::Approx(0.42162529751785105).epsilon(1e-13));
}

TEST_CASE("delay and efficiency are undefined at zero throughput or zero load") {
    CHECK_FALSE(queue_delay(1.0, 0.0).has_value());
    CHECK_FALSE(efficiency(0.0, 0.0).has_value());
    CHECK(loss_prob(0.5, 0.5 + 1e-15) == 0.0);
    CHECK(loss_prob(0.5, 0.6) == 0.0);
}

TEST_CASE("RF need and utilization") {
    const auto u = rf_need_and_utilization(0.5, 0.22, 0.5, 2);
    CHECK(u.need == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(u.utilization == doctest::Approx(0.2925).epsilon(1e-15));
    CHECK(rf_need_and_utilization(0.0, 0.22, 1.0, 10).utilization == 0.0);
    CHECK_THROWS_AS(rf_need_and_utilization(0.5, 0.2, 0.5, 0), ValidationError);
}

TEST_CASE("network evaluation totals and equal-priority utilization") {
    const protocol::ProtocolConfig cfg{protocol::Mode::PPersistence, 0.5, 3};
    const auto cascade = protocol::cascade_solve(0.9, 0.22, cfg, protocol::NetworkShape{0.7, 2, 2});
    const auto net = evaluate(cascade, 0.9, 0.22, cfg);
    CHECK(net.total_throughput ==
          doctest::Approx(0.332252605517922 + 0.229889910588423 + 0.177234012877991).epsilon(1e-12));
    CHECK(net.rf_utilization == doctest::Approx(0.78 * 0.5 * (1 - 0.001)).epsilon(1e-14));

    const protocol::ProtocolConfig eq{protocol::Mode::EqualPriority, 0.5, 3};
    const auto eq_net = evaluate(protocol::cascade_solve(0.9, 0.22, eq, protocol::NetworkShape{0.7, 2, 2}), 0.9, 0.22, eq);
    CHECK(eq_net.rf_utilization == doctest::Approx(0.78 * (1 - 0.001)).epsilon(1e-14));
}
