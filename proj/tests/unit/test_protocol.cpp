#include <doctest.h>

#include <cmath>

#include "fsorf/error.hpp"
#include "fsorf/metrics.hpp"
#include "fsorf/protocol.hpp"

using namespace fsorf;
using namespace fsorf::protocol;

namespace {

ProtocolConfig pp(double p, int n) { return ProtocolConfig{Mode::PPersistence, p, n}; }

}  // namespace

TEST_CASE("mode names round-trip") {
    CHECK(mode_from_string("equal-priority") == Mode::EqualPriority);
    CHECK(mode_from_string("equal") == Mode::EqualPriority);
    CHECK(mode_from_string("p-persistence") == Mode::PPersistence);
    CHECK(mode_from_string(to_string(Mode::PPersistence)) == Mode::PPersistence);
    CHECK(mode_from_string(to_string(Mode::EqualPriority)) == Mode::EqualPriority);
    CHECK_THROWS_AS(mode_from_string("round-robin"), ValidationError);
}

TEST_CASE("equal-priority service probability") {
    CHECK(equal_priority_prf(0.9, 0.22, 4) == doctest::Approx(0.1949805).epsilon(1e-14));
    CHECK(equal_priority_prf(0.0, 0.22, 4) == 0.0);
    CHECK(equal_priority_prf(1.0, 0.0, 1) == doctest::Approx(1.0));
}

TEST_CASE("equal-priority probability matches enumeration of failure patterns") {
    // Node 1 is served when its FSO failed, the RF link is good, and it wins a
    // uniform draw among the k failed nodes.
    const double a = 0.35, b = 0.1;
    for (int N = 1; N <= 8; ++N) {
        double total = 0.0;
        for (unsigned mask = 0; mask < (1u << N); ++mask) {
            if (!(mask & 1u)) {
                continue;
            }
            const int k = __builtin_popcount(mask);
            total += std::pow(a, k) * std::pow(1 - a, N - k) * (1 - b) / k;
        }
        CHECK(equal_priority_prf(a, b, N) == doctest::Approx(total).epsilon(1e-13));
    }
}

TEST_CASE("three-node cascade with p = 0.5") {
    const auto res = cascade_solve(0.9, 0.22, pp(0.5, 3), NetworkShape{0.7, 2, 2});
    REQUIRE(res.nodes.size() == 3);
    const double prf[] = {0.351, 0.169475151873998, 0.094225028142673};
    const double y[] = {0.517164809475789, 0.444018623964841, 0.406276261746648};
    const double th[] = {0.332252605517922, 0.229889910588423, 0.177234012877991};
    const double qa[] = {1.80777798535987, 1.87698338103539, 1.90820356257487};
    for (int k = 0; k < 3; ++k) {
        CAPTURE(k);
        const auto& n = res.nodes[k];
        CHECK(n.p_rf == doctest::Approx(prf[k]).epsilon(1e-12));
        CHECK(n.y == doctest::Approx(y[k]).epsilon(1e-12));
        CHECK(n.x == doctest::Approx(1 - y[k]).epsilon(1e-12));
        CHECK(metrics::throughput(n.chain) == doctest::Approx(th[k]).epsilon(1e-12));
        CHECK(metrics::avg_buffer_size(n.chain) == doctest::Approx(qa[k]).epsilon(1e-12));
    }
}

TEST_CASE("service probability y written two ways") {
    const auto res = cascade_solve(0.6, 0.3, pp(0.8, 2), NetworkShape{0.45, 4, 3});
    const auto& chain = res.nodes[1].chain;
    const double start = 0.6 * 0.7 * 0.8;
    CHECK(rf_service_prob_y(chain, 0.45, start) == doctest::Approx(rf_service_prob_y(chain, 0.45, 0.6, 0.3, 0.8)));
    CHECK(res.nodes[1].y == doctest::Approx(rf_service_prob_y(chain, 0.45, start)));
}

TEST_CASE("cascade RF access shrinks with priority rank") {
    const auto res = cascade_solve(0.9, 0.22, pp(1.0, 5), NetworkShape{0.6, 10, 2});
    for (std::size_t k = 1; k < res.nodes.size(); ++k) {
        CHECK(res.nodes[k].p_rf <= res.nodes[k - 1].p_rf);
        CHECK(res.nodes[k].p_rf == doctest::Approx(0.9 * 0.78 * [&] {
                  double x = 1.0;
                  for (std::size_t j = 0; j < k; ++j) x *= res.nodes[j].x;
                  return x;
              }()));
    }
}

TEST_CASE("equal priority gives every node the same chain") {
    const auto res = cascade_solve(0.9, 0.22, ProtocolConfig{Mode::EqualPriority, 0.3, 4}, NetworkShape{0.5, 6, 2});
    for (const auto& n : res.nodes) {
        CHECK(n.p_rf == doctest::Approx(equal_priority_prf(0.9, 0.22, 4)));
        CHECK((n.chain.steady - res.nodes[0].chain.steady).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("protocol validation") {
    CHECK_THROWS_AS(cascade_solve(0.9, 0.22, pp(1.5, 2), NetworkShape{0.5, 2, 2}), ValidationError);
    CHECK_THROWS_AS(cascade_solve(0.9, 0.22, pp(0.5, 0), NetworkShape{0.5, 2, 2}), ValidationError);
    CHECK_THROWS_AS(cascade_solve(1.2, 0.22, pp(0.5, 2), NetworkShape{0.5, 2, 2}), ValidationError);
    CHECK_NOTHROW(cascade_solve(0.9, 0.22, pp(0.0, 2), NetworkShape{0.5, 2, 2}));
}
