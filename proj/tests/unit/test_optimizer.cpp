#include <doctest.h>

#include <cmath>

#include "fsorf/error.hpp"
#include "fsorf/optimizer.hpp"

using namespace fsorf;
using namespace fsorf::optimizer;

TEST_CASE("golden-section search on a concave parabola") {
    const auto res = golden_section_maximize([](double x) { return -(x - 0.3) * (x - 0.3); }, kPLow, kPHigh, 1e-3);
    CHECK(std::abs(res.x - 0.3) <= 1e-3);
    CHECK(res.width <= 1e-3);
    CHECK(res.iterations == 15);
}

TEST_CASE("golden-section search finds a maximum at the bracket edge") {
    const auto res = golden_section_maximize([](double x) { return x; }, kPLow, kPHigh, 1e-4);
    CHECK(res.x >= 1.0 - 1e-4);
}

TEST_CASE("optimal p agrees with a fine grid scan") {
    const Scenario s{0.9, 0.22, 0.7, 10, 2, 4};
    const auto res = optimize_p(s);
    double best = -1.0, best_p = 0.0;
    constexpr int n = 1000;
    for (int k = 0; k < n; ++k) {
        const double p = kPLow + (kPHigh - kPLow) * k / (n - 1);
        const double v = total_throughput(s, p);
        if (v > best) {
            best = v;
            best_p = p;
        }
    }
    const double cell = (kPHigh - kPLow) / (n - 1);
    CHECK(std::abs(res.p_star - best_p) <= 2 * cell);
    CHECK(res.th_total_at_star >= best - 1e-6);
    CHECK(res.p_star >= kPLow);
    CHECK(res.p_star <= kPHigh);
}

TEST_CASE("total throughput with p = 1 is bounded by the offered load") {
    const Scenario s{0.5, 0.2, 0.4, 8, 2, 3};
    const double th = total_throughput(s, 1.0);
    CHECK(th <= 3 * 0.4 + 1e-12);
    CHECK(th > 0.0);
}

TEST_CASE("optimizer rejects a nonpositive tolerance") {
    CHECK_THROWS_AS(optimize_p(Scenario{0.9, 0.22, 0.7, 10, 2, 4}, 0.0), ValidationError);
}
