#include "fsorf/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fsorf/error.hpp"
#include "fsorf/metrics.hpp"
#include "fsorf/protocol.hpp"

namespace fsorf::optimizer {

double total_throughput(const Scenario& s, double p) {
    const protocol::ProtocolConfig cfg{.mode = protocol::Mode::PPersistence, .p = p, .n_nodes = s.n_nodes};
    const auto cascade = protocol::cascade_solve(
        s.a, s.b, cfg, {.omega = s.omega, .buffer_size = s.buffer_size, .omega_ratio = s.omega_ratio});
    double total = 0.0;
    for (const auto& node : cascade.nodes) {
        total += metrics::throughput(node.chain);
    }
    return total;
}

GoldenSectionResult golden_section_maximize(const std::function<double(double)>& f,
                                            double lo,
                                            double hi,
                                            double tol) {
    detail::require(hi > lo, "golden-section interval must be nonempty");
    detail::require(tol > 0.0, "golden-section tolerance must be > 0");

    constexpr double kInvPhi = std::numbers::phi - 1.0;  // 0.618...
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    int iterations = 0;
    while (hi - lo > tol) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = f(x2);
        }
        ++iterations;
    }
    const double mid = 0.5 * (lo + hi);
    return {.x = mid, .fx = f(mid), .iterations = iterations, .width = hi - lo};
}

OptimizationResult optimize_p(const Scenario& s, double tol) {
    detail::require(tol > 0.0, "optimizer tolerance must be > 0");
    const auto objective = [&s](double p) { return total_throughput(s, p); };

    const auto golden = golden_section_maximize(objective, kPLow, kPHigh, tol);
    OptimizationResult out{
        .p_star = golden.x,
        .th_total_at_star = golden.fx,
        .iterations = golden.iterations,
        .bracket_width = golden.width,
    };

    constexpr int kPrescan = 32;
    double best_scan = -1.0;
    for (int k = 0; k < kPrescan; ++k) {
        const double p = kPLow + (kPHigh - kPLow) * k / (kPrescan - 1);
        best_scan = std::max(best_scan, objective(p));
    }
    const double slack = 1e-9 * std::max(1.0, std::abs(golden.fx));
    if (best_scan <= golden.fx + slack) {
        return out;
    }

    const int points = static_cast<int>(std::ceil((kPHigh - kPLow) / tol)) + 1;
    const double spacing = (kPHigh - kPLow) / (points - 1);
    out.used_grid_fallback = true;
    out.th_total_at_star = -1.0;
    for (int k = 0; k < points; ++k) {
        const double p = kPLow + spacing * k;
        const double v = objective(p);
        if (v > out.th_total_at_star) {
            out.th_total_at_star = v;
            out.p_star = p;
        }
    }
    out.bracket_width = spacing;
    out.iterations = points;
    return out;
}

}  // namespace fsorf::optimizer
