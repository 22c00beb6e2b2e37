#pragma once

#include <functional>

#include "fsorf/markov.hpp"

namespace fsorf::optimizer {

inline constexpr double kPLow = 0.001;
inline constexpr double kPHigh = 1.0;

struct OptimizationResult {
    double p_star = 0.0;
    double th_total_at_star = 0.0;
    int iterations = 0;
    double bracket_width = 0.0;
    /// Set when the coarse pre-scan found a better point than the
    /// golden-section bracket and the result came from a fine grid scan.
    bool used_grid_fallback = false;
};

struct Scenario {
    double a = 0.0;
    double b = 0.0;
    double omega = 0.0;
    int buffer_size = 1;
    int omega_ratio = 1;
    int n_nodes = 1;
};

/// Sum of per-node throughput under p-persistence with persistence `p`.
double total_throughput(const Scenario& s, double p);

struct GoldenSectionResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
    double width = 0.0;
};

/// Maximize a unimodal `f` on [lo, hi] until the bracket is no wider than
/// `tol`. Returns the bracket midpoint.
GoldenSectionResult golden_section_maximize(const std::function<double(double)>& f,
                                            double lo,
                                            double hi,
                                            double tol);

/// Golden-section search for p in [0.001, 1], cross-checked against a
/// 32-point pre-scan. If the pre-scan beats the golden-section answer the
/// objective is not unimodal and a grid with spacing <= tol is used instead.
OptimizationResult optimize_p(const Scenario& s, double tol = 1e-3);

}  // namespace fsorf::optimizer
