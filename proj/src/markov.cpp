#include "fsorf/markov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "fsorf/error.hpp"

namespace fsorf::markov {

using detail::require;

namespace {

bool is_probability(double v) { return v >= 0.0 && v <= 1.0; }

constexpr double kSumSlack = 1e-12;

}  // namespace

void ChainParams::validate() const {
    require(is_probability(omega), "omega must lie in [0, 1]");
    require(is_probability(p_fso), "p_fso must lie in [0, 1]");
    require(is_probability(p_rf), "p_rf must lie in [0, 1]");
    require(p_fso + p_rf <= 1.0 + kSumSlack, "p_fso + p_rf must not exceed 1");
    require(buffer_size >= 1, "buffer size B must be >= 1");
    require(omega_ratio >= 1, "rate ratio Omega must be an integer >= 1");
}

TransitionProbs transition_probs(const ChainParams& params) {
    params.validate();
    const double w = params.omega;
    const double pf = params.p_fso;
    const double pr = params.p_rf;
    const double idle = std::max(0.0, 1.0 - (pf + pr));
    return TransitionProbs{
        .u0 = 1.0 - w + w * pf,
        .f = w * idle,
        .u = (1.0 - w) * idle + w * pf,
        .uB = idle + w * pf,
        .v1 = (1.0 - w) * pf,
        .v2 = w * pr,
        .v3 = (1.0 - w) * pr,
        .v4 = pr,
    };
}

StateIndex::StateIndex(int buffer_size, int omega_ratio)
    : buffer_size_(buffer_size),
      omega_ratio_(omega_ratio),
      size_(static_cast<std::size_t>(buffer_size) * omega_ratio + 1) {
    require(buffer_size >= 1 && omega_ratio >= 1, "StateIndex needs B >= 1 and Omega >= 1");
}

std::size_t StateIndex::linear(State s) const {
    require(s.i >= 0 && s.i <= buffer_size_ && s.j >= 0 && s.j < omega_ratio_ && (s.i > 0 || s.j == 0),
            "state (" + std::to_string(s.i) + ", " + std::to_string(s.j) + ") out of range");
    if (s.i == 0) {
        return 0;
    }
    return static_cast<std::size_t>(s.i - 1) * omega_ratio_ + s.j + 1;
}

State StateIndex::state(std::size_t linear) const {
    require(linear < size_, "linear state index out of range");
    if (linear == 0) {
        return {};
    }
    const auto k = linear - 1;
    return State{static_cast<int>(k / omega_ratio_) + 1, static_cast<int>(k % omega_ratio_)};
}

TransitionMatrix build_matrix(const ChainParams& params) {
    const TransitionProbs t = transition_probs(params);
    const int B = params.buffer_size;
    const int W = params.omega_ratio;
    const double w = params.omega;
    const auto n = static_cast<Eigen::Index>(params.state_count());

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(n) * 4);
    auto put = [&](Eigen::Index to, Eigen::Index from, double v) {
        if (v != 0.0) {
            entries.emplace_back(to, from, v);
        }
    };
    auto offset = [W](int level) { return static_cast<Eigen::Index>(level - 1) * W + 1; };

    if (W == 1) {
        // Single-step RF: starting an RF transmission is a departure.
        put(0, 0, t.u0 + t.v2);
        put(offset(1), 0, t.f);
        for (int k = 1; k <= B; ++k) {
            const auto c = offset(k);
            put(c, c, (k < B ? t.u : t.uB) + t.v2);
            put(k == 1 ? 0 : offset(k - 1), c, t.v1 + t.v3);
            if (k < B) {
                put(offset(k + 1), c, t.f);
            }
        }
    } else {
        // A0, C0, E0
        put(0, 0, t.u0);
        put(0, offset(1), t.v1);
        put(0, offset(1) + W - 1, 1.0 - w);
        put(offset(1), 0, t.f);
        put(offset(1) + 1, 0, t.v2);

        for (int k = 1; k <= B; ++k) {
            const auto d = offset(k);
            const bool full = (k == B);
            // A (or A_B) on the diagonal
            put(d, d, full ? t.uB : t.u);
            put(d, d + W - 1, w);
            put(d + 1, d, full ? t.v4 : t.v3);
            for (int r = 2; r < W; ++r) {
                put(d + r, d + r - 1, full ? 1.0 : 1.0 - w);
            }
            if (!full) {
                const auto e = offset(k + 1);
                // C above the diagonal
                put(d, e, t.v1);
                put(d, e + W - 1, 1.0 - w);
                // E below the diagonal
                put(e, d, t.f);
                put(e + 1, d, t.v2);
                for (int r = 2; r < W; ++r) {
                    put(e + r, d + r - 1, w);
                }
            }
        }
    }

    TransitionMatrix m(n, n);
    m.setFromTriplets(entries.begin(), entries.end());
    m.makeCompressed();
    return m;
}

std::vector<std::vector<StepOutcome>> step_outcomes(const ChainParams& params) {
    params.validate();
    const int B = params.buffer_size;
    const int W = params.omega_ratio;
    const double w = params.omega;
    const double pf = params.p_fso;
    const double pr = params.p_rf;
    const double none = std::max(0.0, 1.0 - pf - pr);
    const StateIndex index(B, W);

    std::vector<std::vector<StepOutcome>> out(index.size());
    for (std::size_t k = 0; k < index.size(); ++k) {
        const State s = index.state(k);
        auto& list = out[k];
        auto add = [&](State to, double prob, bool arrived, bool departed, bool lost) {
            if (prob > 0.0) {
                list.push_back({index.linear(to), prob, arrived, departed, lost});
            }
        };

        if (s.j == 0) {
            // Idle link. The head frame (or a same-step arrival into an empty
            // buffer) may leave over FSO, or start an RF transmission.
            const bool full = (s.i == B);
            const int admitted_level = full ? B : s.i + 1;
            // no arrival
            add(s, (1.0 - w) * none, false, false, false);
            if (s.i > 0) {
                add({s.i - 1, 0}, (1.0 - w) * pf, false, true, false);
                if (W == 1) {
                    add({s.i - 1, 0}, (1.0 - w) * pr, false, true, false);
                } else {
                    add({s.i, 1}, (1.0 - w) * pr, false, false, false);
                }
            } else {
                add(s, (1.0 - w) * (pf + pr), false, false, false);
            }
            // arrival
            add({admitted_level, 0}, w * none, !full, false, full);
            add(s, w * pf, true, true, false);
            if (W == 1) {
                add(s, w * pr, true, true, false);
            } else {
                // The RF frame stays in the buffer while it is on the air; at a
                // full buffer the arrival has no room.
                add({admitted_level, 1}, w * pr, !full, false, full);
            }
        } else if (s.j < W - 1) {
            add({s.i, s.j + 1}, 1.0 - w, false, false, false);
            if (s.i < B) {
                add({s.i + 1, s.j + 1}, w, true, false, false);
            } else {
                add({s.i, s.j + 1}, w, false, false, true);
            }
        } else {
            // Last RF step: the frame leaves, making room for an arrival.
            add({s.i - 1, 0}, 1.0 - w, false, true, false);
            add({s.i, 0}, w, true, true, false);
        }
    }
    return out;
}

double max_column_sum_error(const TransitionMatrix& matrix) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < matrix.outerSize(); ++c) {
        double sum = 0.0;
        for (TransitionMatrix::InnerIterator it(matrix, c); it; ++it) {
            sum += it.value();
        }
        worst = std::max(worst, std::abs(1.0 - sum));
    }
    return worst;
}

double stationarity_residual(const TransitionMatrix& matrix, const Eigen::VectorXd& s) {
    return (matrix * s - s).lpNorm<Eigen::Infinity>();
}

namespace {

Eigen::VectorXd normalized_nonnegative(Eigen::VectorXd s) {
    for (auto& v : s) {
        if (v < 0.0) {
            if (v < -1e-9) {
                throw SingularChainError("steady-state solve produced a negative probability (" +
                                         std::to_string(v) + ")");
            }
            v = 0.0;
        }
    }
    const double total = s.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw SingularChainError("steady-state vector cannot be normalized");
    }
    return s / total;
}

Eigen::VectorXd solve_dense(const TransitionMatrix& matrix) {
    const auto n = matrix.rows();
    Eigen::MatrixXd system = Eigen::MatrixXd(matrix) - Eigen::MatrixXd::Identity(n, n);
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    if (!(lu.rcond() > 1e-14)) {
        throw SingularChainError("balance equations are singular; the stationary distribution is not unique");
    }
    return lu.solve(rhs);
}

Eigen::VectorXd solve_power(const TransitionMatrix& matrix, const SolverOptions& options) {
    const auto n = matrix.rows();
    Eigen::VectorXd s = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    for (std::uint64_t it = 0; it < options.power_max_iterations; ++it) {
        // Lazy step: same fixed point, immune to periodicity.
        Eigen::VectorXd next = 0.5 * (s + matrix * s);
        next /= next.sum();
        const double delta = (next - s).lpNorm<Eigen::Infinity>();
        s.swap(next);
        if (delta <= options.power_tolerance) {
            return s;
        }
    }
    throw ConvergenceError("power iteration did not converge within " +
                           std::to_string(options.power_max_iterations) + " iterations");
}

}  // namespace

Eigen::VectorXd steady_state(const TransitionMatrix& matrix, const SolverOptions& options) {
    require(matrix.rows() == matrix.cols() && matrix.rows() > 0, "transition matrix must be square");
    require(max_column_sum_error(matrix) <= 1e-9, "transition matrix is not column-stochastic");

    const auto n = matrix.rows();
    if (matrix.coeff(0, 0) == 1.0) {
        // Empty buffer is absorbing (no arrivals, or every arrival leaves at once).
        Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
        s(0) = 1.0;
        return s;
    }

    Eigen::VectorXd s = static_cast<std::size_t>(n) <= options.dense_limit ? solve_dense(matrix)
                                                                           : solve_power(matrix, options);
    if (!s.allFinite()) {
        throw SingularChainError("steady-state solve produced non-finite values");
    }
    s = normalized_nonnegative(std::move(s));
    const double residual = stationarity_residual(matrix, s);
    if (!(residual <= 1e-9)) {
        throw NumericError("steady-state residual too large: " + std::to_string(residual));
    }
    return s;
}

ChainSolution solve_chain(const ChainParams& params, const SolverOptions& options) {
    ChainSolution out;
    out.params = params;
    out.matrix = build_matrix(params);
    out.steady = steady_state(out.matrix, options);
    return out;
}

double ChainSolution::at(int i, int j) const {
    const StateIndex index(params.buffer_size, params.omega_ratio);
    return steady(static_cast<Eigen::Index>(index.linear({i, j})));
}

double ChainSolution::idle_backlog_mass() const {
    double sum = 0.0;
    for (int i = 1; i <= params.buffer_size; ++i) {
        sum += at(i, 0);
    }
    return sum;
}

double ChainSolution::rf_in_progress_mass() const {
    double sum = 0.0;
    for (int i = 1; i <= params.buffer_size; ++i) {
        for (int j = 1; j < params.omega_ratio; ++j) {
            sum += at(i, j);
        }
    }
    return sum;
}

double ChainSolution::mean_occupancy() const {
    double sum = 0.0;
    for (int i = 1; i <= params.buffer_size; ++i) {
        for (int j = 0; j < params.omega_ratio; ++j) {
            sum += i * at(i, j);
        }
    }
    return sum;
}

}  // namespace fsorf::markov
