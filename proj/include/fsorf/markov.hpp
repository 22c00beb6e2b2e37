#pragma once

// Per-node transmit-buffer chain. State (i, j): i frames in the buffer,
// j steps already spent on an RF transmission in progress (j = 0: none).
// One frame leaves in one step over FSO or in Omega steps over RF.
//
// Matrices are column-stochastic: entry (to, from) is the one-step
// probability of moving from state `from` to state `to`.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace fsorf::markov {

struct ChainParams {
    double omega = 0.0;   ///< per-step frame arrival probability
    double p_fso = 0.0;   ///< P[head frame leaves over FSO], 1 - a
    double p_rf = 0.0;    ///< P[head frame starts an RF transmission]
    int buffer_size = 1;  ///< B
    int omega_ratio = 1;  ///< R_FSO / R_RF, RF frame duration in steps

    void validate() const;
    std::size_t state_count() const { return static_cast<std::size_t>(omega_ratio) * buffer_size + 1; }
};

struct TransitionProbs {
    double u0, f, u, uB, v1, v2, v3, v4;
};

TransitionProbs transition_probs(const ChainParams& params);

struct State {
    int i = 0;
    int j = 0;

    friend bool operator==(const State&, const State&) = default;
};

/// Bijection between (i, j) and the linear position inside the steady-state
/// vector: (0,0) -> 0, otherwise (i-1)*Omega + j + 1.
class StateIndex {
  public:
    StateIndex(int buffer_size, int omega_ratio);

    std::size_t linear(State s) const;
    State state(std::size_t linear) const;
    std::size_t size() const { return size_; }

  private:
    int buffer_size_;
    int omega_ratio_;
    std::size_t size_;
};

using TransitionMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Assemble the block-tridiagonal transition matrix from the arrival/service
/// probabilities. For Omega = 1 an RF transmission completes in the step it
/// starts, so RF service folds into the departure entries.
TransitionMatrix build_matrix(const ChainParams& params);

/// One elementary outcome of a step: where the chain goes and which frame
/// events produced it. The outcomes leaving a state partition its column of
/// the transition matrix.
struct StepOutcome {
    std::size_t target = 0;
    double prob = 0.0;
    bool arrived = false;    ///< a frame arrived and was admitted
    bool departed = false;   ///< a frame finished transmission
    bool lost = false;       ///< a frame arrived at a full buffer and was dropped
};

/// Event-level description of the chain, built from the queue dynamics
/// rather than from the block layout. `outcomes[k]` lists the outcomes of
/// leaving linear state k; zero-probability outcomes are omitted.
std::vector<std::vector<StepOutcome>> step_outcomes(const ChainParams& params);

struct SolverOptions {
    std::size_t dense_limit = 2000;        ///< direct solve up to this many states
    double power_tolerance = 1e-12;
    std::uint64_t power_max_iterations = 1'000'000;
};

/// Stationary vector of a column-stochastic matrix. Throws SingularChainError
/// when the stationary distribution is not unique and ConvergenceError when
/// power iteration stalls.
Eigen::VectorXd steady_state(const TransitionMatrix& matrix, const SolverOptions& options = {});

struct ChainSolution {
    ChainParams params;
    TransitionMatrix matrix;
    Eigen::VectorXd steady;

    double at(int i, int j) const;
    /// Sum of s(i, 0) for i = 1..B.
    double idle_backlog_mass() const;
    /// Sum of s(i, j) for i = 1..B, j = 1..Omega-1 (RF transmission in progress).
    double rf_in_progress_mass() const;
    /// Mean number of frames in the buffer.
    double mean_occupancy() const;
};

ChainSolution solve_chain(const ChainParams& params, const SolverOptions& options = {});

/// max_k |1 - sum of column k|
double max_column_sum_error(const TransitionMatrix& matrix);

/// ||P s - s||_inf
double stationarity_residual(const TransitionMatrix& matrix, const Eigen::VectorXd& s);

}  // namespace fsorf::markov
