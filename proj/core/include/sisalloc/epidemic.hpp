#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sisalloc/graph.hpp"

namespace sisalloc {

/// Per-node SIS rates (1/time). beta >= 0, delta > 0.
struct EpidemicParams {
    Vector beta;
    Vector delta;

    void validate(int n) const;
};

/// Sampled infection probabilities p(t) in [0, 1]^n.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;

    std::size_t size() const { return times.size(); }
};

/// Monte Carlo estimate: trial mean plus per-entry standard error.
struct MonteCarloTrajectory {
    Trajectory mean;
    std::vector<Vector> std_error;
    int trials = 0;
};

/// dp_i/dt = (1 - p_i) beta_i sum_j a_ij p_j - delta_i p_i
Vector mean_field_rhs(const Vector& p, const DirectedGraph& g, const EpidemicParams& params);

struct IntegrateOptions {
    double horizon = 50.0;
    double dt = 1e-2;
    int record_every = 1;
    double max_clamp = 1e-9;
};

/// Fixed-step RK4; states are clamped to [0, 1] after each step and a
/// StepSizeError is thrown if any single correction exceeds max_clamp.
Trajectory integrate(const Vector& p0, const DirectedGraph& g, const EpidemicParams& params,
                     const IntegrateOptions& opts = {});

/// Largest clamp correction applied by the last integrate() call on this
/// thread; reset at the start of every call.
double last_integrate_clamp();

struct MarkovOptions {
    double horizon = 20.0;
    double dt = 1e-2;
    int trials = 200;
    std::uint64_t seed = 0;
    int record_every = 1;
    int threads = 1;
};

/// Discrete-time Monte Carlo of the networked SIS chain using the
/// per-step probabilities
///   S -> I : beta_i * sum_j a_ij X_j * dt
///   I -> S : delta_i * dt
/// Trial k draws from its own stream seeded by (seed, k), and counts are
/// accumulated as integers, so the result does not depend on `threads`.
/// Throws StepSizeError if a per-step probability can reach 1.
MonteCarloTrajectory simulate_markov(const DirectedGraph& g, const EpidemicParams& params,
                                     const std::vector<int>& x0, const MarkovOptions& opts);

/// Variant whose trials start from independent Bernoulli(p0_i) states.
MonteCarloTrajectory simulate_markov(const DirectedGraph& g, const EpidemicParams& params,
                                     const Vector& p0, const MarkovOptions& opts);

struct DecayReport {
    double achieved_rate = 0.0;  ///< +inf when ||p|| reaches zero
    bool pass = false;
    int samples = 0;
};

/// Least-squares slope of log ||p(t)||_2 over the window [t0 + 0.2 (T - t0), T].
/// Passes iff achieved_rate >= eps_bar - rate_tol; rate_tol < 0 selects the
/// default 0.05 * eps_bar. Throws DomainError with fewer than 10 samples
/// in the window.
DecayReport verify_decay(const Trajectory& traj, double eps_bar, double rate_tol = -1.0);

/// CSV with header t,p_1,...,p_n.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// CSV with header t,p_1,...,p_n,se_1,...,se_n.
void write_trajectory_csv(std::ostream& os, const MonteCarloTrajectory& traj);

} // namespace sisalloc
