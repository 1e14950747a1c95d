#pragma once

#include <optional>

#include "sisalloc/centralized.hpp"
#include "sisalloc/config.hpp"
#include "sisalloc/dadmm.hpp"
#include "sisalloc/epidemic.hpp"

namespace sisalloc {

/// Generates (random source) or loads (file source) the contact graph.
DirectedGraph make_graph(const ExperimentConfig& cfg);

/// Shared per-node bounds: the explicit values, or the recipe
/// tau_c = tau_numerator / rho(A), beta_hi = beta_hi_mult * tau_c,
/// beta_lo = beta_lo_frac * beta_hi with the configured delta bounds.
RateBounds make_bounds(const ExperimentConfig& cfg, const DirectedGraph& g);

AllocationProblem make_problem(const ExperimentConfig& cfg, const DirectedGraph& g);

DadmmOptions make_dadmm_options(const ExperimentConfig& cfg);

struct VerifyOutcome {
    Trajectory mean_field;
    DecayReport decay;
    std::optional<MonteCarloTrajectory> monte_carlo;
    /// max over samples and nodes of (mc - mean_field) / se; -inf without MC
    double mc_max_excess = 0.0;
    bool mc_pass = true;  ///< mc <= mean_field + 3 se everywhere
};

/// Integrates the mean-field ODE from p0 * ones and fits the decay rate;
/// with `monte_carlo` also runs the Markov chain from Bernoulli(p0) starts
/// and compares it with the mean-field curve on the same time grid.
VerifyOutcome verify_allocation(const AllocationProblem& prob, const Allocation& a,
                                const ExperimentConfig& cfg, bool monte_carlo);

} // namespace sisalloc
