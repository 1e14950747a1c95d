#include "sisalloc/experiment.hpp"

#include <cmath>
#include <limits>

#include "sisalloc/errors.hpp"
#include "sisalloc/spectral.hpp"

namespace sisalloc {

namespace {

constexpr double kMonteCarloSigmas = 3.0;

} // namespace

DirectedGraph make_graph(const ExperimentConfig& cfg)
{
    cfg.validate();
    if (cfg.graph_source == GraphSource::File)
        return load_edge_list(cfg.graph_file);
    return random_strongly_connected(cfg.n, cfg.edge_prob, cfg.graph_seed,
                                     WeightRange{cfg.weight_lo, cfg.weight_hi});
}

RateBounds make_bounds(const ExperimentConfig& cfg, const DirectedGraph& g)
{
    NodeBounds b{cfg.beta_lo, cfg.beta_hi, cfg.delta_lo, cfg.delta_hi};
    if (cfg.bounds_mode == BoundsMode::Recipe) {
        const double tau_c = cfg.tau_numerator / spectral_radius(g.weights());
        b.beta_hi = cfg.beta_hi_mult * tau_c;
        b.beta_lo = cfg.beta_lo_frac * b.beta_hi;
    }
    b.validate();
    return RateBounds::shared(g.size(), b);
}

AllocationProblem make_problem(const ExperimentConfig& cfg, const DirectedGraph& g)
{
    AllocationProblem p{g, CostModel{cfg.cost, make_bounds(cfg, g)}, cfg.eps_bar};
    p.validate();
    return p;
}

DadmmOptions make_dadmm_options(const ExperimentConfig& cfg)
{
    DadmmOptions o;
    o.rho = cfg.rho;
    o.eta = cfg.eta;
    o.max_iter = cfg.max_iter;
    o.penalty = cfg.penalty;
    o.random_init = cfg.random_init;
    o.seed = cfg.dadmm_seed;
    o.threads = cfg.threads;
    return o;
}

VerifyOutcome verify_allocation(const AllocationProblem& prob, const Allocation& a,
                                const ExperimentConfig& cfg, bool monte_carlo)
{
    const int n = prob.size();
    if (a.beta.size() != n || a.delta.size() != n)
        throw DomainError("allocation has " + std::to_string(a.beta.size())
                          + " nodes, graph has " + std::to_string(n));
    const EpidemicParams params{a.beta, a.delta};
    const Vector p0 = Vector::Constant(n, cfg.p0);

    VerifyOutcome out;
    IntegrateOptions io;
    io.horizon = cfg.horizon;
    io.dt = cfg.dt;
    out.mean_field = integrate(p0, prob.graph, params, io);
    out.decay = verify_decay(out.mean_field, prob.eps_bar);
    out.mc_max_excess = -std::numeric_limits<double>::infinity();
    if (!monte_carlo)
        return out;

    MarkovOptions mo;
    mo.horizon = cfg.mc_horizon;
    mo.dt = cfg.mc_dt;
    mo.trials = cfg.mc_trials;
    mo.seed = cfg.mc_seed;
    mo.threads = cfg.threads;
    out.monte_carlo = simulate_markov(prob.graph, params, p0, mo);

    IntegrateOptions grid;
    grid.horizon = cfg.mc_horizon;
    grid.dt = cfg.mc_dt;
    const Trajectory ref = integrate(p0, prob.graph, params, grid);
    const auto& mc = *out.monte_carlo;
    if (ref.size() != mc.mean.size())
        throw Error("verify: Monte Carlo and mean-field grids differ");
    for (std::size_t k = 0; k < ref.size(); ++k) {
        for (int i = 0; i < n; ++i) {
            const double diff = mc.mean.states[k](i) - ref.states[k](i);
            const double se = mc.std_error[k](i);
            if (se > 0.0) {
                out.mc_max_excess = std::max(out.mc_max_excess, diff / se);
                if (diff > kMonteCarloSigmas * se)
                    out.mc_pass = false;
            } else if (diff > 1e-12) {
                out.mc_max_excess = std::numeric_limits<double>::infinity();
                out.mc_pass = false;
            }
        }
    }
    return out;
}

} // namespace sisalloc
