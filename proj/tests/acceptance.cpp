// Acceptance checks. Prints one "PASS <id>: ..." or "FAIL <id>: ..." line per
// criterion; per-instance diagnostics go to stderr. Exit status is nonzero
// when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "sisalloc/centralized.hpp"
#include "sisalloc/config.hpp"
#include "sisalloc/costs.hpp"
#include "sisalloc/dadmm.hpp"
#include "sisalloc/errors.hpp"
#include "sisalloc/experiment.hpp"
#include "sisalloc/spectral.hpp"

using namespace sisalloc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, ...)
{
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// Instances of the experiment protocol: p = 0.32, unit weights, recipe bounds.
ExperimentConfig protocol_config(int n, std::uint64_t seed)
{
    ExperimentConfig cfg;
    cfg.n = n;
    cfg.graph_seed = seed;
    return cfg;
}

AllocationProblem protocol_problem(const ExperimentConfig& cfg)
{
    return make_problem(cfg, make_graph(cfg));
}

// ---------------------------------------------------------------------------

Outcome spectral_oracle()
{
    const auto t0 = Clock::now();
    double worst_perron = 0.0, worst_abscissa = 0.0;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const int n = 3 + k % 18;
        const auto g = random_strongly_connected(n, 0.32, 1000 + k, WeightRange{0.5, 1.5});
        const double rho = perron(g.weights()).value;
        const double ref = oracle::max_modulus_eigenvalue(g.weights());
        worst_perron = std::max(worst_perron, std::abs(rho - ref));

        Vector beta(n), delta(n);
        for (int i = 0; i < n; ++i) {
            beta(i) = 0.05 + 0.5 * u(rng);
            delta(i) = 0.05 + 0.9 * u(rng);
        }
        const double got = spectral_abscissa(g, beta, delta);
        const double want = oracle::abscissa(g.weights(), beta, delta);
        worst_abscissa = std::max(worst_abscissa, std::abs(got - want));
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = worst_perron <= 1e-8 && worst_abscissa <= 1e-8 && secs < 10.0;
    o.detail = fmt("200 graphs n=3..20, max |perron - eig| = %.2e, max |abscissa - eig| = %.2e "
                   "(tol 1e-8), %.2f s (limit 10 s)",
                   worst_perron, worst_abscissa, secs);
    return o;
}

Outcome gp_small_oracle()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int done = 0;
    while (done < 20) {
        oracle::TwoNode t;
        t.a12 = 0.5 + u(rng);
        t.a21 = 0.5 + u(rng);
        t.beta_lo = 0.05 + 0.1 * u(rng);
        t.beta_hi = t.beta_lo + 0.2 + 0.2 * u(rng);
        t.delta_lo = 0.1 + 0.15 * u(rng);
        t.delta_hi = 0.6 + 0.25 * u(rng);
        t.eps_bar = 0.05 + 0.1 * u(rng);
        // the most stable corner must meet the target, or the instance is infeasible
        const double slack = t.delta_hi - t.eps_bar;
        if (slack * slack < t.beta_lo * t.beta_lo * t.a12 * t.a21)
            continue;
        DirectedGraph g(2);
        g.set_edge(1, 0, t.a12);
        g.set_edge(0, 1, t.a21);
        const AllocationProblem prob{
            g,
            CostModel{CostKind::NormalizedQuasiconvex,
                      RateBounds::shared(2, {t.beta_lo, t.beta_hi, t.delta_lo, t.delta_hi})},
            t.eps_bar};
        const double got = solve_centralized(prob).total_cost;
        const double want = oracle::two_node_grid_min(t, 1e-3);
        std::cerr << fmt("  gp_small %2d: solver %.6f grid %.6f\n", done, got, want);
        worst = std::max(worst, std::abs(got - want));
        ++done;
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = worst <= 5e-3 && secs < 120.0;
    o.detail = fmt("20 two-node instances, max |solver - grid(1e-3)| = %.2e (tol 5e-3), "
                   "%.1f s (limit 120 s)",
                   worst, secs);
    return o;
}

Outcome feasibility()
{
    int ok = 0, total = 0, unconverged = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const int n = seed % 2 == 0 ? 8 : 6;
        const auto cfg = protocol_config(n, 500 + seed);
        const auto prob = protocol_problem(cfg);
        const double target = -prob.eps_bar + 1e-4;

        const Allocation c = solve_centralized(prob);
        const double ca = spectral_abscissa(prob.graph, c.beta, c.delta);
        ++total;
        ok += ca <= target;
        worst = std::max(worst, ca + prob.eps_bar);

        const DadmmResult d = run_dadmm(prob, make_dadmm_options(cfg));
        if (!d.trace.converged) {
            ++unconverged;
            std::cerr << fmt("  feasibility seed %llu: dadmm did not converge\n",
                             static_cast<unsigned long long>(seed));
            continue;
        }
        const double da = spectral_abscissa(prob.graph, d.allocation.beta, d.allocation.delta);
        ++total;
        ok += da <= target;
        worst = std::max(worst, da + prob.eps_bar);
        std::cerr << fmt("  feasibility seed %llu n=%d: central %.6f dadmm %.6f (eps %.3f)\n",
                         static_cast<unsigned long long>(seed), n, ca, da, prob.eps_bar);
    }
    Outcome o;
    o.pass = ok == total;
    o.detail = fmt("50 instances, %d/%d successful solves (central + converged dadmm) with "
                   "abscissa <= -eps + 1e-4; worst abscissa + eps = %.2e; %d dadmm runs did not "
                   "converge",
                   ok, total, worst, unconverged);
    return o;
}

struct DadmmRun {
    int n = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    int rounds = 0;
    double residual = 0.0;
    double rel_gap = 0.0;
    double dual_step = 0.0;
    double seconds = 0.0;
};

std::vector<DadmmRun> dadmm_protocol_runs()
{
    std::vector<DadmmRun> runs;
    for (int n : {8, 20}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto cfg = protocol_config(n, seed);
            const auto prob = protocol_problem(cfg);
            const double central = solve_centralized(prob).total_cost;
            auto opts = make_dadmm_options(cfg);
            opts.reference_cost = central;
            const auto t0 = Clock::now();
            const DadmmResult d = run_dadmm(prob, opts);
            DadmmRun r;
            r.n = n;
            r.seed = seed;
            r.seconds = seconds_since(t0);
            r.converged = d.trace.converged;
            r.rounds = static_cast<int>(d.trace.records.size());
            r.residual = d.trace.records.back().consensus_residual;
            r.rel_gap = std::abs(d.allocation.total_cost - central) / central;
            r.dual_step = d.trace.records.back().max_dual_step;
            std::cerr << fmt("  dadmm n=%d seed=%llu: rounds %d residual %.3e rel gap %.3e "
                             "dual step %.3e %.1f s\n",
                             n, static_cast<unsigned long long>(seed), r.rounds, r.residual,
                             r.rel_gap, r.dual_step, r.seconds);
            runs.push_back(r);
        }
    }
    return runs;
}

const std::vector<DadmmRun>& cached_runs()
{
    static const std::vector<DadmmRun> runs = dadmm_protocol_runs();
    return runs;
}

Outcome dadmm_vs_central()
{
    const auto& runs = cached_runs();
    int ok = 0;
    std::map<int, int> ok_by_n;
    double worst_gap = 0.0, worst_res = 0.0, slowest = 0.0;
    for (const auto& r : runs) {
        const bool pass = r.converged && r.rounds <= 2000 && r.residual <= 1e-4
                       && r.rel_gap <= 0.01 && r.seconds < 600.0;
        ok += pass;
        ok_by_n[r.n] += pass;
        worst_gap = std::max(worst_gap, r.rel_gap);
        worst_res = std::max(worst_res, r.residual);
        slowest = std::max(slowest, r.seconds);
    }
    Outcome o;
    o.pass = ok == static_cast<int>(runs.size());
    o.detail = fmt("%d/%zu instances pass (n=8: %d/10, n=20: %d/10); rho=4, eta=1e-4, "
                   "max_iter=2000; worst residual %.2e, worst rel gap %.2e (tol 1e-2), "
                   "slowest %.1f s (limit 600 s)",
                   ok, runs.size(), ok_by_n[8], ok_by_n[20], worst_res, worst_gap, slowest);
    return o;
}

Outcome dual_convergence()
{
    const auto& runs = cached_runs();
    int ok = 0;
    double worst = 0.0;
    for (const auto& r : runs) {
        ok += r.dual_step <= 1e-3;
        worst = std::max(worst, r.dual_step);
    }
    Outcome o;
    o.pass = ok == static_cast<int>(runs.size());
    o.detail = fmt("%d/%zu runs with max_i ||phi_i(k+1) - phi_i(k)|| <= 1e-3 at termination; "
                   "worst %.2e",
                   ok, runs.size(), worst);
    return o;
}

Outcome decay_verification()
{
    int ok = 0, total = 0, mc_ok = 0, mc_total = 0;
    double worst_ratio = std::numeric_limits<double>::infinity();
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (int n : {8, 20}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto cfg = protocol_config(n, seed);
            const auto prob = protocol_problem(cfg);
            const Allocation a = solve_centralized(prob);
            const bool mc = n == 8;
            const VerifyOutcome v = verify_allocation(prob, a, cfg, mc);
            const double ratio = v.decay.achieved_rate / prob.eps_bar;
            ++total;
            ok += ratio >= 0.95;
            worst_ratio = std::min(worst_ratio, ratio);
            if (mc) {
                ++mc_total;
                mc_ok += v.mc_pass;
                worst_excess = std::max(worst_excess, v.mc_max_excess);
            }
            std::cerr << fmt("  decay n=%d seed=%llu: rate/eps %.4f%s\n", n,
                             static_cast<unsigned long long>(seed), ratio,
                             mc ? fmt(", mc max excess %.2f se", v.mc_max_excess).c_str() : "");
        }
    }
    Outcome o;
    o.pass = ok == total && mc_ok == mc_total;
    o.detail = fmt("mean-field from p0=0.1: %d/%d with rate >= 0.95 eps (worst ratio %.4f); "
                   "Monte Carlo (200 trials, n=8): %d/%d within mean-field + 3 se "
                   "(worst excess %.2f se)",
                   ok, total, worst_ratio, mc_ok, mc_total, worst_excess);
    return o;
}

Outcome cost_endpoints()
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        NodeCost c;
        c.bounds.beta_lo = 0.01 + u(rng);
        c.bounds.beta_hi = c.bounds.beta_lo + 0.01 + u(rng);
        c.bounds.delta_lo = 0.01 + 0.5 * u(rng);
        c.bounds.delta_hi = c.bounds.delta_lo + 0.01 + 0.45 * u(rng);
        worst = std::max({worst, std::abs(vaccine_cost(c, c.bounds.beta_hi)),
                          std::abs(vaccine_cost(c, c.bounds.beta_lo) - 1.0),
                          std::abs(antidote_cost(c, c.bounds.delta_hi) - 1.0),
                          std::abs(antidote_cost(c, c.bounds.delta_lo))});
    }
    Outcome o;
    o.pass = worst <= 1e-12;
    o.detail = fmt("100 random boxes, max endpoint error %.1e (tol 1e-12)", worst);
    return o;
}

Outcome corner_protocol()
{
    // literal reading: (beta_hi, delta_lo), (beta_hi, delta_hi) and
    // (beta_lo, delta_hi) all have positive abscissa while the optimum is feasible
    int literal = 0, alt = 0, total = 0;
    for (int n : {8, 20}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto prob = protocol_problem(protocol_config(n, seed));
            const auto corners = feasibility_report(prob);
            const Allocation a = solve_centralized(prob);
            const bool optimum_ok = a.abscissa <= -prob.eps_bar + 1e-4;
            // order: (lo,lo), (hi,hi), (lo,hi), (hi,lo)
            const bool hi_lo = corners[3].abscissa > 0.0;
            const bool hi_hi = corners[1].abscissa > 0.0;
            const bool lo_hi = corners[2].abscissa > 0.0;
            const bool lo_lo = corners[0].abscissa > 0.0;
            ++total;
            literal += optimum_ok && hi_lo && hi_hi && lo_hi;
            alt += optimum_ok && hi_lo && hi_hi && lo_lo;
            std::cerr << fmt("  corners n=%d seed=%llu: lo,lo %+.4f hi,hi %+.4f lo,hi %+.4f "
                             "hi,lo %+.4f optimum %+.4f\n",
                             n, static_cast<unsigned long long>(seed), corners[0].abscissa,
                             corners[1].abscissa, corners[2].abscissa, corners[3].abscissa,
                             a.abscissa);
        }
    }
    Outcome o;
    o.pass = literal == total;
    o.detail = fmt("%d/%d instances with positive abscissa at (beta_hi,delta_lo), "
                   "(beta_hi,delta_hi), (beta_lo,delta_hi) and a feasible optimum; "
                   "(beta_lo,delta_hi) is the most stable point of the box, so a positive "
                   "value there makes the problem infeasible. With (beta_lo,delta_lo) in its "
                   "place: %d/%d",
                   literal, total, alt, total);
    return o;
}

Outcome dual_invariants()
{
    int rounds = 0;
    double worst_cons = 0.0, worst_equiv = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto cfg = protocol_config(8, seed);
        const auto prob = protocol_problem(cfg);
        const int n = prob.size();
        std::vector<AgentContext> ctx;
        for (int i = 0; i < n; ++i)
            ctx.push_back(make_agent_context(prob, i));
        auto agents = init_agents(prob, seed, true);
        auto duals = EdgeDuals::zeros(agents, n);
        for (int k = 0; k < 20; ++k) {
            std::vector<Vector> shared;
            for (const auto& a : agents)
                shared.push_back(shared_value(a, PenaltyDomain::Log));
            Vector before = Vector::Zero(n);
            for (const auto& a : agents)
                before += a.phi;
            dual_update(agents, shared, cfg.rho);
            duals.update(shared, agents, cfg.rho);
            Vector after = Vector::Zero(n);
            for (const auto& a : agents) {
                after += a.phi;
                worst_equiv = std::max(worst_equiv,
                                       (duals.phi(a) - a.phi).lpNorm<Eigen::Infinity>());
            }
            worst_cons = std::max(worst_cons, (after - before).lpNorm<Eigen::Infinity>());
            ++rounds;

            std::vector<AgentState> next;
            for (const auto& a : agents) {
                std::map<int, Vector> inbox;
                for (int j : a.neighbors)
                    inbox[j] = shared[static_cast<std::size_t>(j)];
                next.push_back(local_step(ctx[static_cast<std::size_t>(a.id)], a, inbox,
                                          cfg.rho, PenaltyDomain::Log));
            }
            agents = std::move(next);
        }
    }
    Outcome o;
    o.pass = worst_cons <= 1e-12 && worst_equiv <= 1e-12;
    o.detail = fmt("%d D-ADMM rounds on 5 instances: max |sum_i dphi_i| = %.1e, "
                   "max |phi - sum(alpha + gamma)| = %.1e (tol 1e-12)",
                   rounds, worst_cons, worst_equiv);
    return o;
}

Outcome gradient_suite()
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int points = 0, functions = 0;

    const auto check = [&](const std::function<double(const Vector&)>& f, const Vector& grad,
                           const Vector& y) {
        worst = std::max(worst, oracle::relative_error(grad, oracle::fd_gradient(f, y)));
        ++functions;
    };

    const auto prob = protocol_problem(protocol_config(8, 3));
    const GpBuild gb = build_gp(prob);
    const int n = prob.size();
    const Vector& lo = gb.program.lower;
    const Vector& hi = gb.program.upper;

    for (int k = 0; k < 100; ++k) {
        // random point strictly inside the box, u product-normalised
        Vector y(3 * n);
        for (int i = 0; i < 3 * n; ++i) {
            const double a = std::isfinite(lo(i)) ? lo(i) : -1.0;
            const double b = std::isfinite(hi(i)) ? hi(i) : 1.0;
            y(i) = a + (0.05 + 0.9 * u(rng)) * (b - a);
        }
        y.head(n).array() -= y.head(n).mean();
        ++points;

        Vector g;
        gb.program.objective(y, &g, nullptr);
        check([&](const Vector& z) { return gb.program.objective(z, nullptr, nullptr); }, g, y);
        for (const auto& c : gb.program.inequalities) {
            c.evaluate(y, g, nullptr);
            check([&](const Vector& z) { return c.value(z); }, g, y);
        }

        // per-node cost pieces in (y_beta, y_dtilde) and (y_beta, y_delta)
        for (CostKind kind : {CostKind::NormalizedQuasiconvex, CostKind::ReciprocalMonomial}) {
            const NodeCost nc{kind, prob.bounds()[k % n]};
            const Vector yb{{y(gb.beta_index(k % n)), y(gb.dtilde_index(k % n))}};
            const auto sc = substituted_cost(nc, gb.delta_tilde_shift, yb(0), yb(1));
            check([&](const Vector& z) {
                      return substituted_cost(nc, gb.delta_tilde_shift, z(0), z(1)).value;
                  },
                  Vector(sc.gradient), yb);
            const Vector yd{{yb(0), std::log(nc.bounds.delta_lo
                                             + u(rng) * (nc.bounds.delta_hi - nc.bounds.delta_lo))}};
            const auto lc = log_domain_cost(nc, yd(0), yd(1));
            check([&](const Vector& z) { return log_domain_cost(nc, z(0), z(1)).value; },
                  Vector(lc.gradient), yd);
        }

        // agent spectral rows
        const AgentContext ctx = make_agent_context(prob, k % n);
        Vector ya(n + 2);
        ya.head(n) = y.head(n);
        ya(n) = y(gb.beta_index(k % n));
        ya(n + 1) = y(gb.dtilde_index(k % n));
        ctx.spectral.evaluate(ya, g, nullptr);
        check([&](const Vector& z) { return ctx.spectral.value(z); }, g, ya);
    }
    Outcome o;
    o.pass = worst <= 1e-6;
    o.detail = fmt("%d gradients at %d random interior points, max relative FD error %.2e "
                   "(tol 1e-6)",
                   functions, points, worst);
    return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& registry()
{
    static const std::vector<std::pair<std::string, std::function<Outcome()>>> r{
        {"spectral_oracle", spectral_oracle},
        {"gp_small_oracle", gp_small_oracle},
        {"feasibility", feasibility},
        {"dadmm_vs_central", dadmm_vs_central},
        {"dual_convergence", dual_convergence},
        {"decay_verification", decay_verification},
        {"cost_endpoints", cost_endpoints},
        {"corner_protocol", corner_protocol},
        {"dual_invariants", dual_invariants},
        {"gradient_suite", gradient_suite},
    };
    return r;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    std::vector<std::string> only;
    bool list = false;
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    app.add_flag("--list", list, "print the criterion ids");
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& [id, fn] : registry())
            std::cout << id << '\n';
        return 0;
    }
    for (const auto& id : only) {
        const auto& r = registry();
        if (std::none_of(r.begin(), r.end(), [&](const auto& e) { return e.first == id; })) {
            std::cerr << "unknown criterion '" << id << "'\n";
            return 2;
        }
    }

    int failures = 0;
    for (const auto& [id, fn] : registry()) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
            continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << id << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
