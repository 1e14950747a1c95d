#include "sisalloc/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "sisalloc/errors.hpp"
#include "sisalloc/io.hpp"

namespace sisalloc {

namespace {

thread_local double g_last_clamp = 0.0;

double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::mt19937_64 trial_stream(std::uint64_t seed, int trial, std::uint32_t purpose)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), purpose};
    return std::mt19937_64(seq);
}

int step_count(double horizon, double dt)
{
    if (!(dt > 0.0) || !(horizon > 0.0))
        throw DomainError("horizon and dt must be positive");
    return static_cast<int>(std::llround(horizon / dt));
}

void check_probabilities(const Vector& p)
{
    if ((p.array() < 0.0).any() || (p.array() > 1.0).any())
        throw DomainError("infection probabilities must lie in [0, 1]");
}

// Initial state generator: either a fixed binary vector or Bernoulli draws.
template <class InitFn>
MonteCarloTrajectory run_markov(const DirectedGraph& g, const EpidemicParams& params,
                                const MarkovOptions& opts, InitFn init)
{
    const int n = g.size();
    params.validate(n);
    if (opts.trials < 1)
        throw DomainError("simulate_markov: need at least one trial");
    if (opts.record_every < 1)
        throw DomainError("simulate_markov: record_every must be >= 1");
    const int steps = step_count(opts.horizon, opts.dt);

    // worst case: every in-neighbour infected
    const Vector max_pressure = g.weights().rowwise().sum();
    for (int i = 0; i < n; ++i) {
        if (params.beta(i) * max_pressure(i) * opts.dt >= 1.0 || params.delta(i) * opts.dt >= 1.0)
            throw StepSizeError("simulate_markov: per-step transition probability reaches 1; "
                                "reduce dt");
    }

    const int samples = steps / opts.record_every + 1;
    using Counts = std::vector<std::vector<long long>>;

    auto run_range = [&](int first, int last, Counts& counts) {
        counts.assign(samples, std::vector<long long>(n, 0));
        std::vector<char> x(n), next(n);
        Vector infected(n);
        for (int trial = first; trial < last; ++trial) {
            auto rng = trial_stream(opts.seed, trial, 0x51u);
            init(rng, x);
            for (int s = 0; s <= steps; ++s) {
                if (s % opts.record_every == 0) {
                    auto& row = counts[s / opts.record_every];
                    for (int i = 0; i < n; ++i)
                        row[i] += x[i];
                }
                if (s == steps)
                    break;
                for (int i = 0; i < n; ++i)
                    infected(i) = x[i];
                const Vector pressure = g.weights() * infected;
                for (int i = 0; i < n; ++i) {
                    const double u = unit_uniform(rng);
                    if (x[i])
                        next[i] = u < params.delta(i) * opts.dt ? 0 : 1;
                    else
                        next[i] = u < params.beta(i) * pressure(i) * opts.dt ? 1 : 0;
                }
                x.swap(next);
            }
        }
    };

    const int threads = std::max(1, std::min(opts.threads, opts.trials));
    std::vector<Counts> partial(threads);
    if (threads == 1) {
        run_range(0, opts.trials, partial[0]);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) {
            const int first = opts.trials * t / threads;
            const int last = opts.trials * (t + 1) / threads;
            pool.emplace_back([&, t, first, last] { run_range(first, last, partial[t]); });
        }
    }

    MonteCarloTrajectory out;
    out.trials = opts.trials;
    const double trials = opts.trials;
    for (int k = 0; k < samples; ++k) {
        Vector mean(n), se(n);
        for (int i = 0; i < n; ++i) {
            long long c = 0;
            for (const auto& part : partial)
                c += part[k][i];
            const double m = c / trials;
            mean(i) = m;
            // sample standard deviation of a 0/1 variable
            se(i) = opts.trials > 1
                        ? std::sqrt(m * (1.0 - m) * trials / (trials - 1.0) / trials)
                        : 0.0;
        }
        out.mean.times.push_back(static_cast<double>(k) * opts.record_every * opts.dt);
        out.mean.states.push_back(std::move(mean));
        out.std_error.push_back(std::move(se));
    }
    return out;
}

} // namespace

void EpidemicParams::validate(int n) const
{
    if (beta.size() != n || delta.size() != n)
        throw DomainError("rate vectors must match the graph size");
    if ((beta.array() < 0.0).any())
        throw DomainError("beta must be nonnegative");
    if ((delta.array() <= 0.0).any())
        throw DomainError("delta must be positive");
}

Vector mean_field_rhs(const Vector& p, const DirectedGraph& g, const EpidemicParams& params)
{
    const Vector pressure = g.weights() * p;
    return ((1.0 - p.array()) * params.beta.array() * pressure.array()
            - params.delta.array() * p.array())
        .matrix();
}

double last_integrate_clamp()
{
    return g_last_clamp;
}

Trajectory integrate(const Vector& p0, const DirectedGraph& g, const EpidemicParams& params,
                     const IntegrateOptions& opts)
{
    const int n = g.size();
    params.validate(n);
    if (p0.size() != n)
        throw DomainError("initial state must match the graph size");
    check_probabilities(p0);
    if (opts.record_every < 1)
        throw DomainError("integrate: record_every must be >= 1");
    const int steps = step_count(opts.horizon, opts.dt);
    const double h = opts.dt;

    g_last_clamp = 0.0;
    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(p0);
    Vector p = p0;
    for (int s = 1; s <= steps; ++s) {
        const Vector k1 = mean_field_rhs(p, g, params);
        const Vector k2 = mean_field_rhs(p + 0.5 * h * k1, g, params);
        const Vector k3 = mean_field_rhs(p + 0.5 * h * k2, g, params);
        const Vector k4 = mean_field_rhs(p + h * k3, g, params);
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const Vector clamped = p.cwiseMax(0.0).cwiseMin(1.0);
        const double correction = (clamped - p).lpNorm<Eigen::Infinity>();
        g_last_clamp = std::max(g_last_clamp, correction);
        if (correction > opts.max_clamp)
            throw StepSizeError("integrate: clamp correction exceeds threshold; reduce dt");
        p = clamped;

        if (s % opts.record_every == 0) {
            traj.times.push_back(s * h);
            traj.states.push_back(p);
        }
    }
    return traj;
}

MonteCarloTrajectory simulate_markov(const DirectedGraph& g, const EpidemicParams& params,
                                     const std::vector<int>& x0, const MarkovOptions& opts)
{
    if (static_cast<int>(x0.size()) != g.size())
        throw DomainError("initial state must match the graph size");
    for (int x : x0)
        if (x != 0 && x != 1)
            throw DomainError("initial state must be binary");
    return run_markov(g, params, opts, [&](std::mt19937_64&, std::vector<char>& x) {
        for (std::size_t i = 0; i < x0.size(); ++i)
            x[i] = static_cast<char>(x0[i]);
    });
}

MonteCarloTrajectory simulate_markov(const DirectedGraph& g, const EpidemicParams& params,
                                     const Vector& p0, const MarkovOptions& opts)
{
    if (p0.size() != g.size())
        throw DomainError("initial state must match the graph size");
    check_probabilities(p0);
    return run_markov(g, params, opts, [&](std::mt19937_64& rng, std::vector<char>& x) {
        for (Eigen::Index i = 0; i < p0.size(); ++i)
            x[i] = unit_uniform(rng) < p0(i) ? 1 : 0;
    });
}

DecayReport verify_decay(const Trajectory& traj, double eps_bar, double rate_tol)
{
    if (traj.size() < 2)
        throw DomainError("verify_decay: trajectory too short");
    if (rate_tol < 0.0)
        rate_tol = 0.05 * eps_bar;

    const double t0 = traj.times.front();
    const double t_end = traj.times.back();
    const double start = t0 + 0.2 * (t_end - t0);

    std::vector<double> ts, logs;
    bool vanished = false;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < start)
            continue;
        const double norm = traj.states[k].norm();
        ts.push_back(traj.times[k]);
        if (norm == 0.0)
            vanished = true;
        else
            logs.push_back(std::log(norm));
    }
    DecayReport rep;
    rep.samples = static_cast<int>(ts.size());
    if (rep.samples < 10)
        throw DomainError("verify_decay: fewer than 10 samples past the transient");
    if (vanished) {
        rep.achieved_rate = std::numeric_limits<double>::infinity();
        rep.pass = true;
        return rep;
    }

    const double m = static_cast<double>(ts.size());
    double st = 0.0, sl = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        st += ts[k];
        sl += logs[k];
    }
    const double tbar = st / m, lbar = sl / m;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        num += (ts[k] - tbar) * (logs[k] - lbar);
        den += (ts[k] - tbar) * (ts[k] - tbar);
    }
    rep.achieved_rate = -num / den;
    rep.pass = rep.achieved_rate >= eps_bar - rate_tol;
    return rep;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
    os << 't';
    for (int i = 1; i <= n; ++i)
        os << ",p_" << i;
    os << '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        os << format_number(traj.times[k]);
        for (int i = 0; i < n; ++i)
            os << ',' << format_number(traj.states[k](i));
        os << '\n';
    }
}

void write_trajectory_csv(std::ostream& os, const MonteCarloTrajectory& traj)
{
    const auto& mean = traj.mean;
    const int n = mean.states.empty() ? 0 : static_cast<int>(mean.states.front().size());
    os << 't';
    for (int i = 1; i <= n; ++i)
        os << ",p_" << i;
    for (int i = 1; i <= n; ++i)
        os << ",se_" << i;
    os << '\n';
    for (std::size_t k = 0; k < mean.size(); ++k) {
        os << format_number(mean.times[k]);
        for (int i = 0; i < n; ++i)
            os << ',' << format_number(mean.states[k](i));
        for (int i = 0; i < n; ++i)
            os << ',' << format_number(traj.std_error[k](i));
        os << '\n';
    }
}

} // namespace sisalloc
