#include "sisalloc/dadmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "sisalloc/errors.hpp"
#include "sisalloc/io.hpp"

namespace sisalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Local solves whose stationarity stalls just above tol at working
// precision are still usable iterates.
constexpr double kLocalAcceptFactor = 1e3;

} // namespace

std::string to_string(PenaltyDomain d)
{
    return d == PenaltyDomain::Log ? "log" : "linear";
}

PenaltyDomain penalty_domain_from_string(const std::string& text)
{
    if (text == "log")
        return PenaltyDomain::Log;
    if (text == "linear")
        return PenaltyDomain::Linear;
    throw DomainError("unknown penalty domain '" + text + "' (expected log|linear)");
}

EdgeDuals EdgeDuals::zeros(const std::vector<AgentState>& agents, int dim)
{
    EdgeDuals e;
    for (const auto& a : agents) {
        for (int j : a.neighbors) {
            e.alpha[{a.id, j}] = Vector::Zero(dim);
            e.gamma[{a.id, j}] = Vector::Zero(dim);
        }
    }
    return e;
}

void EdgeDuals::update(const std::vector<Vector>& shared, const std::vector<AgentState>& agents,
                       double rho)
{
    for (const auto& a : agents) {
        for (int j : a.neighbors) {
            const Vector diff = shared[static_cast<std::size_t>(a.id)]
                              - shared[static_cast<std::size_t>(j)];
            alpha.at({a.id, j}) += 0.5 * rho * diff;
            gamma.at({a.id, j}) -= 0.5 * rho * diff;
        }
    }
}

Vector EdgeDuals::phi(const AgentState& agent) const
{
    Vector out = Vector::Zero(agent.y_u.size());
    for (int j : agent.neighbors)
        out += alpha.at({agent.id, j}) + gamma.at({j, agent.id});
    return out;
}

double AgentContext::beta(const AgentState& a) const
{
    return std::clamp(std::exp(a.y_beta), cost.bounds.beta_lo, cost.bounds.beta_hi);
}

double AgentContext::delta(const AgentState& a) const
{
    return std::clamp(shift + 1.0 - std::exp(a.y_dtilde), cost.bounds.delta_lo,
                      cost.bounds.delta_hi);
}

double AgentContext::local_cost(const AgentState& a) const
{
    return vaccine_cost(cost, beta(a)) + antidote_cost(cost, delta(a));
}

double AgentContext::slack(const AgentState& a) const
{
    Vector x(dimension());
    x.head(n) = a.y_u;
    x(n) = a.y_beta;
    x(n + 1) = a.y_dtilde;
    return -spectral.value(x);
}

AgentContext make_agent_context(const AllocationProblem& prob, int i)
{
    AgentContext c;
    c.id = i;
    c.n = prob.size();
    c.cost = prob.cost.node(i);
    c.shift = delta_tilde_shift(prob);
    c.spectral_rhs = c.shift + 1.0 - prob.eps_bar;
    c.spectral = spectral_row(prob.graph, i, c.spectral_rhs, c.n + 2, 0, c.n, c.n + 1);
    c.y_beta_lo = std::log(c.cost.bounds.beta_lo);
    c.y_beta_hi = std::log(c.cost.bounds.beta_hi);
    std::tie(c.y_dtilde_lo, c.y_dtilde_hi) = dtilde_log_box(c.cost.bounds, c.shift);
    return c;
}

std::vector<AgentState> init_agents(const AllocationProblem& prob, std::uint64_t seed,
                                    bool random_init)
{
    prob.validate();
    const int n = prob.size();
    std::vector<AgentState> agents(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const AgentContext ctx = make_agent_context(prob, i);
        AgentState& a = agents[static_cast<std::size_t>(i)];
        a.id = i;
        a.y_u = Vector::Zero(n);
        if (random_init) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(i), 0xad0u};
            std::mt19937_64 rng(seq);
            for (int j = 0; j < n; ++j)
                a.y_u(j) = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
            a.y_u.array() -= a.y_u.mean();
        }
        a.y_beta = 0.5 * (ctx.y_beta_lo + ctx.y_beta_hi);
        a.y_dtilde = 0.5 * (ctx.y_dtilde_lo + ctx.y_dtilde_hi);
        a.phi = Vector::Zero(n);
        a.neighbors = prob.graph.neighbors(i);
    }
    return agents;
}

Vector shared_value(const AgentState& a, PenaltyDomain domain)
{
    if (domain == PenaltyDomain::Log)
        return a.y_u;
    return a.y_u.array().exp().matrix();
}

void dual_update(std::vector<AgentState>& agents, const std::vector<Vector>& shared, double rho)
{
    for (auto& a : agents) {
        const Vector& own = shared[static_cast<std::size_t>(a.id)];
        for (int j : a.neighbors)
            a.phi += rho * (own - shared[static_cast<std::size_t>(j)]);
    }
}

AgentState local_step(const AgentContext& ctx, const AgentState& agent,
                      const std::map<int, Vector>& neighbor_values, double rho,
                      PenaltyDomain domain, double tol)
{
    const int n = ctx.n;
    const int dim = ctx.dimension();
    const Vector own = shared_value(agent, domain);

    // sum_j ||x - m_j||^2 = N ||x||^2 - 2 x.S + const, S = sum_j m_j
    Vector mid_sum = Vector::Zero(n);
    double mid_sq = 0.0;
    for (int j : agent.neighbors) {
        const auto it = neighbor_values.find(j);
        if (it == neighbor_values.end())
            throw DomainError("local_step: missing value from neighbour " + std::to_string(j));
        const Vector m = 0.5 * (own + it->second);
        mid_sum += m;
        mid_sq += m.squaredNorm();
    }
    const double count = static_cast<double>(agent.neighbors.size());

    ConvexProgram p;
    p.dimension = dim;
    p.inequalities = {ctx.spectral};
    p.eq_a = Matrix::Zero(1, dim);
    p.eq_a.leftCols(n).setOnes();
    p.eq_b = Vector::Zero(1);
    p.lower = Vector::Constant(dim, -kInf);
    p.upper = Vector::Constant(dim, kInf);
    p.lower(n) = ctx.y_beta_lo;
    p.upper(n) = ctx.y_beta_hi;
    p.lower(n + 1) = ctx.y_dtilde_lo;
    p.upper(n + 1) = ctx.y_dtilde_hi;

    const Vector phi = agent.phi;
    p.objective = [&ctx, n, dim, rho, domain, phi, mid_sum, mid_sq, count](const Vector& x,
                                                                           Vector* grad,
                                                                           Matrix* hess) {
        const LogDomainCost c = substituted_cost(ctx.cost, ctx.shift, x(n), x(n + 1));
        if (grad)
            grad->setZero(dim);
        if (hess)
            hess->setZero(dim, dim);
        double value = c.value;
        if (grad) {
            (*grad)(n) = c.gradient(0);
            (*grad)(n + 1) = c.gradient(1);
        }
        if (hess) {
            (*hess)(n, n) = c.hessian_diag(0);
            (*hess)(n + 1, n + 1) = c.hessian_diag(1);
        }
        const auto y = x.head(n);
        if (domain == PenaltyDomain::Log) {
            value += phi.dot(y) + rho * (count * y.squaredNorm() - 2.0 * y.dot(mid_sum) + mid_sq);
            if (grad)
                grad->head(n) = phi + 2.0 * rho * (count * y - mid_sum);
            if (hess)
                hess->topLeftCorner(n, n).diagonal().setConstant(2.0 * rho * count);
        } else {
            const Vector u = y.array().exp().matrix();
            value += phi.dot(u) + rho * (count * u.squaredNorm() - 2.0 * u.dot(mid_sum) + mid_sq);
            if (grad)
                grad->head(n) = (phi + 2.0 * rho * (count * u - mid_sum)).cwiseProduct(u);
            if (hess) {
                const Vector d = (phi + 2.0 * rho * (2.0 * count * u - mid_sum)).cwiseProduct(u);
                hess->topLeftCorner(n, n).diagonal() = d;
            }
        }
        return value;
    };

    Vector x0(dim);
    x0.head(n) = agent.y_u;
    x0(n) = agent.y_beta;
    x0(n + 1) = agent.y_dtilde;

    SolveOptions so;
    so.tol = tol;
    const SolveReport rep = solve(p, x0, so);
    if (rep.status == SolveStatus::Infeasible)
        throw InfeasibleError("agent " + std::to_string(ctx.id) + ": local problem infeasible");
    if (rep.status == SolveStatus::MaxIter && !(rep.kkt_residual <= kLocalAcceptFactor * tol)) {
        std::ostringstream msg;
        msg << "agent " << ctx.id << ": local solve stalled (kkt " << rep.kkt_residual << ")";
        throw ConvergenceError(msg.str());
    }

    AgentState out = agent;
    out.y_u = rep.minimizer.head(n);
    out.y_beta = rep.minimizer(n);
    out.y_dtilde = rep.minimizer(n + 1);
    out.constraint_dual = rep.inequality_duals(0);
    return out;
}

double consensus_residual(const std::vector<AgentState>& agents, const std::vector<Vector>& shared)
{
    double r = 0.0;
    for (const auto& a : agents)
        for (int j : a.neighbors)
            r += (shared[static_cast<std::size_t>(a.id)] - shared[static_cast<std::size_t>(j)])
                     .norm();
    return r;
}

MessageBus::MessageBus(int agents, std::ostream* log)
    : inboxes_(static_cast<std::size_t>(agents))
    , log_(log)
{
}

void MessageBus::send(int iter, int src, int dst, const Vector& value)
{
    inboxes_.at(static_cast<std::size_t>(dst))[src] = value;
    ++sent_;
    if (log_) {
        *log_ << iter << ',' << src << ',' << dst;
        for (Eigen::Index k = 0; k < value.size(); ++k)
            *log_ << ',' << format_number(value(k));
        *log_ << '\n';
    }
}

const std::map<int, Vector>& MessageBus::inbox(int dst) const
{
    return inboxes_.at(static_cast<std::size_t>(dst));
}

void MessageBus::clear()
{
    for (auto& box : inboxes_)
        box.clear();
}

DadmmResult run_dadmm(const AllocationProblem& prob, const DadmmOptions& opts)
{
    prob.validate();
    if (!(opts.rho > 0.0))
        throw DomainError("penalty rho must be positive");
    if (opts.max_iter < 1)
        throw DomainError("max_iter must be >= 1");
    const int n = prob.size();

    std::vector<AgentContext> ctx;
    ctx.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        ctx.push_back(make_agent_context(prob, i));

    DadmmResult res;
    res.agents = init_agents(prob, opts.seed, opts.random_init);
    auto& agents = res.agents;
    std::vector<Vector> shared(static_cast<std::size_t>(n));
    for (const auto& a : agents)
        shared[static_cast<std::size_t>(a.id)] = shared_value(a, opts.penalty);

    MessageBus bus(n, opts.message_log);
    const int threads = std::max(1, std::min(opts.threads, n));

    for (int k = 1; k <= opts.max_iter; ++k) {
        bus.clear();
        for (const auto& a : agents)
            for (int j : a.neighbors)
                bus.send(k, a.id, j, shared[static_cast<std::size_t>(a.id)]);

        dual_update(agents, shared, opts.rho);

        std::vector<AgentState> next(agents.size());
        auto work = [&](int first, int last) {
            for (int i = first; i < last; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                next[idx] = local_step(ctx[idx], agents[idx], bus.inbox(i), opts.rho, opts.penalty,
                                       opts.local_tol);
            }
        };
        if (threads == 1) {
            work(0, n);
        } else {
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
            {
                std::vector<std::jthread> pool;
                for (int t = 0; t < threads; ++t) {
                    pool.emplace_back([&, t] {
                        try {
                            work(n * t / threads, n * (t + 1) / threads);
                        } catch (...) {
                            errors[static_cast<std::size_t>(t)] = std::current_exception();
                        }
                    });
                }
            }
            for (const auto& e : errors)
                if (e)
                    std::rethrow_exception(e);
        }
        agents = std::move(next);
        for (const auto& a : agents)
            shared[static_cast<std::size_t>(a.id)] = shared_value(a, opts.penalty);

        IterationRecord rec;
        rec.iter = k;
        rec.worst_slack = kInf;
        for (const auto& a : agents) {
            const auto idx = static_cast<std::size_t>(a.id);
            rec.total_cost += ctx[idx].local_cost(a);
            rec.max_dual_norm = std::max(rec.max_dual_norm, a.phi.norm());
            rec.worst_slack = std::min(rec.worst_slack, ctx[idx].slack(a));
            Vector step = Vector::Zero(n);
            for (int j : a.neighbors)
                step += shared[idx] - shared[static_cast<std::size_t>(j)];
            rec.max_dual_step = std::max(rec.max_dual_step, opts.rho * step.norm());
        }
        rec.consensus_residual = consensus_residual(agents, shared);
        rec.gap = opts.reference_cost ? rec.total_cost - *opts.reference_cost
                                      : std::numeric_limits<double>::quiet_NaN();
        res.trace.records.push_back(rec);
        if (rec.consensus_residual <= opts.eta) {
            res.trace.converged = true;
            break;
        }
    }

    Allocation& alloc = res.allocation;
    alloc.beta.resize(n);
    alloc.delta.resize(n);
    Vector mean_log_u = Vector::Zero(n);
    for (const auto& a : agents) {
        const auto idx = static_cast<std::size_t>(a.id);
        alloc.beta(a.id) = ctx[idx].beta(a);
        alloc.delta(a.id) = ctx[idx].delta(a);
        mean_log_u += a.y_u;
    }
    mean_log_u /= static_cast<double>(n);
    mean_log_u.array() -= mean_log_u.mean();
    alloc.u = mean_log_u.array().exp().matrix();
    finalize_allocation(alloc, prob);
    return res;
}

void write_trace_csv(std::ostream& os, const RunTrace& trace, bool with_gap)
{
    os << "iter,total_cost,consensus_residual,max_dual_norm,worst_slack";
    if (with_gap)
        os << ",gap";
    os << '\n';
    for (const auto& r : trace.records) {
        os << r.iter << ',' << format_number(r.total_cost) << ','
           << format_number(r.consensus_residual) << ',' << format_number(r.max_dual_norm) << ','
           << format_number(r.worst_slack);
        if (with_gap)
            os << ',' << format_number(r.gap);
        os << '\n';
    }
}

} // namespace sisalloc
