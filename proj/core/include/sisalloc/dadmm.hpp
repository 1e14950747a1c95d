#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "sisalloc/centralized.hpp"

namespace sisalloc {

/// Where consensus, duals, penalty and the stopping residual live.
enum class PenaltyDomain {
    Log,     ///< on y = log u; every local problem is convex
    Linear,  ///< on u directly; local problems may be nonconvex
};

std::string to_string(PenaltyDomain d);
PenaltyDomain penalty_domain_from_string(const std::string& text);

struct DadmmOptions {
    double rho = 4.0;
    double eta = 1e-4;  ///< stop once sum_i sum_{j in N(i)} ||x_i - x_j|| <= eta
    int max_iter = 2000;
    PenaltyDomain penalty = PenaltyDomain::Log;
    bool random_init = false;  ///< draw y_u(0) from the seed instead of zeros
    std::uint64_t seed = 0;
    double local_tol = 1e-10;
    int threads = 1;
    std::optional<double> reference_cost;  ///< enables the per-iteration gap column
    std::ostream* message_log = nullptr;   ///< "iter,src,dst,v_1..v_n" per message
};

/// One agent. Rates are kept in the log coordinates of the shared program:
/// beta = exp(y_beta), delta = shift + 1 - exp(y_dtilde).
struct AgentState {
    int id = 0;
    Vector y_u;   ///< local copy of log u; sums to zero
    double y_beta = 0.0;
    double y_dtilde = 0.0;
    Vector phi;   ///< dual aggregate
    std::vector<int> neighbors;  ///< undirected support of A
    double constraint_dual = 0.0;  ///< multiplier of the spectral row at the last solve
};

/// Explicit per-edge multipliers alpha_ij, gamma_ij for every ordered pair
/// (i, j) with j in N(i). phi_i = sum_{j in N(i)} (alpha_ij + gamma_ji).
struct EdgeDuals {
    std::map<std::pair<int, int>, Vector> alpha;
    std::map<std::pair<int, int>, Vector> gamma;

    static EdgeDuals zeros(const std::vector<AgentState>& agents, int dim);
    /// alpha_ij += rho/2 (x_i - x_j), gamma_ij += rho/2 (x_j - x_i)
    void update(const std::vector<Vector>& shared, const std::vector<AgentState>& agents,
                double rho);
    Vector phi(const AgentState& agent) const;
};

/// Everything agent i knows about the problem: its own cost and bounds,
/// its in-weights and the globally agreed constants.
struct AgentContext {
    int id = 0;
    int n = 0;
    NodeCost cost;
    double shift = 0.0;          ///< max{eps_bar, delta_hi}
    double spectral_rhs = 0.0;   ///< shift + 1 - eps_bar
    LseConstraint spectral;      ///< over [y_u (n) | y_beta | y_dtilde]
    double y_beta_lo = 0.0, y_beta_hi = 0.0;
    double y_dtilde_lo = 0.0, y_dtilde_hi = 0.0;

    int dimension() const { return n + 2; }
    double beta(const AgentState& a) const;
    double delta(const AgentState& a) const;
    double local_cost(const AgentState& a) const;
    /// -h_i at the agent's own variables (>= 0 when feasible).
    double slack(const AgentState& a) const;
};

AgentContext make_agent_context(const AllocationProblem& prob, int i);

/// phi = 0, y_u = 0 (or seeded random with zero sum), rates at the log-box
/// midpoints, neighbours = in- and out-neighbours.
std::vector<AgentState> init_agents(const AllocationProblem& prob, std::uint64_t seed,
                                    bool random_init = false);

/// Value agent a publishes: y_u, or exp(y_u) in the linear domain.
Vector shared_value(const AgentState& a, PenaltyDomain domain);

/// phi_i += rho * sum_{j in N(i)} (x_i - x_j), x = published values.
void dual_update(std::vector<AgentState>& agents, const std::vector<Vector>& shared, double rho);

/// Solves agent i's augmented subproblem, warm-started from its current
/// iterate. `neighbor_values` are x_j(k) for j in N(i).
/// Throws InfeasibleError / ConvergenceError from the local solver.
AgentState local_step(const AgentContext& ctx, const AgentState& agent,
                      const std::map<int, Vector>& neighbor_values, double rho,
                      PenaltyDomain domain, double tol = 1e-10);

/// sum_i sum_{j in N(i)} ||x_i - x_j||_2
double consensus_residual(const std::vector<AgentState>& agents,
                          const std::vector<Vector>& shared);

struct IterationRecord {
    int iter = 0;
    double total_cost = 0.0;
    double consensus_residual = 0.0;
    double max_dual_norm = 0.0;   ///< max_i ||phi_i||
    double worst_slack = 0.0;     ///< min_i of -h_i at agent i's iterate
    double max_dual_step = 0.0;   ///< max_i ||phi_i(k+1) - phi_i(k)|| the next update would make
    double gap = 0.0;             ///< total_cost - reference (NaN without reference)
};

struct RunTrace {
    std::vector<IterationRecord> records;
    bool converged = false;
};

/// In-process synchronous message bus. Messages are immutable snapshots
/// delivered at the end of the exchange phase.
class MessageBus {
public:
    explicit MessageBus(int agents, std::ostream* log = nullptr);
    void send(int iter, int src, int dst, const Vector& value);
    /// Messages received by `dst` in the current round, keyed by sender.
    const std::map<int, Vector>& inbox(int dst) const;
    void clear();
    std::size_t messages_sent() const { return sent_; }

private:
    std::vector<std::map<int, Vector>> inboxes_;
    std::ostream* log_;
    std::size_t sent_ = 0;
};

struct DadmmResult {
    Allocation allocation;
    RunTrace trace;
    std::vector<AgentState> agents;
};

/// Synchronous rounds of exchange -> dual update -> local solves until the
/// consensus residual drops below eta or max_iter rounds have run
/// (trace.converged = false in that case).
DadmmResult run_dadmm(const AllocationProblem& prob, const DadmmOptions& opts = {});

/// CSV "iter,total_cost,consensus_residual,max_dual_norm,worst_slack";
/// a trailing gap column is added when the trace carries a reference.
void write_trace_csv(std::ostream& os, const RunTrace& trace, bool with_gap);

} // namespace sisalloc
