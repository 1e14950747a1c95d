#pragma once

#include <array>
#include <iosfwd>
#include <string>

#include "sisalloc/convex.hpp"
#include "sisalloc/costs.hpp"
#include "sisalloc/graph.hpp"

namespace sisalloc {

/// One instance of the rate-constrained allocation problem.
struct AllocationProblem {
    DirectedGraph graph;
    CostModel cost;        ///< carries the per-node rate bounds
    double eps_bar = 0.1;  ///< required exponential decay rate

    const RateBounds& bounds() const { return cost.bounds; }
    int size() const { return graph.size(); }
    /// Throws DomainError unless the graph is strongly connected, sizes
    /// agree, bounds are valid and eps_bar > 0.
    void validate() const;
};

/// Per-node rates with the resulting cost and stability margin.
struct Allocation {
    Vector beta;
    Vector delta;
    Vector u;                ///< positive certificate with prod(u) = 1
    double total_cost = 0.0;
    double abscissa = 0.0;   ///< Re lambda_1(B A - D)
};

/// Variable layout of the log-domain program: blocks [y_u | y_beta | y_dtilde],
/// each of length n, with dtilde_i = shift + 1 - delta_i.
struct GpBuild {
    int n = 0;
    double delta_tilde_shift = 0.0;  ///< max{eps_bar, delta_hi_i}
    double spectral_rhs = 0.0;       ///< shift + 1 - eps_bar
    ConvexProgram program;

    int u_index(int i) const { return i; }
    int beta_index(int i) const { return n + i; }
    int dtilde_index(int i) const { return 2 * n + i; }

    /// Natural-coordinate rates and certificate from a program point.
    Allocation decode(const Vector& y, const AllocationProblem& prob) const;
    /// Program point for given rates and certificate (u is product-normalised here).
    Vector encode(const Vector& beta, const Vector& delta, const Vector& u) const;
};

/// Spectral row of node i in log-sum-exp form over an arbitrary layout:
///   log[ sum_{j in N_i^in} exp(y_beta + log a_ij + y_u[j] - y_u[i] - log c)
///        + exp(y_dtilde - log c) ] <= 0,   c = spectral_rhs
/// `u_offset` is where y_u[0] sits, `beta_col`/`dtilde_col` the rate columns.
LseConstraint spectral_row(const DirectedGraph& g, int i, double spectral_rhs, int dimension,
                           int u_offset, int beta_col, int dtilde_col);

/// Cost of one node as a function of (y_beta, y_dtilde): value, gradient
/// and diagonal Hessian, with delta = shift + 1 - exp(y_dtilde).
LogDomainCost substituted_cost(const NodeCost& cost, double shift, double y_beta,
                               double y_dtilde);

/// Box of y_dtilde for node i.
std::pair<double, double> dtilde_log_box(const NodeBounds& b, double shift);

double delta_tilde_shift(const AllocationProblem& prob);

GpBuild build_gp(const AllocationProblem& prob);

struct CentralizedOptions {
    double tol = 1e-9;
};

struct CentralizedResult {
    Allocation allocation;
    GpBuild build;
    SolveReport report;
};

/// Throws InfeasibleError (with the corner report in the message) or
/// ConvergenceError.
CentralizedResult solve_centralized_detailed(const AllocationProblem& prob,
                                             const CentralizedOptions& opts = {});
Allocation solve_centralized(const AllocationProblem& prob, const CentralizedOptions& opts = {});

/// Stability metrics at one uniform corner of the rate box.
struct CornerReport {
    std::string label;       ///< e.g. "beta_lo,delta_hi"
    Vector beta;
    Vector delta;
    double abscissa = 0.0;   ///< Re lambda_1(B A - D)
    double radius = 0.0;     ///< rho(B A - D), max eigenvalue modulus
    double shifted_radius = 0.0;  ///< rho(B A + I - D)
    bool meets_target = false;    ///< abscissa <= -eps_bar
};

/// Corners in the order (lo,lo), (hi,hi), (lo,hi), (hi,lo) of (beta, delta).
std::array<CornerReport, 4> feasibility_report(const AllocationProblem& prob);
void print_corner_report(std::ostream& os, const std::array<CornerReport, 4>& corners,
                         double eps_bar);

/// KKT residual of the log-domain program at (beta, delta, u) with spectral
/// multipliers `lambda` (one per node): the largest of projected
/// stationarity, primal violation and |lambda_i h_i|. Box coordinates within
/// `active_tol` (log units) of a bound may carry a sign-constrained multiplier.
double kkt_residual(const AllocationProblem& prob, const Allocation& a, const Vector& lambda,
                    double active_tol = 1e-6);

/// Least-squares multipliers of the spectral rows at (beta, delta, u): node
/// i's row is the only one involving its own rate coordinates, so lambda_i
/// is fitted to their stationarity equations (those not within `active_tol`
/// of a bound; both when both are) and clipped at zero.
Vector fitted_multipliers(const AllocationProblem& prob, const Allocation& a,
                          double active_tol = 1e-6);

/// kkt_residual with fitted_multipliers.
double kkt_residual(const AllocationProblem& prob, const Allocation& a, double active_tol = 1e-6);

/// Recomputes total cost and abscissa from beta/delta.
void finalize_allocation(Allocation& a, const AllocationProblem& prob);

/// CSV "node,beta,delta,f_cost,g_cost" followed by a
/// "# summary,total_cost=...,abscissa=...,eps_bar=..." line.
void write_allocation_csv(std::ostream& os, const Allocation& a, const AllocationProblem& prob);
/// Reads beta/delta back; cost and abscissa are recomputed by the caller.
Allocation read_allocation_csv(std::istream& is);

} // namespace sisalloc
