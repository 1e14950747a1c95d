#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sisalloc/graph.hpp"

namespace sisalloc {

/// h(y) = log sum_k exp(a_k . y + b_k); the program requires h(y) <= 0.
/// Row k of `a` is a_k.
struct LseConstraint {
    Matrix a;
    Vector b;

    double value(const Vector& y) const;
    /// Value, gradient and (optionally) Hessian A^T (diag(w) - w w^T) A,
    /// where w are the softmax weights of the terms.
    double evaluate(const Vector& y, Vector& grad, Matrix* hess) const;
};

/// Convex objective. Returns the value at y; fills *grad and *hess (not
/// accumulate) when the pointers are non-null. May return +inf or NaN
/// outside its domain.
using ObjectiveFn = std::function<double(const Vector& y, Vector* grad, Matrix* hess)>;

/// minimize f(y) s.t. h_i(y) <= 0 (log-sum-exp), C y = d, lower <= y <= upper.
/// Infinite box entries are allowed; lower == upper pins a coordinate.
struct ConvexProgram {
    int dimension = 0;
    ObjectiveFn objective;
    std::vector<LseConstraint> inequalities;
    Matrix eq_a;  ///< C (rows x dimension); zero rows means no equalities
    Vector eq_b;  ///< d
    Vector lower;
    Vector upper;

    /// Empty box and no constraints.
    static ConvexProgram unconstrained(int dimension, ObjectiveFn objective);

    void validate() const;
    /// Largest of max_i h_i(y), box violations and |C y - d|_inf.
    double max_violation(const Vector& y) const;
};

enum class SolveStatus { Optimal, MaxIter, Infeasible };
std::string to_string(SolveStatus status);

struct SolveOptions {
    double tol = 1e-8;          ///< stop once m/t < tol
    double t0 = 1.0;
    double mu = 20.0;
    double newton_tol = 1e-10;  ///< centering stops at lambda^2/2 <= newton_tol
    double ls_alpha = 0.25;
    double ls_beta = 0.5;
    int max_newton = 2000;      ///< total Newton steps across all centerings
};

struct SolveReport {
    Vector minimizer;
    double objective_value = 0.0;
    /// (m + sqrt(m) lambda) / t: bound on f(y) - p* from the barrier
    /// parameter and the final Newton decrement; the projected gradient norm
    /// when there are no inequalities.
    double kkt_residual = 0.0;
    int iterations = 0;  ///< Newton steps
    SolveStatus status = SolveStatus::MaxIter;
    /// Objective after each centering step (non-increasing along the path).
    std::vector<double> outer_objectives;
    /// Central-path multiplier estimates 1 / (t * -h_i).
    Vector inequality_duals;
};

/// Log-barrier method with damped Newton centering. If y0 is not strictly
/// feasible it is first repaired with phase_one; an infeasible program
/// yields status Infeasible.
SolveReport solve(const ConvexProgram& prog, const Vector& y0, const SolveOptions& opts = {});

/// Returns a point with every inequality and box slack >= 1e-6 that
/// satisfies the equalities, by minimising the largest violation.
/// Throws InfeasibleError when no such point exists.
Vector phase_one(const ConvexProgram& prog, const Vector& guess);

/// True when every inequality and box slack is positive and the
/// equalities hold to `eq_tol`.
bool strictly_feasible(const ConvexProgram& prog, const Vector& y, double eq_tol = 1e-9);

} // namespace sisalloc
