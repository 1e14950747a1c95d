#pragma once

#include "sisalloc/graph.hpp"

namespace sisalloc {

/// Dominant eigenpair of a nonnegative irreducible matrix.
struct SpectralResult {
    double value = 0.0;  ///< lambda_1 = rho(M)
    Vector vector;       ///< Perron vector, entries > 0, product of entries = 1
    int iterations = 0;
    double residual = 0.0;  ///< ||M v - value v||_inf
};

struct PerronOptions {
    double tol = 1e-12;
    int max_iter = 100000;
};

/// Power iteration on the primitive shift M + sI.
///
/// Terminates once the Collatz-Wielandt bracket
///   min_i (Mv)_i / v_i <= rho(M) <= max_i (Mv)_i / v_i
/// is narrower than tol * max(1, |rho|); the midpoint is returned, so
/// |value - rho(M)| <= tol/2 (relative above 1).
///
/// Throws DomainError if M has a negative entry or reducible support and
/// ConvergenceError when the cap is hit.
SpectralResult perron(const Matrix& m, const PerronOptions& opts = {});

/// The stability matrix B A - D.
Matrix stability_matrix(const DirectedGraph& g, const Vector& beta, const Vector& delta);

/// Real part of lambda_1(B A - D), via perron(B A - D + sigma I) - sigma
/// with sigma = max_i delta_i. Reducible supports are split into strongly
/// connected blocks and the largest block root is returned.
double spectral_abscissa(const DirectedGraph& g, const Vector& beta, const Vector& delta,
                         const PerronOptions& opts = {});

/// Same with an explicit shift; requires sigma >= max_i delta_i.
double spectral_abscissa(const DirectedGraph& g, const Vector& beta, const Vector& delta,
                         double sigma, const PerronOptions& opts = {});

/// Maximum eigenvalue modulus of an arbitrary square matrix (dense solve).
double spectral_radius(const Matrix& m);

} // namespace sisalloc
