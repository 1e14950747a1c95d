#include "sisalloc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sisalloc/errors.hpp"

namespace sisalloc {

namespace {

void normalize_product(Vector& v)
{
    const double log_mean = v.array().log().mean();
    v *= std::exp(-log_mean);
}

// Strongly connected components of the off-diagonal support (Kosaraju,
// edges j -> i for m(i, j) > 0).
std::vector<std::vector<int>> components(const Matrix& m)
{
    const int n = static_cast<int>(m.rows());
    std::vector<int> order;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int root = 0; root < n; ++root) {
        if (seen[static_cast<std::size_t>(root)])
            continue;
        std::vector<std::pair<int, int>> stack{{root, 0}};
        seen[static_cast<std::size_t>(root)] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next == n) {
                order.push_back(v);
                stack.pop_back();
                continue;
            }
            const int w = next++;
            if (w != v && m(w, v) > 0.0 && !seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                stack.emplace_back(w, 0);
            }
        }
    }
    std::vector<std::vector<int>> out;
    std::vector<char> placed(static_cast<std::size_t>(n), 0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (placed[static_cast<std::size_t>(*it)])
            continue;
        std::vector<int> comp;
        std::vector<int> stack{*it};
        placed[static_cast<std::size_t>(*it)] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            comp.push_back(v);
            for (int w = 0; w < n; ++w) {
                if (w != v && m(v, w) > 0.0 && !placed[static_cast<std::size_t>(w)]) {
                    placed[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

// rho of a nonnegative matrix: the largest Perron root over its irreducible
// diagonal blocks.
double nonnegative_radius(const Matrix& m, const PerronOptions& opts)
{
    if (is_irreducible(m))
        return perron(m, opts).value;
    double best = 0.0;
    for (const auto& comp : components(m)) {
        const auto k = static_cast<Eigen::Index>(comp.size());
        if (k == 1) {
            best = std::max(best, m(comp[0], comp[0]));
            continue;
        }
        Matrix block(k, k);
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < k; ++c)
                block(r, c) = m(comp[static_cast<std::size_t>(r)], comp[static_cast<std::size_t>(c)]);
        best = std::max(best, perron(block, opts).value);
    }
    return best;
}

} // namespace

SpectralResult perron(const Matrix& m, const PerronOptions& opts)
{
    const Eigen::Index n = m.rows();
    if (n == 0 || m.cols() != n)
        throw DomainError("perron: matrix must be square and nonempty");
    if ((m.array() < 0.0).any() || !m.allFinite())
        throw DomainError("perron: matrix must be finite and nonnegative");
    if (!is_irreducible(m))
        throw DomainError("perron: matrix support is reducible");

    SpectralResult out;
    if (n == 1) {
        out.value = m(0, 0);
        out.vector = Vector::Ones(1);
        return out;
    }

    // M + sI is primitive for irreducible M, so the power iteration cannot
    // cycle; the mean row sum lies inside the Gershgorin bracket of rho(M).
    double shift = m.rowwise().sum().mean();
    if (shift <= 0.0)
        shift = 1.0;

    Vector v = Vector::Ones(n);
    Vector mv(n);
    double lo = 0.0, hi = 0.0;
    for (int it = 1; it <= opts.max_iter; ++it) {
        mv.noalias() = m * v;
        const Vector ratio = mv.cwiseQuotient(v);
        lo = ratio.minCoeff();
        hi = ratio.maxCoeff();
        out.iterations = it;
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= opts.tol * std::max(1.0, std::abs(mid))) {
            out.value = mid;
            normalize_product(v);
            out.vector = v;
            out.residual = (m * v - mid * v).lpNorm<Eigen::Infinity>();
            return out;
        }
        v = mv + shift * v;
        v /= v.maxCoeff();
        if ((v.array() <= 0.0).any()) {
            // Underflow in a nearly decoupled component; the next product
            // restores positivity for irreducible input, but ratios need v > 0.
            v = v.cwiseMax(std::numeric_limits<double>::min());
        }
    }
    std::ostringstream msg;
    msg << "perron: no convergence after " << opts.max_iter
        << " iterations (bracket [" << lo << ", " << hi << "])";
    throw ConvergenceError(msg.str());
}

Matrix stability_matrix(const DirectedGraph& g, const Vector& beta, const Vector& delta)
{
    const int n = g.size();
    if (beta.size() != n || delta.size() != n)
        throw DomainError("rate vectors must match the graph size");
    Matrix m = beta.asDiagonal() * g.weights();
    m.diagonal() -= delta;
    return m;
}

double spectral_abscissa(const DirectedGraph& g, const Vector& beta, const Vector& delta,
                         double sigma, const PerronOptions& opts)
{
    if ((beta.array() < 0.0).any())
        throw DomainError("spectral_abscissa: beta must be nonnegative");
    if ((delta.array() <= 0.0).any())
        throw DomainError("spectral_abscissa: delta must be positive");
    if (sigma < delta.maxCoeff())
        throw DomainError("spectral_abscissa: shift must be at least max delta");
    Matrix m = stability_matrix(g, beta, delta);
    m.diagonal().array() += sigma;
    return nonnegative_radius(m, opts) - sigma;
}

double spectral_abscissa(const DirectedGraph& g, const Vector& beta, const Vector& delta,
                         const PerronOptions& opts)
{
    if (delta.size() == 0)
        throw DomainError("spectral_abscissa: empty rate vector");
    return spectral_abscissa(g, beta, delta, delta.maxCoeff(), opts);
}

double spectral_radius(const Matrix& m)
{
    Eigen::EigenSolver<Matrix> es(m, false);
    if (es.info() != Eigen::Success)
        throw ConvergenceError("spectral_radius: dense eigensolve failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace sisalloc
