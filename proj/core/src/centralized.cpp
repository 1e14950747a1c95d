#include "sisalloc/centralized.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "sisalloc/errors.hpp"
#include "sisalloc/io.hpp"
#include "sisalloc/spectral.hpp"

namespace sisalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector uniform_corner(const RateBounds& b, bool beta_side_hi, bool delta_side_hi, bool want_beta)
{
    Vector v(b.size());
    for (int i = 0; i < b.size(); ++i) {
        if (want_beta)
            v(i) = beta_side_hi ? b[i].beta_hi : b[i].beta_lo;
        else
            v(i) = delta_side_hi ? b[i].delta_hi : b[i].delta_lo;
    }
    return v;
}

} // namespace

void AllocationProblem::validate() const
{
    if (graph.size() < 1)
        throw DomainError("problem graph is empty");
    if (cost.size() != graph.size())
        throw DomainError("bounds do not match the graph size");
    cost.bounds.validate();
    if (!(eps_bar > 0.0))
        throw DomainError("eps_bar must be positive");
    if (!is_strongly_connected(graph))
        throw DomainError("problem graph must be strongly connected");
}

double delta_tilde_shift(const AllocationProblem& prob)
{
    double shift = prob.eps_bar;
    for (const auto& b : prob.bounds().nodes)
        shift = std::max(shift, b.delta_hi);
    return shift;
}

std::pair<double, double> dtilde_log_box(const NodeBounds& b, double shift)
{
    return {std::log(shift + 1.0 - b.delta_hi), std::log(shift + 1.0 - b.delta_lo)};
}

LseConstraint spectral_row(const DirectedGraph& g, int i, double spectral_rhs, int dimension,
                           int u_offset, int beta_col, int dtilde_col)
{
    const auto in = g.in_neighbors(i);
    const double log_rhs = std::log(spectral_rhs);
    LseConstraint c;
    c.a = Matrix::Zero(static_cast<Eigen::Index>(in.size()) + 1, dimension);
    c.b.resize(c.a.rows());
    Eigen::Index r = 0;
    for (int j : in) {
        c.a(r, beta_col) = 1.0;
        c.a(r, u_offset + j) += 1.0;
        c.a(r, u_offset + i) -= 1.0;
        c.b(r) = std::log(g.weight(i, j)) - log_rhs;
        ++r;
    }
    c.a(r, dtilde_col) = 1.0;
    c.b(r) = -log_rhs;
    return c;
}

LogDomainCost substituted_cost(const NodeCost& cost, double shift, double y_beta, double y_dtilde)
{
    const double beta = std::exp(y_beta);
    const double dtilde = std::exp(y_dtilde);
    const double delta = shift + 1.0 - dtilde;
    const Derivs f = cost.vaccine_unchecked(beta);
    const Derivs g = cost.antidote_unchecked(delta);
    LogDomainCost out;
    out.value = f.value + g.value;
    // delta = shift + 1 - e^y: d/dy g = -g' e^y, d2/dy2 g = g'' e^2y - g' e^y
    out.gradient = {f.d1 * beta, -g.d1 * dtilde};
    out.hessian_diag = {f.d2 * beta * beta + f.d1 * beta, g.d2 * dtilde * dtilde - g.d1 * dtilde};
    if (!(delta < 1.0))
        out.value = kInf;
    return out;
}

Allocation GpBuild::decode(const Vector& y, const AllocationProblem& prob) const
{
    Allocation a;
    a.beta.resize(n);
    a.delta.resize(n);
    a.u.resize(n);
    for (int i = 0; i < n; ++i) {
        const NodeBounds& b = prob.bounds()[i];
        a.beta(i) = std::clamp(std::exp(y(beta_index(i))), b.beta_lo, b.beta_hi);
        a.delta(i) = std::clamp(delta_tilde_shift + 1.0 - std::exp(y(dtilde_index(i))),
                                b.delta_lo, b.delta_hi);
        a.u(i) = std::exp(y(u_index(i)));
    }
    return a;
}

Vector GpBuild::encode(const Vector& beta, const Vector& delta, const Vector& u) const
{
    Vector y(3 * n);
    const Vector logu = u.array().log().matrix();
    const double mean = logu.mean();
    for (int i = 0; i < n; ++i) {
        y(u_index(i)) = logu(i) - mean;
        y(beta_index(i)) = std::log(beta(i));
        y(dtilde_index(i)) = std::log(delta_tilde_shift + 1.0 - delta(i));
    }
    return y;
}

GpBuild build_gp(const AllocationProblem& prob)
{
    prob.validate();
    GpBuild gb;
    const int n = prob.size();
    gb.n = n;
    gb.delta_tilde_shift = delta_tilde_shift(prob);
    gb.spectral_rhs = gb.delta_tilde_shift + 1.0 - prob.eps_bar;

    ConvexProgram& p = gb.program;
    p.dimension = 3 * n;
    p.lower = Vector::Constant(3 * n, -kInf);
    p.upper = Vector::Constant(3 * n, kInf);
    for (int i = 0; i < n; ++i) {
        const NodeBounds& b = prob.bounds()[i];
        p.lower(gb.beta_index(i)) = std::log(b.beta_lo);
        p.upper(gb.beta_index(i)) = std::log(b.beta_hi);
        const auto [lo, hi] = dtilde_log_box(b, gb.delta_tilde_shift);
        p.lower(gb.dtilde_index(i)) = lo;
        p.upper(gb.dtilde_index(i)) = hi;
        p.inequalities.push_back(spectral_row(prob.graph, i, gb.spectral_rhs, 3 * n, 0,
                                              gb.beta_index(i), gb.dtilde_index(i)));
    }
    // prod u = 1
    p.eq_a = Matrix::Zero(1, 3 * n);
    p.eq_a.leftCols(n).setOnes();
    p.eq_b = Vector::Zero(1);

    p.objective = [cost = prob.cost, shift = gb.delta_tilde_shift, n](
                      const Vector& y, Vector* grad, Matrix* hess) {
        if (grad)
            grad->setZero(3 * n);
        if (hess)
            hess->setZero(3 * n, 3 * n);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const LogDomainCost c = substituted_cost(cost.node(i), shift, y(n + i), y(2 * n + i));
            total += c.value;
            if (grad) {
                (*grad)(n + i) = c.gradient(0);
                (*grad)(2 * n + i) = c.gradient(1);
            }
            if (hess) {
                (*hess)(n + i, n + i) = c.hessian_diag(0);
                (*hess)(2 * n + i, 2 * n + i) = c.hessian_diag(1);
            }
        }
        return total;
    };
    return gb;
}

double kkt_residual(const AllocationProblem& prob, const Allocation& a, const Vector& lambda,
                    double active_tol)
{
    const GpBuild gb = build_gp(prob);
    const int n = gb.n;
    if (a.beta.size() != n || a.delta.size() != n || a.u.size() != n || lambda.size() != n)
        throw DomainError("kkt_residual: dimension mismatch");
    const ConvexProgram& p = gb.program;
    const Vector y = gb.encode(a.beta, a.delta, a.u);

    Vector r(p.dimension);
    p.objective(y, &r, nullptr);
    double worst = 0.0;
    Vector g(p.dimension);
    for (int i = 0; i < n; ++i) {
        const double h = p.inequalities[static_cast<std::size_t>(i)].evaluate(y, g, nullptr);
        r += lambda(i) * g;
        worst = std::max({worst, h, std::abs(lambda(i) * h)});
        if (lambda(i) < 0.0)
            worst = std::max(worst, -lambda(i));
    }
    // the multiplier of sum y_u = 0 absorbs the mean of the u block
    r.head(n).array() -= r.head(n).mean();
    worst = std::max(worst, r.head(n).lpNorm<Eigen::Infinity>());
    for (int k = n; k < p.dimension; ++k) {
        const bool at_lo = y(k) - p.lower(k) <= active_tol;
        const bool at_hi = p.upper(k) - y(k) <= active_tol;
        double v = std::abs(r(k));
        if (at_lo && at_hi)
            v = 0.0;
        else if (at_lo)
            v = std::max(-r(k), 0.0);
        else if (at_hi)
            v = std::max(r(k), 0.0);
        worst = std::max(worst, v);
    }
    return worst;
}

Vector fitted_multipliers(const AllocationProblem& prob, const Allocation& a, double active_tol)
{
    const GpBuild gb = build_gp(prob);
    const int n = gb.n;
    if (a.beta.size() != n || a.delta.size() != n || a.u.size() != n)
        throw DomainError("fitted_multipliers: dimension mismatch");
    const ConvexProgram& p = gb.program;
    const Vector y = gb.encode(a.beta, a.delta, a.u);
    Vector f(p.dimension);
    p.objective(y, &f, nullptr);

    Vector lambda(n);
    Vector g(p.dimension);
    for (int i = 0; i < n; ++i) {
        p.inequalities[static_cast<std::size_t>(i)].evaluate(y, g, nullptr);
        std::vector<int> free;
        for (int k : {gb.beta_index(i), gb.dtilde_index(i)})
            if (y(k) - p.lower(k) > active_tol && p.upper(k) - y(k) > active_tol)
                free.push_back(k);
        if (free.empty())
            free = {gb.beta_index(i), gb.dtilde_index(i)};
        double num = 0.0, den = 0.0;
        for (int k : free) {
            num -= f(k) * g(k);
            den += g(k) * g(k);
        }
        lambda(i) = den > 0.0 ? std::max(num / den, 0.0) : 0.0;
    }
    return lambda;
}

double kkt_residual(const AllocationProblem& prob, const Allocation& a, double active_tol)
{
    return kkt_residual(prob, a, fitted_multipliers(prob, a, active_tol), active_tol);
}

void finalize_allocation(Allocation& a, const AllocationProblem& prob)
{
    a.total_cost = total_cost(prob.cost, a.beta, a.delta);
    a.abscissa = spectral_abscissa(prob.graph, a.beta, a.delta);
}

std::array<CornerReport, 4> feasibility_report(const AllocationProblem& prob)
{
    const RateBounds& b = prob.bounds();
    const std::array<std::pair<bool, bool>, 4> sides{
        {{false, false}, {true, true}, {false, true}, {true, false}}};
    std::array<CornerReport, 4> out;
    for (std::size_t k = 0; k < sides.size(); ++k) {
        const auto [bhi, dhi] = sides[k];
        CornerReport& c = out[k];
        c.label = std::string(bhi ? "beta_hi" : "beta_lo") + "," + (dhi ? "delta_hi" : "delta_lo");
        c.beta = uniform_corner(b, bhi, dhi, true);
        c.delta = uniform_corner(b, bhi, dhi, false);
        c.abscissa = spectral_abscissa(prob.graph, c.beta, c.delta);
        const Matrix m = stability_matrix(prob.graph, c.beta, c.delta);
        c.radius = spectral_radius(m);
        c.shifted_radius = spectral_radius(m + Matrix::Identity(m.rows(), m.cols()));
        c.meets_target = c.abscissa <= -prob.eps_bar;
    }
    return out;
}

void print_corner_report(std::ostream& os, const std::array<CornerReport, 4>& corners,
                         double eps_bar)
{
    os << "corner,abscissa,radius_BA_minus_D,radius_BA_plus_I_minus_D,meets_eps_bar\n";
    for (const auto& c : corners)
        os << c.label << ',' << format_number(c.abscissa) << ',' << format_number(c.radius)
           << ',' << format_number(c.shifted_radius) << ',' << (c.meets_target ? "yes" : "no")
           << '\n';
    os << "# eps_bar=" << format_number(eps_bar) << '\n';
}

CentralizedResult solve_centralized_detailed(const AllocationProblem& prob,
                                             const CentralizedOptions& opts)
{
    prob.validate();
    const int n = prob.size();
    const RateBounds& b = prob.bounds();

    // (beta_lo, delta_hi) is the most stable point of the box
    const Vector beta_best = uniform_corner(b, false, true, true);
    const Vector delta_best = uniform_corner(b, false, true, false);
    const double best = spectral_abscissa(prob.graph, beta_best, delta_best);
    auto infeasible = [&](const std::string& why) {
        std::ostringstream msg;
        msg << "allocation problem infeasible: " << why << '\n';
        print_corner_report(msg, feasibility_report(prob), prob.eps_bar);
        return InfeasibleError(msg.str());
    };
    if (best > -prob.eps_bar) {
        std::ostringstream why;
        why << "best corner abscissa " << best << " > -eps_bar = " << -prob.eps_bar;
        throw infeasible(why.str());
    }

    CentralizedResult res;
    res.build = build_gp(prob);
    const GpBuild& gb = res.build;

    // Start from the Perron certificate of the best corner, nudged into the box.
    Matrix m = stability_matrix(prob.graph, beta_best, delta_best);
    m.diagonal().array() += delta_best.maxCoeff();
    const Vector u0 = perron(m).vector;
    Vector beta0(n), delta0(n);
    for (int i = 0; i < n; ++i) {
        beta0(i) = b[i].beta_lo * std::pow(b[i].beta_hi / b[i].beta_lo, 0.05);
        delta0(i) = b[i].delta_hi - 0.05 * (b[i].delta_hi - b[i].delta_lo);
    }
    const Vector y0 = gb.encode(beta0, delta0, u0);

    SolveOptions so;
    so.tol = opts.tol;
    res.report = solve(gb.program, y0, so);
    if (res.report.status == SolveStatus::Infeasible)
        throw infeasible("no strictly feasible point");
    if (res.report.status != SolveStatus::Optimal) {
        std::ostringstream msg;
        msg << "centralized solve did not converge (kkt residual " << res.report.kkt_residual
            << " after " << res.report.iterations << " Newton steps)";
        throw ConvergenceError(msg.str());
    }
    res.allocation = gb.decode(res.report.minimizer, prob);
    finalize_allocation(res.allocation, prob);
    return res;
}

Allocation solve_centralized(const AllocationProblem& prob, const CentralizedOptions& opts)
{
    return solve_centralized_detailed(prob, opts).allocation;
}

void write_allocation_csv(std::ostream& os, const Allocation& a, const AllocationProblem& prob)
{
    os << "node,beta,delta,f_cost,g_cost\n";
    for (int i = 0; i < a.beta.size(); ++i) {
        const NodeCost c = prob.cost.node(i);
        os << i << ',' << format_number(a.beta(i)) << ',' << format_number(a.delta(i)) << ','
           << format_number(vaccine_cost(c, a.beta(i))) << ','
           << format_number(antidote_cost(c, a.delta(i))) << '\n';
    }
    os << "# summary,total_cost=" << format_number(a.total_cost)
       << ",abscissa=" << format_number(a.abscissa) << ",eps_bar=" << format_number(prob.eps_bar)
       << '\n';
}

Allocation read_allocation_csv(std::istream& is)
{
    std::string line;
    bool header = false;
    std::vector<double> beta, delta;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            if (line.rfind("node,beta,delta", 0) != 0)
                throw IoError("allocation csv: missing header");
            header = true;
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() < 3)
            throw IoError("allocation csv: short row");
        const auto node = static_cast<std::size_t>(parse_number(cells[0]));
        if (node != beta.size())
            throw IoError("allocation csv: rows must list nodes 0..n-1 in order");
        beta.push_back(parse_number(cells[1]));
        delta.push_back(parse_number(cells[2]));
    }
    if (!header)
        throw IoError("allocation csv: empty input");
    Allocation a;
    a.beta = Eigen::Map<Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    a.delta = Eigen::Map<Vector>(delta.data(), static_cast<Eigen::Index>(delta.size()));
    a.u = Vector::Ones(a.beta.size());
    return a;
}

} // namespace sisalloc
