#include "sisalloc/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "sisalloc/errors.hpp"

namespace sisalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPhaseOneMargin = 1e-6;
// half-width of the artificial box that keeps the phase-I problem bounded
constexpr double kPhaseOneRadius = 1e3;

// y = base + basis * w spans {y : C y = d}; basis has orthonormal columns.
struct AffineParam {
    Vector base;
    Matrix basis;

    Vector project(const Vector& y) const
    {
        return base + basis * (basis.transpose() * (y - base));
    }
};

// Moves pinned coordinates (lower == upper) into the equality block.
ConvexProgram pin_fixed(const ConvexProgram& in)
{
    ConvexProgram p = in;
    std::vector<int> pinned;
    for (int k = 0; k < p.dimension; ++k)
        if (std::isfinite(p.lower(k)) && p.lower(k) == p.upper(k))
            pinned.push_back(k);
    if (pinned.empty())
        return p;
    const Eigen::Index rows = p.eq_a.rows();
    Matrix a = Matrix::Zero(rows + static_cast<Eigen::Index>(pinned.size()), p.dimension);
    Vector b(a.rows());
    if (rows > 0) {
        a.topRows(rows) = p.eq_a;
        b.head(rows) = p.eq_b;
    }
    for (std::size_t r = 0; r < pinned.size(); ++r) {
        const int k = pinned[r];
        a(rows + static_cast<Eigen::Index>(r), k) = 1.0;
        b(rows + static_cast<Eigen::Index>(r)) = p.lower(k);
        p.lower(k) = -kInf;
        p.upper(k) = kInf;
    }
    p.eq_a = std::move(a);
    p.eq_b = std::move(b);
    return p;
}

AffineParam affine_param(const ConvexProgram& p)
{
    AffineParam ap;
    const int d = p.dimension;
    if (p.eq_a.rows() == 0) {
        ap.base = Vector::Zero(d);
        ap.basis = Matrix::Identity(d, d);
        return ap;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(p.eq_a.transpose());
    const Eigen::Index rank = qr.rank();
    const Matrix q = qr.householderQ();
    ap.basis = q.rightCols(d - rank);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(p.eq_a);
    ap.base = cod.solve(p.eq_b);
    const double resid = (p.eq_a * ap.base - p.eq_b).lpNorm<Eigen::Infinity>();
    if (resid > 1e-9 * std::max(1.0, p.eq_b.lpNorm<Eigen::Infinity>()))
        throw InfeasibleError("equality constraints are inconsistent");
    return ap;
}

int barrier_terms(const ConvexProgram& p)
{
    int m = static_cast<int>(p.inequalities.size());
    for (int k = 0; k < p.dimension; ++k) {
        m += std::isfinite(p.lower(k)) ? 1 : 0;
        m += std::isfinite(p.upper(k)) ? 1 : 0;
    }
    return m;
}

// phi_t(y) = t f(y) - sum log(-h_i) - sum log(box slacks)
class Barrier {
public:
    explicit Barrier(const ConvexProgram& p)
        : p_(p)
    {
    }

    bool value(const Vector& y, double t, double& out) const
    {
        double acc = 0.0;
        for (int k = 0; k < p_.dimension; ++k) {
            if (std::isfinite(p_.lower(k))) {
                const double s = y(k) - p_.lower(k);
                if (!(s > 0.0))
                    return false;
                acc -= std::log(s);
            }
            if (std::isfinite(p_.upper(k))) {
                const double s = p_.upper(k) - y(k);
                if (!(s > 0.0))
                    return false;
                acc -= std::log(s);
            }
        }
        for (const auto& c : p_.inequalities) {
            const double h = c.value(y);
            if (!(h < 0.0))
                return false;
            acc -= std::log(-h);
        }
        const double f = p_.objective(y, nullptr, nullptr);
        if (!std::isfinite(f))
            return false;
        out = t * f + acc;
        return std::isfinite(out);
    }

    bool derivs(const Vector& y, double t, double& val, Vector& grad, Matrix& hess) const
    {
        const int d = p_.dimension;
        Vector fg(d);
        Matrix fh(d, d);
        const double f = p_.objective(y, &fg, &fh);
        if (!std::isfinite(f))
            return false;
        val = t * f;
        grad = t * fg;
        hess = t * fh;
        for (int k = 0; k < d; ++k) {
            if (std::isfinite(p_.lower(k))) {
                const double s = y(k) - p_.lower(k);
                if (!(s > 0.0))
                    return false;
                val -= std::log(s);
                grad(k) -= 1.0 / s;
                hess(k, k) += 1.0 / (s * s);
            }
            if (std::isfinite(p_.upper(k))) {
                const double s = p_.upper(k) - y(k);
                if (!(s > 0.0))
                    return false;
                val -= std::log(s);
                grad(k) += 1.0 / s;
                hess(k, k) += 1.0 / (s * s);
            }
        }
        Vector cg(d);
        Matrix ch(d, d);
        for (const auto& c : p_.inequalities) {
            const double h = c.evaluate(y, cg, &ch);
            if (!(h < 0.0))
                return false;
            const double inv = -1.0 / h;
            val -= std::log(-h);
            grad += inv * cg;
            hess += inv * ch;
            hess.noalias() += (inv * inv) * cg * cg.transpose();
        }
        return std::isfinite(val);
    }

private:
    const ConvexProgram& p_;
};

struct CenterResult {
    int steps = 0;
    bool exhausted = false;
    double lambda2 = 0.0;  ///< squared Newton decrement at the returned point
};

// Damped Newton on phi_t restricted to the affine set; y stays strictly
// feasible throughout.
CenterResult center(const Barrier& barrier, const AffineParam& ap, Vector& y, double t,
                    const SolveOptions& opts, int budget)
{
    CenterResult res;
    const Eigen::Index d = y.size();
    double val = 0.0;
    Vector grad(d);
    Matrix hess(d, d);
    while (res.steps < budget) {
        if (!barrier.derivs(y, t, val, grad, hess))
            throw Error("barrier: iterate left the domain");
        const Vector gw = ap.basis.transpose() * grad;
        if (gw.size() == 0) {
            res.lambda2 = 0.0;
            return res;
        }
        Matrix hw = ap.basis.transpose() * hess * ap.basis;
        hw = 0.5 * (hw + hw.transpose());

        Vector dw;
        double reg = 0.0;
        const double scale = std::max(1.0, hw.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 30; ++attempt) {
            Matrix h = hw;
            if (reg > 0.0)
                h.diagonal().array() += reg;
            Eigen::LDLT<Matrix> ldlt(h);
            if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                dw = ldlt.solve(-gw);
                if (dw.allFinite() && dw.dot(gw) < 0.0)
                    break;
            }
            dw.resize(0);
            reg = reg == 0.0 ? 1e-12 * scale : reg * 10.0;
        }
        if (dw.size() == 0)
            dw = -gw;  // steepest descent as a last resort

        // lambda^2/2 estimates phi_t - inf phi_t, which cannot be resolved
        // below the rounding noise of phi_t itself
        const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(val);
        const double lambda2 = -gw.dot(dw);
        res.lambda2 = lambda2;
        if (lambda2 * 0.5 <= std::max(opts.newton_tol, noise))
            return res;

        const Vector dy = ap.basis * dw;
        const double slope = grad.dot(dy);
        double step = 1.0;
        double trial = 0.0;
        while (!barrier.value(y + step * dy, t, trial)) {
            step *= opts.ls_beta;
            if (step < 1e-20)
                return res;
        }
        while (trial > val + opts.ls_alpha * step * slope + noise) {
            step *= opts.ls_beta;
            if (step < 1e-20 || !barrier.value(y + step * dy, t, trial))
                return res;  // no progress possible at working precision
        }
        y += step * dy;
        ++res.steps;
        if (!(trial < val - noise))
            return res;  // no measurable decrease left
    }
    res.exhausted = true;
    return res;
}

SolveReport barrier_solve(const ConvexProgram& p, const AffineParam& ap, Vector y,
                          const SolveOptions& opts)
{
    const Barrier barrier(p);
    const int m = barrier_terms(p);
    const double root_m = std::sqrt(static_cast<double>(m));
    SolveReport rep;
    double t = m == 0 ? 1.0 : opts.t0;
    bool exhausted = false;
    // f(y) - p* <= (m + sqrt(m) lambda) / t for a point with Newton decrement lambda
    double bound = kInf;
    for (;;) {
        const auto c = center(barrier, ap, y, t, opts, opts.max_newton - rep.iterations);
        rep.iterations += c.steps;
        rep.outer_objectives.push_back(p.objective(y, nullptr, nullptr));
        bound = (static_cast<double>(m) + root_m * std::sqrt(std::max(c.lambda2, 0.0))) / t;
        if (c.exhausted) {
            exhausted = true;
            break;
        }
        if (m == 0 || bound < opts.tol)
            break;
        t *= opts.mu;
    }

    rep.minimizer = y;
    rep.objective_value = p.objective(y, nullptr, nullptr);
    rep.kkt_residual = m == 0 ? 0.0 : bound;
    if (m == 0 && !exhausted) {
        double val = 0.0;
        Vector grad(p.dimension);
        Matrix hess(p.dimension, p.dimension);
        barrier.derivs(y, t, val, grad, hess);
        rep.kkt_residual = (ap.basis.transpose() * grad).lpNorm<Eigen::Infinity>();
    }
    rep.inequality_duals.resize(static_cast<Eigen::Index>(p.inequalities.size()));
    for (std::size_t i = 0; i < p.inequalities.size(); ++i)
        rep.inequality_duals(static_cast<Eigen::Index>(i)) =
            1.0 / (t * -p.inequalities[i].value(y));
    rep.status = (!exhausted && rep.kkt_residual <= opts.tol) ? SolveStatus::Optimal
                                                              : SolveStatus::MaxIter;
    return rep;
}

double lse(const Matrix& a, const Vector& b, const Vector& y, Vector* weights)
{
    const Vector z = a * y + b;
    const double zmax = z.maxCoeff();
    const Vector e = (z.array() - zmax).exp().matrix();
    const double s = e.sum();
    if (weights)
        *weights = e / s;
    return zmax + std::log(s);
}

} // namespace

double LseConstraint::value(const Vector& y) const
{
    return lse(a, b, y, nullptr);
}

double LseConstraint::evaluate(const Vector& y, Vector& grad, Matrix* hess) const
{
    Vector w;
    const double h = lse(a, b, y, &w);
    grad.noalias() = a.transpose() * w;
    if (hess) {
        const Matrix wa = w.asDiagonal() * a;
        hess->noalias() = a.transpose() * wa;
        hess->noalias() -= grad * grad.transpose();
    }
    return h;
}

ConvexProgram ConvexProgram::unconstrained(int dimension, ObjectiveFn objective)
{
    ConvexProgram p;
    p.dimension = dimension;
    p.objective = std::move(objective);
    p.eq_a = Matrix::Zero(0, dimension);
    p.eq_b = Vector::Zero(0);
    p.lower = Vector::Constant(dimension, -kInf);
    p.upper = Vector::Constant(dimension, kInf);
    return p;
}

void ConvexProgram::validate() const
{
    if (dimension < 1)
        throw DomainError("program dimension must be positive");
    if (!objective)
        throw DomainError("program has no objective");
    if (lower.size() != dimension || upper.size() != dimension)
        throw DomainError("box dimension mismatch");
    if ((lower.array() > upper.array()).any())
        throw InfeasibleError("box has lower > upper");
    if (eq_a.cols() != dimension || eq_a.rows() != eq_b.size())
        throw DomainError("equality block dimension mismatch");
    if (!eq_a.allFinite() || !eq_b.allFinite())
        throw DomainError("equality data must be finite");
    for (const auto& c : inequalities) {
        if (c.a.cols() != dimension || c.a.rows() != c.b.size() || c.a.rows() == 0)
            throw DomainError("inequality dimension mismatch");
        if (!c.a.allFinite() || !c.b.allFinite())
            throw DomainError("inequality data must be finite");
    }
}

double ConvexProgram::max_violation(const Vector& y) const
{
    double v = -kInf;
    for (const auto& c : inequalities)
        v = std::max(v, c.value(y));
    for (int k = 0; k < dimension; ++k) {
        if (std::isfinite(lower(k)))
            v = std::max(v, lower(k) - y(k));
        if (std::isfinite(upper(k)))
            v = std::max(v, y(k) - upper(k));
    }
    if (eq_a.rows() > 0)
        v = std::max(v, (eq_a * y - eq_b).lpNorm<Eigen::Infinity>());
    return v;
}

std::string to_string(SolveStatus status)
{
    switch (status) {
    case SolveStatus::Optimal:
        return "optimal";
    case SolveStatus::MaxIter:
        return "max-iter";
    case SolveStatus::Infeasible:
        return "infeasible";
    }
    return "?";
}

bool strictly_feasible(const ConvexProgram& prog, const Vector& y, double eq_tol)
{
    for (int k = 0; k < prog.dimension; ++k) {
        const bool pinned = prog.lower(k) == prog.upper(k);
        if (pinned) {
            if (std::abs(y(k) - prog.lower(k)) > eq_tol)
                return false;
            continue;
        }
        if (!(y(k) > prog.lower(k) && y(k) < prog.upper(k)))
            return false;
    }
    for (const auto& c : prog.inequalities)
        if (!(c.value(y) < 0.0))
            return false;
    if (prog.eq_a.rows() > 0 && (prog.eq_a * y - prog.eq_b).lpNorm<Eigen::Infinity>() > eq_tol)
        return false;
    return true;
}

Vector phase_one(const ConvexProgram& prog, const Vector& guess)
{
    prog.validate();
    if (guess.size() != prog.dimension)
        throw DomainError("phase_one: guess dimension mismatch");
    const ConvexProgram p = pin_fixed(prog);
    const AffineParam ap = affine_param(p);
    const int d = p.dimension;
    const Vector y0 = ap.project(guess.cwiseMax(-kPhaseOneRadius).cwiseMin(kPhaseOneRadius));

    // Every inequality and finite box side becomes g(y) - s <= 0 in (y, s).
    std::vector<LseConstraint> cons;
    for (const auto& c : p.inequalities) {
        LseConstraint e;
        e.a.resize(c.a.rows(), d + 1);
        e.a.leftCols(d) = c.a;
        e.a.col(d).setConstant(-1.0);
        e.b = c.b;
        cons.push_back(std::move(e));
    }
    for (int k = 0; k < d; ++k) {
        for (int side = 0; side < 2; ++side) {
            const double bound = side == 0 ? p.lower(k) : p.upper(k);
            if (!std::isfinite(bound))
                continue;
            LseConstraint e;
            e.a = Matrix::Zero(1, d + 1);
            e.a(0, k) = side == 0 ? -1.0 : 1.0;
            e.a(0, d) = -1.0;
            e.b = Vector::Constant(1, side == 0 ? bound : -bound);
            cons.push_back(std::move(e));
        }
    }
    if (cons.empty())
        return y0;

    Vector z0(d + 1);
    z0.head(d) = y0;
    z0(d) = 0.0;
    double worst = -kInf;
    for (const auto& c : cons)
        worst = std::max(worst, c.value(z0));
    if (worst <= -kPhaseOneMargin * 10.0)
        return y0;

    ConvexProgram aux;
    aux.dimension = d + 1;
    aux.objective = [d](const Vector& z, Vector* grad, Matrix* hess) {
        if (grad) {
            grad->setZero(d + 1);
            (*grad)(d) = 1.0;
        }
        if (hess)
            hess->setZero(d + 1, d + 1);
        return z(d);
    };
    aux.inequalities = std::move(cons);
    aux.eq_a = Matrix::Zero(p.eq_a.rows(), d + 1);
    aux.eq_a.leftCols(d) = p.eq_a;
    aux.eq_b = p.eq_b;
    aux.lower.resize(d + 1);
    aux.upper.resize(d + 1);
    aux.lower.head(d) = y0.array() - kPhaseOneRadius;
    aux.upper.head(d) = y0.array() + kPhaseOneRadius;
    aux.lower(d) = -1.0;
    aux.upper(d) = kInf;
    z0(d) = std::max(worst + 1.0, -0.5);

    const AffineParam aux_ap = affine_param(aux);
    SolveOptions opts;
    opts.tol = 1e-9;
    const SolveReport rep = barrier_solve(aux, aux_ap, z0, opts);
    const Vector y = rep.minimizer.head(d);
    double achieved = -kInf;
    for (const auto& c : aux.inequalities) {
        Vector z(d + 1);
        z.head(d) = y;
        z(d) = 0.0;
        achieved = std::max(achieved, c.value(z));
    }
    if (!(achieved <= -kPhaseOneMargin))
        throw InfeasibleError("phase_one: no strictly feasible point (min max violation "
                              + std::to_string(achieved) + ")");
    return y;
}

SolveReport solve(const ConvexProgram& prog, const Vector& y0, const SolveOptions& opts)
{
    prog.validate();
    if (y0.size() != prog.dimension)
        throw DomainError("solve: start point dimension mismatch");
    const ConvexProgram p = pin_fixed(prog);
    const AffineParam ap = [&] {
        try {
            return affine_param(p);
        } catch (const InfeasibleError&) {
            return AffineParam{};
        }
    }();
    SolveReport infeasible;
    infeasible.status = SolveStatus::Infeasible;
    infeasible.minimizer = y0;
    infeasible.objective_value = kInf;
    infeasible.kkt_residual = kInf;
    if (ap.base.size() == 0)
        return infeasible;

    Vector y = ap.project(y0);
    Barrier barrier(p);
    double probe = 0.0;
    if (!barrier.value(y, 1.0, probe)) {
        try {
            y = phase_one(prog, y0);
        } catch (const InfeasibleError&) {
            return infeasible;
        }
        if (!barrier.value(y, 1.0, probe))
            return infeasible;  // feasible set misses the objective's domain
    }
    return barrier_solve(p, ap, y, opts);
}

} // namespace sisalloc
