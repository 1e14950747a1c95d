#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sisalloc/centralized.hpp"
#include "sisalloc/convex.hpp"
#include "sisalloc/errors.hpp"

using namespace sisalloc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LseConstraint single_term(const Vector& a, double b)
{
    LseConstraint c;
    c.a = a.transpose();
    c.b = Vector::Constant(1, b);
    return c;
}

// minimize sum_k exp(-y_k)
ObjectiveFn sum_exp_neg(int d)
{
    return [d](const Vector& y, Vector* g, Matrix* h) {
        const Vector e = (-y.array()).exp().matrix();
        if (g)
            *g = -e;
        if (h) {
            h->setZero(d, d);
            h->diagonal() = e;
        }
        return e.sum();
    };
}

void check_optimal_invariants(const ConvexProgram& p, const SolveReport& r, double tol)
{
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.kkt_residual <= tol);
    CHECK(p.max_violation(r.minimizer) <= 1e-8);
    for (std::size_t k = 1; k < r.outer_objectives.size(); ++k)
        CHECK(r.outer_objectives[k] <= r.outer_objectives[k - 1] + 1e-12);
}

} // namespace

TEST_CASE("exp(-y) subject to y <= 0 ends on the boundary")
{
    auto p = ConvexProgram::unconstrained(1, sum_exp_neg(1));
    p.inequalities.push_back(single_term(Vector::Ones(1), 0.0));
    const auto r = solve(p, Vector::Constant(1, -1.0));
    check_optimal_invariants(p, r, 1e-8);
    CHECK(r.minimizer(0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
    CHECK(r.objective_value == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("unconstrained quadratic")
{
    auto p = ConvexProgram::unconstrained(1, [](const Vector& y, Vector* g, Matrix* h) {
        if (g)
            *g = Vector::Constant(1, 2.0 * (y(0) - 3.0));
        if (h)
            *h = Matrix::Constant(1, 1, 2.0);
        return (y(0) - 3.0) * (y(0) - 3.0);
    });
    const auto r = solve(p, Vector::Zero(1));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.minimizer(0) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("two-variable GP is symmetric and matches a grid search")
{
    auto p = ConvexProgram::unconstrained(2, sum_exp_neg(2));
    p.inequalities.push_back(single_term(Vector::Ones(2), 0.0));
    const auto r = solve(p, Vector::Constant(2, -1.0));
    check_optimal_invariants(p, r, 1e-8);
    CHECK(std::abs(r.minimizer(0)) <= 1e-6);
    CHECK(std::abs(r.minimizer(1)) <= 1e-6);

    double best = kInf;
    for (int i = -2000; i <= 2000; ++i) {
        const double y1 = i * 1e-3;
        const double y2 = -y1;  // the constraint is active at the optimum
        best = std::min(best, std::exp(-y1) + std::exp(-y2));
    }
    CHECK(std::abs(r.objective_value - best) <= 1e-6);
}

TEST_CASE("equality and box constraints")
{
    // minimize exp(-y0) + exp(-y1) + exp(-y2)  s.t. y0 + y1 + y2 = 0, y2 <= -0.5
    auto p = ConvexProgram::unconstrained(3, sum_exp_neg(3));
    p.eq_a = Matrix::Ones(1, 3);
    p.eq_b = Vector::Zero(1);
    p.upper(2) = -0.5;
    const auto r = solve(p, Vector{{1.0, 0.0, -1.0}});
    check_optimal_invariants(p, r, 1e-8);
    CHECK(r.minimizer(2) == doctest::Approx(-0.5).epsilon(1e-7));
    CHECK(r.minimizer(0) == doctest::Approx(0.25).epsilon(1e-7));
    CHECK(r.minimizer(1) == doctest::Approx(0.25).epsilon(1e-7));
}

TEST_CASE("pinned coordinates")
{
    auto p = ConvexProgram::unconstrained(2, sum_exp_neg(2));
    p.lower(0) = p.upper(0) = 0.3;
    p.upper(1) = 1.0;
    const auto r = solve(p, Vector{{0.0, 0.0}});
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.minimizer(0) == 0.3);
    CHECK(r.minimizer(1) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("dimension <= 3 programs match fine grids")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        // minimize w0 e^{-y0} + w1 e^{-y1} s.t. log(e^{y0 + c0} + e^{y1 + c1}) <= 0
        const double w0 = 1.0 + 0.5 * u(rng), w1 = 1.0 + 0.5 * u(rng);
        const double c0 = 0.5 * u(rng), c1 = 0.5 * u(rng);
        auto p = ConvexProgram::unconstrained(2, [w0, w1](const Vector& y, Vector* g, Matrix* h) {
            const double e0 = w0 * std::exp(-y(0)), e1 = w1 * std::exp(-y(1));
            if (g)
                *g = Vector{{-e0, -e1}};
            if (h) {
                h->setZero(2, 2);
                (*h)(0, 0) = e0;
                (*h)(1, 1) = e1;
            }
            return e0 + e1;
        });
        LseConstraint c;
        c.a = Matrix::Identity(2, 2);
        c.b = Vector{{c0, c1}};
        p.inequalities.push_back(c);
        const auto r = solve(p, Vector::Constant(2, -3.0));
        check_optimal_invariants(p, r, 1e-8);

        // on the active boundary y1 = log(1 - e^{y0 + c0}) - c1
        double best = kInf;
        for (int i = 1; i < 400000; ++i) {
            const double s = i / 400000.0;  // e^{y0 + c0}
            const double y0 = std::log(s) - c0;
            const double y1 = std::log(1.0 - s) - c1;
            best = std::min(best, w0 * std::exp(-y0) + w1 * std::exp(-y1));
        }
        CHECK(r.objective_value <= best + 1e-8);
        CHECK(r.objective_value >= best - 1e-6);
    }
}

TEST_CASE("infeasible program reports Infeasible")
{
    auto p = ConvexProgram::unconstrained(1, sum_exp_neg(1));
    p.inequalities.push_back(single_term(Vector::Ones(1), 0.0));   // y <= 0
    p.lower(0) = 1.0;                                                 // y >= 1
    const auto r = solve(p, Vector::Zero(1));
    CHECK(r.status == SolveStatus::Infeasible);
    CHECK_THROWS_AS(phase_one(p, Vector::Zero(1)), InfeasibleError);

    auto q = ConvexProgram::unconstrained(2, sum_exp_neg(2));
    q.eq_a = Matrix::Ones(2, 2);
    q.eq_b = Vector{{0.0, 1.0}};
    CHECK(solve(q, Vector::Zero(2)).status == SolveStatus::Infeasible);
}

TEST_CASE("phase_one finds strictly feasible points")
{
    auto p = ConvexProgram::unconstrained(1, sum_exp_neg(1));
    p.inequalities.push_back(single_term(Vector::Ones(1), 0.0));
    const Vector y = phase_one(p, Vector::Constant(1, 5.0));
    CHECK(y(0) < 0.0);
    CHECK(p.inequalities[0].value(y) <= -1e-6);

    auto boxed = ConvexProgram::unconstrained(2, sum_exp_neg(2));
    boxed.lower = Vector{{0.0, -1.0}};
    boxed.upper = Vector{{1.0, 2.0}};
    const Vector inside = phase_one(boxed, Vector{{7.0, -9.0}});
    CHECK(strictly_feasible(boxed, inside));
    const Vector kept = phase_one(boxed, Vector{{0.5, 0.5}});
    CHECK(kept == Vector{{0.5, 0.5}});

    const auto free = ConvexProgram::unconstrained(2, sum_exp_neg(2));
    CHECK(phase_one(free, Vector{{3.0, -4.0}}) == Vector{{3.0, -4.0}});
}

TEST_CASE("phase_one on an allocation program over a 3-cycle")
{
    DirectedGraph g(3);
    for (int i = 0; i < 3; ++i)
        g.set_edge(i, (i + 1) % 3, 1.0);
    const AllocationProblem prob{
        g, CostModel{CostKind::NormalizedQuasiconvex, RateBounds::shared(3, {0.1, 0.6, 0.2, 0.8})},
        0.1};
    const GpBuild gb = build_gp(prob);
    const Vector guess = gb.encode(Vector::Constant(3, 0.6), Vector::Constant(3, 0.2),
                                   Vector::Ones(3));
    const Vector y = phase_one(gb.program, guess);
    CHECK(strictly_feasible(gb.program, y));
    for (const auto& c : gb.program.inequalities)
        CHECK(c.value(y) <= -1e-6);
    CHECK(std::abs(y.head(3).sum()) <= 1e-9);
}

TEST_CASE("LSE gradients and Hessians match finite differences")
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 100; ++rep) {
        LseConstraint c;
        c.a.resize(4, 5);
        c.b.resize(4);
        for (Eigen::Index k = 0; k < c.a.size(); ++k)
            c.a.data()[k] = nd(rng);
        for (int k = 0; k < 4; ++k)
            c.b(k) = nd(rng);
        Vector y(5);
        for (int k = 0; k < 5; ++k)
            y(k) = nd(rng);
        Vector g;
        Matrix h;
        c.evaluate(y, g, &h);
        const auto f = [&](const Vector& z) { return c.value(z); };
        CHECK(oracle::relative_error(g, oracle::fd_gradient(f, y)) <= 1e-6);
        for (int k = 0; k < 5; ++k) {
            const auto gk = [&](const Vector& z) {
                Vector gz;
                c.evaluate(z, gz, nullptr);
                return gz(k);
            };
            const Vector col = oracle::fd_gradient(gk, y);
            CHECK(oracle::relative_error(h.col(k), col, 1e-3) <= 1e-6);
        }
    }
}

TEST_CASE("program validation")
{
    auto p = ConvexProgram::unconstrained(2, sum_exp_neg(2));
    p.lower(0) = 1.0;
    p.upper(0) = 0.0;
    CHECK_THROWS_AS(p.validate(), InfeasibleError);
    auto q = ConvexProgram::unconstrained(2, sum_exp_neg(2));
    q.inequalities.push_back(single_term(Vector::Ones(3), 0.0));
    CHECK_THROWS_AS(q.validate(), DomainError);
    CHECK(to_string(SolveStatus::MaxIter) == "max-iter");
}
