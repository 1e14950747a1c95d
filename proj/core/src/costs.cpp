#include "sisalloc/costs.hpp"

#include <cmath>
#include <sstream>

#include "sisalloc/errors.hpp"

namespace sisalloc {

namespace {

// exp/log round trips may land a few ulps outside the box
constexpr double kBoundSlack = 1e-12;

bool within(double x, double lo, double hi)
{
    return x >= lo - kBoundSlack * std::abs(lo) && x <= hi + kBoundSlack * std::abs(hi);
}

} // namespace

void NodeBounds::validate() const
{
    if (!(beta_lo > 0.0 && beta_lo <= beta_hi))
        throw DomainError("bounds must satisfy 0 < beta_lo <= beta_hi");
    if (!(delta_lo > 0.0 && delta_lo <= delta_hi && delta_hi < 1.0))
        throw DomainError("bounds must satisfy 0 < delta_lo <= delta_hi < 1");
}

RateBounds RateBounds::shared(int n, const NodeBounds& b)
{
    return RateBounds{std::vector<NodeBounds>(static_cast<std::size_t>(n), b)};
}

void RateBounds::validate() const
{
    for (const auto& b : nodes)
        b.validate();
}

std::string to_string(CostKind kind)
{
    switch (kind) {
    case CostKind::NormalizedQuasiconvex:
        return "normalized";
    case CostKind::ReciprocalMonomial:
        return "reciprocal";
    }
    return "?";
}

CostKind cost_kind_from_string(const std::string& text)
{
    if (text == "normalized")
        return CostKind::NormalizedQuasiconvex;
    if (text == "reciprocal")
        return CostKind::ReciprocalMonomial;
    throw DomainError("unknown cost kind '" + text + "' (expected normalized|reciprocal)");
}

Derivs NodeCost::vaccine_unchecked(double beta) const
{
    const double inv = 1.0 / beta;
    if (kind == CostKind::ReciprocalMonomial)
        return {inv, -inv * inv, 2.0 * inv * inv * inv};
    // a degenerate interval leaves nothing to buy
    const double span = 1.0 / bounds.beta_lo - 1.0 / bounds.beta_hi;
    if (span == 0.0)
        return {};
    return {(inv - 1.0 / bounds.beta_hi) / span, -inv * inv / span, 2.0 * inv * inv * inv / span};
}

Derivs NodeCost::antidote_unchecked(double delta) const
{
    const double inv = 1.0 / (1.0 - delta);
    if (kind == CostKind::ReciprocalMonomial)
        return {inv, inv * inv, 2.0 * inv * inv * inv};
    const double base = 1.0 / (1.0 - bounds.delta_lo);
    const double span = 1.0 / (1.0 - bounds.delta_hi) - base;
    if (span == 0.0)
        return {};
    return {(inv - base) / span, inv * inv / span, 2.0 * inv * inv * inv / span};
}

double vaccine_cost(const NodeCost& cost, double beta)
{
    if (!within(beta, cost.bounds.beta_lo, cost.bounds.beta_hi)) {
        std::ostringstream msg;
        msg << "vaccine_cost: beta=" << beta << " outside [" << cost.bounds.beta_lo << ", "
            << cost.bounds.beta_hi << "]";
        throw DomainError(msg.str());
    }
    return cost.vaccine_unchecked(beta).value;
}

double antidote_cost(const NodeCost& cost, double delta)
{
    if (!within(delta, cost.bounds.delta_lo, cost.bounds.delta_hi)) {
        std::ostringstream msg;
        msg << "antidote_cost: delta=" << delta << " outside [" << cost.bounds.delta_lo << ", "
            << cost.bounds.delta_hi << "]";
        throw DomainError(msg.str());
    }
    return cost.antidote_unchecked(delta).value;
}

LogDomainCost log_domain_cost(const NodeCost& cost, double y_beta, double y_delta)
{
    const double beta = std::exp(y_beta);
    const double delta = std::exp(y_delta);
    if (!within(beta, cost.bounds.beta_lo, cost.bounds.beta_hi)
        || !within(delta, cost.bounds.delta_lo, cost.bounds.delta_hi))
        throw DomainError("log_domain_cost: point outside the feasible box");

    // d/dy h(e^y) = h' e^y,  d2/dy2 h(e^y) = h'' e^2y + h' e^y
    const Derivs f = cost.vaccine_unchecked(beta);
    const Derivs g = cost.antidote_unchecked(delta);
    LogDomainCost out;
    out.value = f.value + g.value;
    out.gradient = {f.d1 * beta, g.d1 * delta};
    out.hessian_diag = {f.d2 * beta * beta + f.d1 * beta, g.d2 * delta * delta + g.d1 * delta};
    return out;
}

double total_cost(const CostModel& model, const Eigen::VectorXd& beta,
                  const Eigen::VectorXd& delta)
{
    if (beta.size() != model.size() || delta.size() != model.size())
        throw DomainError("total_cost: vector sizes do not match the cost model");
    double sum = 0.0;
    for (int i = 0; i < model.size(); ++i) {
        const NodeCost c = model.node(i);
        sum += vaccine_cost(c, beta(i)) + antidote_cost(c, delta(i));
    }
    return sum;
}

} // namespace sisalloc
