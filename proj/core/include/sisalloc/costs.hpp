#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sisalloc {

/// Feasible rate interval of a single node.
struct NodeBounds {
    double beta_lo = 0.0;
    double beta_hi = 0.0;
    double delta_lo = 0.0;
    double delta_hi = 0.0;

    /// 0 < beta_lo <= beta_hi, 0 < delta_lo <= delta_hi < 1.
    void validate() const;
    bool operator==(const NodeBounds&) const = default;
};

/// Per-node bounds; `shared` builds the homogeneous case.
struct RateBounds {
    std::vector<NodeBounds> nodes;

    static RateBounds shared(int n, const NodeBounds& b);
    int size() const { return static_cast<int>(nodes.size()); }
    const NodeBounds& operator[](int i) const { return nodes[static_cast<std::size_t>(i)]; }
    void validate() const;
    bool operator==(const RateBounds&) const = default;
};

enum class CostKind {
    /// f = (1/b - 1/b_hi) / (1/b_lo - 1/b_hi),
    /// g = (1/(1-d) - 1/(1-d_lo)) / (1/(1-d_hi) - 1/(1-d_lo)).
    NormalizedQuasiconvex,
    /// f = 1/b, g = 1/(1-d).
    ReciprocalMonomial,
};

std::string to_string(CostKind kind);
CostKind cost_kind_from_string(const std::string& text);

/// Value and first two derivatives of a scalar function.
struct Derivs {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Cost functions of one node. The unchecked evaluators are valid on the
/// whole natural domain (b > 0, d < 1) and are what the solvers use; the
/// checked ones enforce the feasible interval.
struct NodeCost {
    CostKind kind = CostKind::NormalizedQuasiconvex;
    NodeBounds bounds;

    Derivs vaccine_unchecked(double beta) const;
    Derivs antidote_unchecked(double delta) const;
};

struct CostModel {
    CostKind kind = CostKind::NormalizedQuasiconvex;
    RateBounds bounds;

    NodeCost node(int i) const { return NodeCost{kind, bounds[i]}; }
    int size() const { return bounds.size(); }
};

/// Decreasing in beta. Throws DomainError outside [beta_lo, beta_hi].
double vaccine_cost(const NodeCost& cost, double beta);
/// Increasing in delta. Throws DomainError outside [delta_lo, delta_hi].
double antidote_cost(const NodeCost& cost, double delta);

struct LogDomainCost {
    double value = 0.0;
    Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
    /// The Hessian is diagonal because the two terms are separable.
    Eigen::Vector2d hessian_diag = Eigen::Vector2d::Zero();
};

/// f(e^y_beta) + g(e^y_delta) with exact gradient and Hessian in
/// (y_beta, y_delta). Convex for both cost kinds.
LogDomainCost log_domain_cost(const NodeCost& cost, double y_beta, double y_delta);

/// Total investment sum_i f_i(beta_i) + g_i(delta_i) (bounds checked).
double total_cost(const CostModel& model, const Eigen::VectorXd& beta,
                  const Eigen::VectorXd& delta);

} // namespace sisalloc
