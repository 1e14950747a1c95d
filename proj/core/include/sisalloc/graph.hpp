#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sisalloc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Weighted directed contact network.
///
/// Stored as the n-by-n adjacency matrix A with a(i, j) > 0 iff the edge
/// v_j -> v_i exists, i.e. row i lists the in-neighbours of node i.
/// Self-loops are not allowed.
class DirectedGraph {
public:
    DirectedGraph() = default;
    explicit DirectedGraph(int n);
    /// Throws DomainError on negative entries, a non-square matrix or a
    /// nonzero diagonal.
    explicit DirectedGraph(Matrix weights);

    int size() const { return static_cast<int>(weights_.rows()); }
    const Matrix& weights() const { return weights_; }
    double weight(int i, int j) const { return weights_(i, j); }
    bool has_edge(int from, int to) const { return weights_(to, from) > 0.0; }

    /// Sets a(to, from) = w. Passing w = 0 removes the edge.
    void set_edge(int from, int to, double w);

    int edge_count() const;
    std::vector<int> in_neighbors(int i) const;
    std::vector<int> out_neighbors(int i) const;
    /// Union of in- and out-neighbours: the undirected support of A.
    std::vector<int> neighbors(int i) const;

    bool operator==(const DirectedGraph& other) const { return weights_ == other.weights_; }

private:
    Matrix weights_;
};

struct WeightRange {
    double lo = 1.0;
    double hi = 1.0;
};

/// True iff every ordered pair of nodes is joined by a directed path.
bool is_strongly_connected(const DirectedGraph& g);

/// Same test on the off-diagonal support of an arbitrary square matrix.
bool is_irreducible(const Matrix& m);

/// Directed Erdos-Renyi draws, repeated with fresh sub-seeds until the
/// result is strongly connected. Throws InfeasibleError after
/// `max_attempts` failed draws.
DirectedGraph random_strongly_connected(int n, double p, std::uint64_t seed,
                                        WeightRange weights = {},
                                        int max_attempts = 1000);

// Edge-list text format:
//   n <count>
//   i j w        (one line per nonzero a_ij, 0-based, row-major order)
// Weights are written in shortest round-trip form, so write/read is exact.
void write_edge_list(std::ostream& os, const DirectedGraph& g);
DirectedGraph read_edge_list(std::istream& is);
void save_edge_list(const std::string& path, const DirectedGraph& g);
DirectedGraph load_edge_list(const std::string& path);

} // namespace sisalloc
