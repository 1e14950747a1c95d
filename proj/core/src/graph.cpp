#include "sisalloc/graph.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "sisalloc/errors.hpp"
#include "sisalloc/io.hpp"

namespace sisalloc {

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementation.
double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<bool> reachable_from(const Matrix& m, int source, bool forward)
{
    const int n = static_cast<int>(m.rows());
    std::vector<bool> seen(n, false);
    std::vector<int> stack{source};
    seen[source] = true;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w = 0; w < n; ++w) {
            if (w == v || seen[w])
                continue;
            // forward: edge v -> w lives in m(w, v)
            const double entry = forward ? m(w, v) : m(v, w);
            if (entry != 0.0) {
                seen[w] = true;
                stack.push_back(w);
            }
        }
    }
    return seen;
}

} // namespace

DirectedGraph::DirectedGraph(int n)
    : weights_(Matrix::Zero(n, n))
{
    if (n < 0)
        throw DomainError("graph size must be nonnegative");
}

DirectedGraph::DirectedGraph(Matrix weights)
    : weights_(std::move(weights))
{
    if (weights_.rows() != weights_.cols())
        throw DomainError("adjacency matrix must be square");
    for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
        if (weights_(i, i) != 0.0)
            throw DomainError("self-loops are not allowed");
        for (Eigen::Index j = 0; j < weights_.cols(); ++j)
            if (!(weights_(i, j) >= 0.0))
                throw DomainError("adjacency weights must be nonnegative");
    }
}

void DirectedGraph::set_edge(int from, int to, double w)
{
    if (from == to)
        throw DomainError("self-loops are not allowed");
    if (from < 0 || to < 0 || from >= size() || to >= size())
        throw DomainError("node index out of range");
    if (!(w >= 0.0))
        throw DomainError("edge weight must be nonnegative");
    weights_(to, from) = w;
}

int DirectedGraph::edge_count() const
{
    return static_cast<int>((weights_.array() > 0.0).count());
}

std::vector<int> DirectedGraph::in_neighbors(int i) const
{
    std::vector<int> out;
    for (int j = 0; j < size(); ++j)
        if (weights_(i, j) > 0.0)
            out.push_back(j);
    return out;
}

std::vector<int> DirectedGraph::out_neighbors(int i) const
{
    std::vector<int> out;
    for (int j = 0; j < size(); ++j)
        if (weights_(j, i) > 0.0)
            out.push_back(j);
    return out;
}

std::vector<int> DirectedGraph::neighbors(int i) const
{
    std::vector<int> out;
    for (int j = 0; j < size(); ++j)
        if (j != i && (weights_(i, j) > 0.0 || weights_(j, i) > 0.0))
            out.push_back(j);
    return out;
}

bool is_irreducible(const Matrix& m)
{
    if (m.rows() != m.cols())
        throw DomainError("matrix must be square");
    if (m.rows() <= 1)
        return true;
    for (bool forward : {true, false}) {
        const auto seen = reachable_from(m, 0, forward);
        for (bool s : seen)
            if (!s)
                return false;
    }
    return true;
}

bool is_strongly_connected(const DirectedGraph& g)
{
    return is_irreducible(g.weights());
}

DirectedGraph random_strongly_connected(int n, double p, std::uint64_t seed,
                                        WeightRange weights, int max_attempts)
{
    if (n < 2)
        throw DomainError("random graph needs n >= 2");
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError("edge probability must lie in [0, 1]");
    if (!(weights.lo > 0.0 && weights.lo <= weights.hi))
        throw DomainError("weight range must satisfy 0 < lo <= hi");

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(attempt)};
        std::mt19937_64 rng(seq);
        DirectedGraph g(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j)
                    continue;
                if (unit_uniform(rng) < p) {
                    const double u = unit_uniform(rng);
                    g.set_edge(j, i, weights.lo + u * (weights.hi - weights.lo));
                }
            }
        }
        if (is_strongly_connected(g))
            return g;
    }
    std::ostringstream msg;
    msg << "no strongly connected digraph found after " << max_attempts
        << " draws (n=" << n << ", p=" << p << "); p is likely too small";
    throw InfeasibleError(msg.str());
}

void write_edge_list(std::ostream& os, const DirectedGraph& g)
{
    os << "n " << g.size() << '\n';
    for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < g.size(); ++j)
            if (g.weight(i, j) > 0.0)
                os << i << ' ' << j << ' ' << format_number(g.weight(i, j)) << '\n';
}

DirectedGraph read_edge_list(std::istream& is)
{
    std::string line;
    int n = -1;
    int lineno = 0;
    DirectedGraph g;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        if (n < 0) {
            std::string tag;
            if (!(ls >> tag >> n) || tag != "n" || n < 0)
                throw IoError("edge list: expected header 'n <count>'");
            g = DirectedGraph(n);
            continue;
        }
        int i = 0, j = 0;
        std::string wtext;
        if (!(ls >> i >> j >> wtext))
            throw IoError("edge list: malformed line " + std::to_string(lineno));
        double w = 0.0;
        auto [ptr, ec] = std::from_chars(wtext.data(), wtext.data() + wtext.size(), w);
        if (ec != std::errc() || ptr != wtext.data() + wtext.size())
            throw IoError("edge list: bad weight on line " + std::to_string(lineno));
        if (i < 0 || j < 0 || i >= n || j >= n || i == j || !(w > 0.0))
            throw IoError("edge list: invalid edge on line " + std::to_string(lineno));
        // line "i j w" stores a_ij = w, the edge j -> i
        g.set_edge(j, i, w);
    }
    if (n < 0)
        throw IoError("edge list: missing header");
    return g;
}

void save_edge_list(const std::string& path, const DirectedGraph& g)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open " + path + " for writing");
    write_edge_list(os, g);
}

DirectedGraph load_edge_list(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open " + path);
    return read_edge_list(is);
}

} // namespace sisalloc
