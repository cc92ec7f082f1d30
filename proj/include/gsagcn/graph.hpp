#ifndef GSAGCN_GRAPH_HPP
#define GSAGCN_GRAPH_HPP

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include "gsagcn/mat.hpp"

namespace gsagcn {

/// Undirected simple graph. Edges are stored once as sorted (u < v) pairs.
class Graph {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    Graph() = default;
    /// Accepts pairs in either orientation and merges duplicates.
    /// Throws InputError on out-of-range ids or self-loops.
    Graph(std::size_t n, std::vector<Edge> edges);

    std::size_t num_nodes() const noexcept { return n_; }
    std::size_t num_edges() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& neighbors(std::size_t v) const { return adj_.at(v); }
    std::size_t degree(std::size_t v) const { return adj_.at(v).size(); }
    bool has_edge(std::size_t u, std::size_t v) const;

    /// Dense 0/1 adjacency matrix A (zero diagonal).
    Mat adjacency_matrix() const;

    bool operator==(const Graph& other) const {
        return n_ == other.n_ && edges_ == other.edges_;
    }

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> adj_;
};

/// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
struct NormalizedAdjacency {
    Mat mat;
    /// Degree counts including the self-loop.
    std::vector<double> degrees;

    std::size_t size() const noexcept { return degrees.size(); }
};

enum class ComplementDiagonal { include, exclude };

NormalizedAdjacency normalize_adjacency(const Graph& g);

/// Block-diagonal normalized adjacency of several graphs laid out one after
/// another (graph-classification batches).
NormalizedAdjacency normalize_adjacency_blocks(const std::vector<const Graph*>& graphs);

/// Indicator of "no edge". Diagonal is 1 by default since A has a zero diagonal.
Mat complement_adjacency(const Graph& g, ComplementDiagonal diag = ComplementDiagonal::include);

/// (1 + eps) I + D^{-1/2} A D^{-1/2}, D from A + I. Positive definite for eps > 0.
Mat shifted_laplacian(const Graph& g, double eps);

/// Unit principal eigenvector D^{1/2} 1 / ||D^{1/2} 1|| of the normalized adjacency.
std::vector<double> principal_direction(const NormalizedAdjacency& na);

/// Largest eigenvalue magnitude of the normalized adjacency after deflating
/// the principal eigenvalue 1. Throws ConnectivityError on disconnected graphs.
double spectral_gap(const NormalizedAdjacency& na);

bool is_connected(const Graph& g);
/// Connectivity of the nonzero pattern of a normalized adjacency.
bool is_connected(const NormalizedAdjacency& na);
/// Component id per node, numbered in order of first node appearance.
std::vector<std::size_t> connected_components(const Graph& g);

/// Induced subgraph on the largest connected component (ties: lowest first node).
struct Subgraph {
    Graph graph;
    /// nodes[i] is the original id of subgraph node i (ascending).
    std::vector<std::size_t> nodes;
};
Subgraph largest_component(const Graph& g);
Subgraph induced_subgraph(const Graph& g, const std::vector<std::size_t>& nodes);

/// One `u<TAB>v` line per edge, 0-based, sorted.
void write_edge_list(std::ostream& out, const Graph& g);
/// Reads the format above; `n` comes from the companion feature file.
Graph read_edge_list(std::istream& in, std::size_t n);

}  // namespace gsagcn

#endif  // GSAGCN_GRAPH_HPP
