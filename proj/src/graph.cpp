#include "gsagcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "gsagcn/errors.hpp"
#include "gsagcn/numkernel.hpp"

namespace gsagcn {

Graph::Graph(std::size_t n, std::vector<Edge> edges) : n_(n), adj_(n) {
    for (auto& [u, v] : edges) {
        if (u >= n || v >= n) {
            throw InputError("Graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                             ") out of range for " + std::to_string(n) + " nodes");
        }
        if (u == v) throw InputError("Graph: self-loop on node " + std::to_string(u));
        if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
    for (const auto& [u, v] : edges_) {
        adj_[u].push_back(v);
        adj_[v].push_back(u);
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

bool Graph::has_edge(std::size_t u, std::size_t v) const {
    if (u >= n_ || v >= n_ || u == v) return false;
    const auto& nb = adj_[u];
    return std::binary_search(nb.begin(), nb.end(), v);
}

Mat Graph::adjacency_matrix() const {
    Mat a(n_, n_);
    for (const auto& [u, v] : edges_) a(u, v) = a(v, u) = 1.0;
    return a;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
    if (g.num_nodes() == 0) throw InputError("normalize_adjacency: empty graph");
    return normalize_adjacency_blocks({&g});
}

NormalizedAdjacency normalize_adjacency_blocks(const std::vector<const Graph*>& graphs) {
    std::size_t total = 0;
    for (const Graph* g : graphs) total += g->num_nodes();
    NormalizedAdjacency na;
    na.mat = Mat(total, total);
    na.degrees.assign(total, 0.0);
    std::size_t offset = 0;
    for (const Graph* g : graphs) {
        const std::size_t n = g->num_nodes();
        for (std::size_t i = 0; i < n; ++i) {
            const double d = static_cast<double>(g->degree(i) + 1);
            na.degrees[offset + i] = d;
            na.mat(offset + i, offset + i) = 1.0 / d;
        }
        // 1/sqrt(d_u d_v) in one rounding, so equal degrees give exact values.
        for (const auto& [u, v] : g->edges()) {
            const double w = 1.0 / std::sqrt(na.degrees[offset + u] * na.degrees[offset + v]);
            na.mat(offset + u, offset + v) = w;
            na.mat(offset + v, offset + u) = w;
        }
        offset += n;
    }
    return na;
}

Mat complement_adjacency(const Graph& g, ComplementDiagonal diag) {
    const std::size_t n = g.num_nodes();
    Mat c(n, n, 1.0);
    for (const auto& [u, v] : g.edges()) c(u, v) = c(v, u) = 0.0;
    if (diag == ComplementDiagonal::exclude) {
        for (std::size_t i = 0; i < n; ++i) c(i, i) = 0.0;
    }
    return c;
}

Mat shifted_laplacian(const Graph& g, double eps) {
    if (!(eps > 0.0)) throw ParameterError("shifted_laplacian: eps must be > 0");
    const std::size_t n = g.num_nodes();
    Mat m = Mat::identity(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0 + eps;
    for (const auto& [u, v] : g.edges()) {
        const double w = 1.0 / std::sqrt(static_cast<double>((g.degree(u) + 1) * (g.degree(v) + 1)));
        m(u, v) = m(v, u) = w;
    }
    return m;
}

std::vector<double> principal_direction(const NormalizedAdjacency& na) {
    std::vector<double> e(na.size());
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = std::sqrt(na.degrees[i]);
        s += e[i] * e[i];
    }
    s = std::sqrt(s);
    for (double& x : e) x /= s;
    return e;
}

bool is_connected(const NormalizedAdjacency& na) {
    const Mat& m = na.mat;
    const std::size_t n = m.rows();
    if (n == 0) return false;
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n; ++v) {
            if (!seen[v] && m(u, v) != 0.0) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

namespace {

double deflated_gap_jacobi(const NormalizedAdjacency& na, const std::vector<double>& e) {
    Mat d = na.mat;
    const std::size_t n = na.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d(i, j) -= e[i] * e[j];
    const auto eig = sym_eigenvalues(d);
    return std::max(std::abs(eig.front()), std::abs(eig.back()));
}

}  // namespace

double spectral_gap(const NormalizedAdjacency& na) {
    const std::size_t n = na.size();
    if (n == 0) throw InputError("spectral_gap: empty graph");
    if (!is_connected(na)) {
        throw ConnectivityError(
            "spectral_gap: graph is disconnected; analyse each component separately "
            "(e.g. largest_component)");
    }
    if (n == 1) return 0.0;

    const auto e = principal_direction(na);
    auto deflate = [&](Mat& v) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += e[i] * v(i, 0);
        for (std::size_t i = 0; i < n; ++i) v(i, 0) -= dot * e[i];
    };

    std::mt19937_64 gen(0x6a09e667f3bcc908ULL);
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat v(n, 1);
    for (double& x : v.data()) x = nd(gen);
    deflate(v);
    double vn = frobenius_norm(v);
    for (double& x : v.data()) x /= vn;

    constexpr double kTol = 1e-14;
    constexpr std::size_t kMaxIters = 50000;
    double prev = -1.0;
    for (std::size_t it = 0; it < kMaxIters; ++it) {
        Mat w = matmul(na.mat, v);
        deflate(w);
        const double lambda = frobenius_norm(w);
        if (lambda <= 1e-13) return lambda;
        if (prev >= 0.0 && std::abs(lambda - prev) <= kTol * lambda) return lambda;
        prev = lambda;
        for (std::size_t i = 0; i < n; ++i) v(i, 0) = w(i, 0) / lambda;
    }
    // Nearly degenerate top of the deflated spectrum; fall back to a direct
    // eigendecomposition where that is affordable.
    if (n <= 512) return deflated_gap_jacobi(na, e);
    return prev;
}

std::vector<std::size_t> connected_components(const Graph& g) {
    const std::size_t n = g.num_nodes();
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> comp(n, kUnset);
    std::size_t next = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] != kUnset) continue;
        std::vector<std::size_t> stack{s};
        comp[s] = next;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v : g.neighbors(u)) {
                if (comp[v] == kUnset) {
                    comp[v] = next;
                    stack.push_back(v);
                }
            }
        }
        ++next;
    }
    return comp;
}

bool is_connected(const Graph& g) {
    if (g.num_nodes() == 0) return false;
    const auto comp = connected_components(g);
    return std::all_of(comp.begin(), comp.end(), [](std::size_t c) { return c == 0; });
}

Subgraph induced_subgraph(const Graph& g, const std::vector<std::size_t>& nodes) {
    constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(g.num_nodes(), kAbsent);
    for (std::size_t i = 0; i < nodes.size(); ++i) index.at(nodes[i]) = i;
    std::vector<Graph::Edge> edges;
    for (const auto& [u, v] : g.edges()) {
        if (index[u] != kAbsent && index[v] != kAbsent) edges.emplace_back(index[u], index[v]);
    }
    return {Graph(nodes.size(), std::move(edges)), nodes};
}

Subgraph largest_component(const Graph& g) {
    if (g.num_nodes() == 0) return {};
    const auto comp = connected_components(g);
    const std::size_t ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
    std::vector<std::size_t> sizes(ncomp, 0);
    for (std::size_t c : comp) ++sizes[c];
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < comp.size(); ++i)
        if (comp[i] == best) nodes.push_back(i);
    return induced_subgraph(g, nodes);
}

void write_edge_list(std::ostream& out, const Graph& g) {
    for (const auto& [u, v] : g.edges()) out << u << '\t' << v << '\n';
}

Graph read_edge_list(std::istream& in, std::size_t n) {
    std::vector<Graph::Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        long long u = -1, v = -1;
        std::string rest;
        if (!(ss >> u >> v) || (ss >> rest) || u < 0 || v < 0) {
            throw ParseError("edge list: expected 'u<TAB>v'", lineno);
        }
        edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    }
    return Graph(n, std::move(edges));
}

}  // namespace gsagcn
