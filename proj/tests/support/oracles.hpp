// Independent reference computations for the unit and acceptance tests.
// Everything here is written from the definitions, without calling the
// library routine under test.
#ifndef GSAGCN_TEST_ORACLES_HPP
#define GSAGCN_TEST_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gsagcn/graph.hpp"
#include "gsagcn/mat.hpp"

namespace oracle {

using gsagcn::Graph;
using gsagcn::Mat;

inline Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Mat m(r, c);
    for (double& v : m.data()) v = nd(rng);
    return m;
}

inline Graph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    std::vector<Graph::Edge> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng)) e.emplace_back(i, j);
    return Graph(n, e);
}

/// Random connected graph: a random spanning path plus G(n, p) extras.
inline Graph random_connected_graph(std::size_t n, double p, std::mt19937_64& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::bernoulli_distribution coin(p);
    std::vector<Graph::Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(perm[i], perm[i + 1]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng)) e.emplace_back(i, j);
    return Graph(n, e);
}

inline Eigen::MatrixXd to_eigen(const Mat& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

inline Mat from_eigen(const Eigen::MatrixXd& e) {
    Mat m(e.rows(), e.cols());
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
    return m;
}

inline Mat naive_matmul(const Mat& a, const Mat& b) {
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline Mat naive_transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double fro(const Mat& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

inline std::vector<double> singular_values(const Mat& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
    const Eigen::VectorXd s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

inline std::vector<double> sym_eigenvalues(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
    const Eigen::VectorXd v = es.eigenvalues();
    return {v.data(), v.data() + v.size()};
}

/// Dense D^{-1/2}(A+I)D^{-1/2} built entry by entry.
inline Mat normalized_adjacency(const Graph& g) {
    const std::size_t n = g.num_nodes();
    std::vector<double> deg(n, 1.0);
    for (auto [u, v] : g.edges()) {
        deg[u] += 1.0;
        deg[v] += 1.0;
    }
    Mat a(n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0 / deg[i];
    for (auto [u, v] : g.edges()) {
        a(u, v) = 1.0 / std::sqrt(deg[u] * deg[v]);
        a(v, u) = a(u, v);
    }
    return a;
}

/// Central difference of a scalar function of one matrix entry.
inline double central_diff(const std::function<double()>& f, double& x, double h = 1e-6) {
    const double x0 = x;
    x = x0 + h;
    const double fp = f();
    x = x0 - h;
    const double fm = f();
    x = x0;
    return (fp - fm) / (2.0 * h);
}

inline double rel_err(double analytic, double numeric, double floor = 1e-8) {
    const double diff = std::abs(analytic - numeric);
    if (diff <= floor) return 0.0;
    return diff / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Least-squares distance of h from span(e) (x) R^C: solve min_k ||h - e k^T||.
inline double lsq_subspace_distance(const Mat& h, const std::vector<double>& e) {
    Eigen::MatrixXd E(e.size(), 1);
    for (std::size_t i = 0; i < e.size(); ++i) E(i, 0) = e[i];
    const Eigen::MatrixXd H = to_eigen(h);
    const Eigen::MatrixXd K = E.colPivHouseholderQr().solve(H);
    return (H - E * K).norm();
}

/// Unnormalized D^{1/2} 1 direction.
inline std::vector<double> sqrt_degree_vector(const Graph& g) {
    std::vector<double> e(g.num_nodes(), 1.0);
    for (auto [u, v] : g.edges()) {
        e[u] += 1.0;
        e[v] += 1.0;
    }
    for (double& v : e) v = std::sqrt(v);
    return e;
}

inline double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

}  // namespace oracle

#endif
