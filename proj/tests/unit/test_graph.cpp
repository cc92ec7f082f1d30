#include <cmath>
#include <sstream>

#include <doctest.h>

#include "gsagcn/errors.hpp"
#include "gsagcn/graph.hpp"
#include "gsagcn/numkernel.hpp"
#include "oracles.hpp"

using namespace gsagcn;

TEST_SUITE("graph") {

TEST_CASE("Graph: canonical edges, duplicates merged, bad input rejected") {
    const Graph g(4, {{2, 1}, {1, 2}, {0, 3}});
    CHECK(g.num_edges() == 2);
    CHECK(g.edges() == std::vector<Graph::Edge>{{0, 3}, {1, 2}});
    CHECK(g.has_edge(3, 0));
    CHECK_FALSE(g.has_edge(0, 1));
    CHECK(g.degree(1) == 1);
    CHECK_THROWS_AS(Graph(3, {{0, 3}}), InputError);
    CHECK_THROWS_AS(Graph(3, {{1, 1}}), InputError);
}

TEST_CASE("normalize_adjacency: closed forms") {
    CHECK(normalize_adjacency(Graph(1, {})).mat == Mat{{1.0}});
    CHECK(normalize_adjacency(Graph(2, {{0, 1}})).mat == Mat{{0.5, 0.5}, {0.5, 0.5}});

    const auto star = normalize_adjacency(Graph(4, {{0, 1}, {0, 2}, {0, 3}}));
    CHECK(star.mat(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    for (std::size_t j = 1; j < 4; ++j) {
        CHECK(std::abs(star.mat(0, j) - 1.0 / (2.0 * std::sqrt(2.0))) <= 1e-15);
        CHECK(std::abs(star.mat(0, j) - 0.353553) <= 1e-6);
        CHECK(star.mat(j, j) == 0.5);
    }
    CHECK(star.degrees == std::vector<double>{4, 2, 2, 2});
}

TEST_CASE("normalize_adjacency: oracle, symmetry, spectrum and principal direction") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const Graph g = oracle::random_graph(9, 0.35, rng);
        const auto na = normalize_adjacency(g);
        CHECK(oracle::max_abs_diff(na.mat, oracle::normalized_adjacency(g)) <= 1e-15);
        CHECK(is_symmetric(na.mat, 1e-12));
        for (std::size_t i = 0; i < 9; ++i) CHECK(na.mat(i, i) == doctest::Approx(1.0 / na.degrees[i]));
        for (double v : oracle::sym_eigenvalues(na.mat)) CHECK(std::abs(v) <= 1.0 + 1e-9);
        const auto e = principal_direction(na);
        Mat ev(9, 1);
        for (std::size_t i = 0; i < 9; ++i) ev(i, 0) = e[i];
        CHECK(oracle::fro(subtract(matmul(na.mat, ev), ev)) <= 1e-10);
    }
}

TEST_CASE("normalize_adjacency_blocks is block diagonal") {
    const Graph a(2, {{0, 1}}), b(3, {{0, 1}, {1, 2}});
    const auto na = normalize_adjacency_blocks({&a, &b});
    REQUIRE(na.size() == 5);
    const Mat na_b = normalize_adjacency(b).mat;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double want = 0.0;
            if (i < 2 && j < 2) want = 0.5;
            if (i >= 2 && j >= 2) want = na_b(i - 2, j - 2);
            CHECK(na.mat(i, j) == want);
        }
}

TEST_CASE("complement_adjacency") {
    CHECK(complement_adjacency(Graph(3, {{0, 1}, {0, 2}, {1, 2}})) == Mat::identity(3));
    CHECK(complement_adjacency(Graph(2, {})) == Mat{{1, 1}, {1, 1}});
    const Graph path(3, {{0, 1}, {1, 2}});
    const Mat c = complement_adjacency(path);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const bool want = i == j || !path.has_edge(i, j);
            CHECK(c(i, j) == (want ? 1.0 : 0.0));
        }
    CHECK(c(0, 2) == 1.0);
    CHECK(complement_adjacency(path, ComplementDiagonal::exclude) == Mat{{0, 0, 1}, {0, 0, 0}, {1, 0, 0}});

    // complement + adjacency = all-ones matrix (I + L).
    std::mt19937_64 rng(8);
    const Graph g = oracle::random_graph(7, 0.4, rng);
    const Mat sum = add(complement_adjacency(g), g.adjacency_matrix());
    CHECK(sum == Mat(7, 7, 1.0));
}

TEST_CASE("shifted_laplacian") {
    CHECK(shifted_laplacian(Graph(3, {}), 0.5) == scale(Mat::identity(3), 1.5));
    const Mat two = shifted_laplacian(Graph(2, {{0, 1}}), 0.1);
    CHECK(two(0, 0) == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(two(0, 1) == 0.5);
    CHECK(sym_eig_extreme(two).min == doctest::Approx(0.6).epsilon(1e-12));
    CHECK_THROWS_AS(shifted_laplacian(Graph(2, {}), 0.0), ParameterError);
    CHECK_THROWS_AS(shifted_laplacian(Graph(2, {}), -1.0), ParameterError);

    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        const Graph g = oracle::random_graph(8, 0.5, rng);
        const Mat s = shifted_laplacian(g, 0.01);
        CHECK(oracle::sym_eigenvalues(s).front() > 0.0);
        CHECK(sym_eig_extreme(s).min > 0.0);
    }
}

TEST_CASE("spectral_gap: closed forms, oracle, and range") {
    CHECK(spectral_gap(normalize_adjacency(Graph(3, {{0, 1}, {0, 2}, {1, 2}}))) <= 1e-12);
    CHECK(spectral_gap(normalize_adjacency(Graph(2, {{0, 1}}))) <= 1e-12);

    const auto path = normalize_adjacency(Graph(3, {{0, 1}, {1, 2}}));
    auto ev = oracle::sym_eigenvalues(path.mat);
    std::sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    CHECK(std::abs(ev[0] - 1.0) <= 1e-12);
    CHECK(std::abs(spectral_gap(path) - std::abs(ev[1])) <= 1e-9);

    std::mt19937_64 rng(10);
    for (int rep = 0; rep < 10; ++rep) {
        const auto na = normalize_adjacency(oracle::random_connected_graph(12, 0.2, rng));
        auto v = oracle::sym_eigenvalues(na.mat);
        v.pop_back();  // the principal eigenvalue 1 is the largest
        double ref = 0.0;
        for (double x : v) ref = std::max(ref, std::abs(x));
        const double lam = spectral_gap(na);
        CHECK(std::abs(lam - ref) <= 1e-8);
        CHECK(lam >= 0.0);
        CHECK(lam < 1.0);
    }
}

TEST_CASE("spectral_gap: disconnected graph is rejected") {
    CHECK_THROWS_AS(spectral_gap(normalize_adjacency(Graph(3, {{0, 1}}))), ConnectivityError);
}

TEST_CASE("components and subgraphs") {
    const Graph g(7, {{0, 1}, {2, 3}, {3, 4}, {5, 6}});
    CHECK_FALSE(is_connected(g));
    CHECK(connected_components(g) == std::vector<std::size_t>{0, 0, 1, 1, 1, 2, 2});
    const auto lc = largest_component(g);
    CHECK(lc.nodes == std::vector<std::size_t>{2, 3, 4});
    CHECK(lc.graph == Graph(3, {{0, 1}, {1, 2}}));
    CHECK(is_connected(lc.graph));
    CHECK(is_connected(normalize_adjacency(lc.graph)));
    // Tie between two 2-node components: lowest first node wins.
    CHECK(largest_component(Graph(4, {{2, 3}, {0, 1}})).nodes == std::vector<std::size_t>{0, 1});
    const auto sub = induced_subgraph(g, {0, 1, 5});
    CHECK(sub.graph == Graph(3, {{0, 1}}));
}

TEST_CASE("edge list round trip and parse errors") {
    std::mt19937_64 rng(12);
    const Graph g = oracle::random_graph(10, 0.3, rng);
    std::stringstream s;
    write_edge_list(s, g);
    CHECK(read_edge_list(s, 10) == g);

    std::istringstream bad("0\t1\n1\tx\n");
    try {
        (void)read_edge_list(bad, 3);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream out_of_range("0\t5\n");
    CHECK_THROWS_AS(read_edge_list(out_of_range, 3), Error);
}

}  // TEST_SUITE
