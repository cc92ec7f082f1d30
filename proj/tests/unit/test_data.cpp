#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <doctest.h>

#include "gsagcn/data.hpp"
#include "gsagcn/errors.hpp"
#include "oracles.hpp"

using namespace gsagcn;
namespace fs = std::filesystem;

namespace {

const char* kContent =
    "p31\t1\t0\t0\t1\tTheory\n"
    "p7\t0\t1\t0\t0\tNeural_Networks\n"
    "p99\t0\t0\t1\t1\tTheory\n"
    "p12\t1\t1\t0\t0\tRule_Learning\n"
    "p5\t0\t0\t0\t1\tNeural_Networks\n";

const char* kCites =
    "p31\tp7\n"
    "p7\tp31\n"       // duplicate in the other direction
    "p99\tp12\n"
    "p12\tghost\n"    // unknown id
    "p5\tp5\n"        // self-citation
    "p5\tp31\n";

std::size_t count(const std::vector<bool>& v) { return static_cast<std::size_t>(std::count(v.begin(), v.end(), true)); }

bool disjoint(const SplitMasks& m) {
    for (std::size_t i = 0; i < m.train.size(); ++i)
        if (int(m.train[i]) + int(m.val[i]) + int(m.test[i]) > 1) return false;
    return true;
}

std::vector<int> labels_of(std::size_t per, std::size_t classes) {
    std::vector<int> l;
    for (std::size_t i = 0; i < per * classes; ++i) l.push_back(static_cast<int>(i % classes));
    return l;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gsagcn_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("load_planetoid: fields, label order, merged and skipped edges") {
    std::istringstream c(kContent), e(kCites);
    const auto load = load_planetoid(c, e);
    const NodeDataset& ds = load.dataset;
    CHECK(ds.graph.num_nodes() == 5);
    CHECK(ds.x.cols() == 4);
    CHECK(ds.num_classes == 3);
    CHECK(ds.class_names == std::vector<std::string>{"Theory", "Neural_Networks", "Rule_Learning"});
    CHECK(ds.labels == std::vector<int>{0, 1, 0, 2, 1});
    CHECK(ds.node_ids.front() == "p31");
    CHECK(ds.x(2, 2) == 1.0);
    CHECK(ds.x(2, 0) == 0.0);
    CHECK(load.skipped_citations == 1);
    CHECK(load.self_citations == 1);
    CHECK(ds.graph.edges() == std::vector<Graph::Edge>{{0, 1}, {0, 4}, {2, 3}});
    CHECK(ds.masks.train.empty());
}

TEST_CASE("load_planetoid: line order does not matter") {
    std::vector<std::string> lines;
    std::istringstream src(kContent);
    for (std::string l; std::getline(src, l);) lines.push_back(l);
    std::reverse(lines.begin(), lines.end());
    std::string content;
    for (const auto& l : lines) content += l + "\n";
    std::istringstream c1(kContent), e1(kCites), c2(content), e2(std::string("p5\tp31\np99\tp12\np31\tp7\n"));
    const auto a = load_planetoid(c1, e1).dataset;
    const auto b = load_planetoid(c2, e2).dataset;
    auto edge_set = [](const NodeDataset& ds) {
        std::set<std::pair<std::string, std::string>> s;
        for (auto [u, v] : ds.graph.edges()) s.insert(std::minmax(ds.node_ids[u], ds.node_ids[v]));
        return s;
    };
    CHECK(edge_set(a) == edge_set(b));
    std::map<std::string, std::vector<double>> fa, fb;
    for (std::size_t i = 0; i < 5; ++i) {
        fa[a.node_ids[i]] = {a.x.row(i).begin(), a.x.row(i).end()};
        fb[b.node_ids[i]] = {b.x.row(i).begin(), b.x.row(i).end()};
        CHECK(a.class_names[a.labels[i]] == b.class_names[b.labels[std::find(b.node_ids.begin(), b.node_ids.end(), a.node_ids[i]) - b.node_ids.begin()]]);
    }
    CHECK(fa == fb);
}

TEST_CASE("load_planetoid: malformed input") {
    {
        std::istringstream c("a\t1\t0\tX\nb\t1\tbad\tY\n"), e("");
        try {
            (void)load_planetoid(c, e);
            FAIL("expected ParseError");
        } catch (const ParseError& err) {
            CHECK(err.line() == 2);
        }
    }
    {
        std::istringstream c("a\t1\t0\tX\nb\t1\tY\n"), e("");
        CHECK_THROWS_AS(load_planetoid(c, e), FormatError);
    }
    {
        std::istringstream c("a\t1\t0\tX\n"), e("a\n");
        CHECK_THROWS_AS(load_planetoid(c, e), ParseError);
    }
    CHECK_THROWS_AS(load_planetoid(fs::path("/nonexistent/x.content"), fs::path("/nonexistent/x.cites")), InputError);
}

TEST_CASE("load_planetoid: from files") {
    const fs::path dir = scratch("planetoid");
    std::ofstream(dir / "toy.content") << kContent;
    std::ofstream(dir / "toy.cites") << kCites;
    const auto load = load_planetoid(dir / "toy.content", dir / "toy.cites");
    CHECK(load.dataset.graph.num_edges() == 3);
    fs::remove_all(dir);
}

TEST_CASE("make_semi_split: counts, disjointness, seeds") {
    const auto labels = labels_of(100, 7);
    const auto m = make_semi_split(labels, 20, 500, 60, 0);
    CHECK(count(m.train) == 140);
    CHECK(count(m.val) == 500);
    CHECK(count(m.test) == 60);
    CHECK(disjoint(m));
    // Seed 0: first 20 of each class by node id.
    for (std::size_t i = 0; i < 140; ++i) CHECK(m.train[i]);
    CHECK_FALSE(m.train[140]);

    std::set<std::vector<bool>> distinct;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        const auto ms = make_semi_split(labels, 20, 500, 60, s);
        CHECK(count(ms.train) == 140);
        CHECK(count(ms.val) == 500);
        CHECK(count(ms.test) == 60);
        CHECK(disjoint(ms));
        std::vector<std::size_t> per(7, 0);
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (ms.train[i]) ++per[static_cast<std::size_t>(labels[i])];
        for (auto p : per) CHECK(p == 20);
        distinct.insert(ms.train);
        CHECK(make_semi_split(labels, 20, 500, 60, s).train == ms.train);
    }
    CHECK(distinct.size() == 10);
}

TEST_CASE("make_semi_split: insufficient nodes name the class") {
    std::vector<int> labels(30, 0);
    labels[0] = 1;
    try {
        (void)make_semi_split(labels, 5, 1, 1, 0);
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("class 1") != std::string::npos);
    }
    CHECK_THROWS_AS(make_semi_split(labels_of(10, 2), 5, 100, 0, 0), InputError);
}

TEST_CASE("make_full_split: arithmetic, stratification, determinism") {
    const auto m = make_full_split(labels_of(5, 2), 0.6, 0.2, 3);
    CHECK(count(m.train) == 6);
    CHECK(count(m.val) == 2);
    CHECK(count(m.test) == 2);
    CHECK(disjoint(m));
    CHECK(make_full_split(labels_of(5, 2), 0.6, 0.2, 3).train == m.train);

    std::vector<int> labels;
    for (int c = 0; c < 4; ++c)
        for (int k = 0; k < 13 + 7 * c; ++k) labels.push_back(c);
    const auto s = make_full_split(labels, 0.6, 0.2, 11);
    CHECK(disjoint(s));
    const double global = 0.6;
    for (int c = 0; c < 4; ++c) {
        std::size_t members = 0, tr = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) {
                ++members;
                tr += s.train[i];
            }
        CHECK(std::abs(static_cast<double>(tr) - global * static_cast<double>(members)) <= 1.0);
    }
    CHECK_THROWS_AS(make_full_split(labels, 0.8, 0.3, 0), ParameterError);
}

TEST_CASE("gen_feature_sbm: degenerate limits") {
    SynthConfig c;
    c.p_in = 1.0;
    c.p_out = 0.0;
    c.feature_noise = 0.0;
    c.n = 12;
    const auto ds = gen_feature_sbm(c);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = i + 1; j < 12; ++j) {
            const bool same = ds.labels[i] == ds.labels[j];
            CHECK(ds.graph.has_edge(i, j) == same);
            if (same) CHECK(std::equal(ds.x.row(i).begin(), ds.x.row(i).end(), ds.x.row(j).begin()));
        }
}

TEST_CASE("gen_feature_sbm: sizes, balance, masks, purity") {
    SynthConfig c;
    const auto ds = gen_feature_sbm(c);
    CHECK(ds.graph.num_nodes() == 60);
    CHECK_NOTHROW(ds.validate());
    std::vector<std::size_t> per(3, 0);
    for (int l : ds.labels) ++per[static_cast<std::size_t>(l)];
    CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
    CHECK(disjoint(ds.masks));
    CHECK(count(ds.masks.train) + count(ds.masks.val) + count(ds.masks.test) == 60);
    const auto again = gen_feature_sbm(c);
    CHECK(again.x == ds.x);
    CHECK(again.graph == ds.graph);
    c.seed = 1;
    CHECK_FALSE(gen_feature_sbm(c).x == ds.x);

    SynthConfig uneven;
    uneven.n = 61;
    std::vector<std::size_t> pu(3, 0);
    for (int l : gen_feature_sbm(uneven).labels) ++pu[static_cast<std::size_t>(l)];
    CHECK(*std::max_element(pu.begin(), pu.end()) - *std::min_element(pu.begin(), pu.end()) <= 1);

    SynthConfig bad;
    bad.p_in = 1.5;
    CHECK_THROWS_AS(gen_feature_sbm(bad), ParameterError);
}

TEST_CASE("gen_feature_sbm: intra-class edge count within 3 sigma (binomial)") {
    SynthConfig c;
    c.n = 90;
    double pairs = 0.0;
    for (std::size_t k = 0; k < 3; ++k) pairs += oracle::binomial(30, 2);
    const double mean = c.p_in * pairs;
    const double sigma = std::sqrt(pairs * c.p_in * (1.0 - c.p_in));
    double total = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        c.seed = s;
        const auto ds = gen_feature_sbm(c);
        std::size_t intra = 0;
        for (auto [u, v] : ds.graph.edges()) intra += ds.labels[u] == ds.labels[v];
        CHECK(std::abs(static_cast<double>(intra) - mean) <= 3.0 * sigma);
        total += static_cast<double>(intra);
    }
    CHECK(std::abs(total / 20.0 - mean) <= 3.0 * sigma / std::sqrt(20.0));
}

TEST_CASE("gen_feature_sbm: cross-class boost raises cross edges") {
    SynthConfig c;
    auto cross = [](const NodeDataset& ds) {
        std::size_t k = 0;
        for (auto [u, v] : ds.graph.edges()) k += ds.labels[u] != ds.labels[v];
        return k;
    };
    const auto base = cross(gen_feature_sbm(c));
    c.cross_class_edge_boost = 0.2;
    CHECK(cross(gen_feature_sbm(c)) > base + 50);
}

TEST_CASE("gen_graph_classification: construction") {
    GraphSynthConfig c;
    const auto ds = gen_graph_classification(c);
    CHECK_NOTHROW(ds.validate());
    CHECK(ds.num_classes == 8);
    CHECK(ds.items.size() == 8 * 40);
    CHECK(ds.feature_dim == c.feature_dim + c.max_nodes);
    std::map<int, std::array<std::size_t, 3>> per;
    for (const auto& it : ds.items) {
        ++per[it.label][static_cast<std::size_t>(it.split)];
        const auto topo = static_cast<Topology>(it.label / 2);
        const std::size_t n = it.graph.num_nodes();
        if (topo == Topology::triangle) {
            CHECK(n == 3);
            CHECK(it.graph.num_edges() == 3);
        } else {
            CHECK(n >= 4);
            CHECK(n <= 8);
        }
        if (topo == Topology::path) CHECK(it.graph.num_edges() == n - 1);
        if (topo == Topology::star) CHECK(it.graph.degree(0) == n - 1);
        if (topo == Topology::clique) CHECK(it.graph.num_edges() == n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i) {
            double onehot = 0.0;
            for (std::size_t j = c.feature_dim; j < ds.feature_dim; ++j) onehot += it.x(i, j);
            CHECK(onehot == 1.0);
            CHECK(it.x(i, c.feature_dim + it.graph.degree(i)) == 1.0);
        }
    }
    for (const auto& [label, counts] : per) {
        CHECK(counts[0] == 24);
        CHECK(counts[1] == 8);
        CHECK(counts[2] == 8);
    }
    CHECK(std::string(topology_name(Topology::star)) == "star");

    GraphSynthConfig clean = c;
    clean.feature_noise = 0.0;
    for (const auto& it : gen_graph_classification(clean).items) {
        const bool a = it.label % 2 == 0;
        CHECK(it.x(0, 0) == (a ? 1.0 : 0.0));
        CHECK(it.x(0, 1) == (a ? 0.0 : 1.0));
    }
    CHECK(gen_graph_classification(c).items[17].x == ds.items[17].x);
}

TEST_CASE("row_normalize") {
    const Mat r = row_normalize(Mat{{1, 3}, {0, 0}, {2, 2}});
    CHECK(r == Mat{{0.25, 0.75}, {0, 0}, {0.5, 0.5}});
}

TEST_CASE("export / import round trip") {
    const fs::path dir = scratch("export");
    SynthConfig c;
    c.seed = 9;
    const auto ds = gen_feature_sbm(c);
    export_dataset(ds, dir);
    CHECK(fs::exists(dir / "edges.tsv"));
    CHECK(fs::exists(dir / "features.csv"));
    CHECK(fs::exists(dir / "masks.csv"));
    const auto back = import_dataset(dir);
    CHECK(back.graph == ds.graph);
    CHECK(back.x == ds.x);
    CHECK(back.labels == ds.labels);
    CHECK(back.num_classes == ds.num_classes);
    CHECK(back.masks.train == ds.masks.train);
    CHECK(back.masks.val == ds.masks.val);
    CHECK(back.masks.test == ds.masks.test);

    std::ifstream f(dir / "features.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "node_id,f1,f2,f3,f4,f5,f6,f7,f8,label");

    std::ofstream(dir / "features.csv") << "node_id,f1,label\n0,1.0\n";
    CHECK_THROWS_AS(import_dataset(dir), ParseError);
    fs::remove_all(dir);
}

TEST_CASE("NodeDataset::validate catches overlapping masks") {
    SynthConfig c;
    auto ds = gen_feature_sbm(c);
    const auto it = std::find(ds.masks.val.begin(), ds.masks.val.end(), true);
    ds.masks.train[static_cast<std::size_t>(it - ds.masks.val.begin())] = true;
    CHECK_THROWS_AS(ds.validate(), InputError);
}

}  // TEST_SUITE
