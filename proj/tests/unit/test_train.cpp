#include <cmath>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "gsagcn/errors.hpp"
#include "gsagcn/numkernel.hpp"
#include "gsagcn/rng.hpp"
#include "gsagcn/train.hpp"
#include "oracles.hpp"

using namespace gsagcn;

namespace {

// Two classes separated along the first feature; edges only inside classes.
NodeDataset separable_fixture() {
    NodeDataset ds;
    const std::size_t n = 40;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 0.3);
    std::vector<Graph::Edge> edges;
    ds.x = Mat(n, 3);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = i < n / 2 ? 0 : 1;
        ds.x(i, 0) = ds.labels[i] == 0 ? -1.0 : 1.0;
        ds.x(i, 1) = nd(rng);
        ds.x(i, 2) = nd(rng);
        if (i + 1 < n && (i + 1) != n / 2) edges.emplace_back(i, i + 1);
    }
    ds.graph = Graph(n, edges);
    ds.num_classes = 2;
    ds.masks.train.assign(n, false);
    ds.masks.val.assign(n, false);
    ds.masks.test.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 5 < 3) ds.masks.train[i] = true;
        else if (i % 5 == 3) ds.masks.val[i] = true;
        else ds.masks.test[i] = true;
    }
    return ds;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("cross_entropy_masked: closed forms") {
    const auto u = cross_entropy_masked(Mat(3, 4, 0.7), {0, 1, 3}, {true, true, true});
    CHECK(u.loss == doctest::Approx(std::log(4.0)).epsilon(1e-14));

    const auto sat = cross_entropy_masked(Mat{{50, 0, 0}}, {0}, {true});
    CHECK(sat.loss < 1e-20);

    const auto two = cross_entropy_masked(Mat{{0, std::log(3.0)}}, {0}, {true});
    CHECK(std::abs(two.loss - std::log(4.0)) <= 1e-15);
    CHECK(std::abs(two.loss + std::log(0.25)) <= 1e-15);
}

TEST_CASE("cross_entropy_masked: unmasked rows get zero gradient, finite differences") {
    std::mt19937_64 rng(7);
    Mat logits = oracle::random_mat(6, 4, rng, 2.0);
    const std::vector<int> labels{0, 3, 2, 1, 1, 0};
    const std::vector<bool> mask{true, false, true, true, false, true};
    const auto lg = cross_entropy_masked(logits, labels, mask);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(lg.grad(1, c) == 0.0);
        CHECK(lg.grad(4, c) == 0.0);
    }
    auto loss = [&] { return cross_entropy_masked(logits, labels, mask).loss; };
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double num = oracle::central_diff(loss, logits.data()[i], 1e-5);
        CHECK(oracle::rel_err(lg.grad.data()[i], num, 1e-10) < 1e-6);
    }
}

TEST_CASE("cross_entropy_masked / evaluate: errors") {
    CHECK_THROWS_AS(cross_entropy_masked(Mat(2, 2), {0, 1}, {false, false}), InputError);
    CHECK_THROWS_AS(cross_entropy_masked(Mat(2, 2), {0, 2}, {true, true}), InputError);
    CHECK_THROWS_AS(cross_entropy_masked(Mat(2, 2), {0}, {true, true}), ShapeError);
    CHECK_THROWS_AS(evaluate(Mat(2, 2), {0, 1}, {false, false}), InputError);
}

TEST_CASE("evaluate: closed forms and counting oracle") {
    CHECK(evaluate(Mat{{1, 0}, {0, 1}, {1, 0}}, {0, 1, 0}, {true, true, true}) == 1.0);
    CHECK(evaluate(Mat(4, 3, 2.5), {0, 0, 0, 0}, {true, true, true, true}) == 1.0);
    CHECK(argmax_row(Mat{{1, 3, 3}}, 0) == 1);

    std::mt19937_64 rng(9);
    const Mat logits = oracle::random_mat(10, 3, rng);
    std::vector<int> labels(10);
    std::vector<bool> mask(10);
    for (std::size_t i = 0; i < 10; ++i) {
        labels[i] = static_cast<int>(rng() % 3);
        mask[i] = rng() % 3 != 0;
    }
    std::size_t hit = 0, total = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        if (!mask[i]) continue;
        ++total;
        std::size_t best = 0;
        for (std::size_t c = 1; c < 3; ++c)
            if (logits(i, c) > logits(i, best)) best = c;
        hit += best == static_cast<std::size_t>(labels[i]);
    }
    CHECK(evaluate(logits, labels, mask) == static_cast<double>(hit) / static_cast<double>(total));
}

TEST_CASE("adam_step: hand evaluation of the first step") {
    std::vector<GsaLayerParams> p(1);
    p[0].w = Mat{{0.5}};
    std::vector<GsaLayerParams> g(1);
    g[0].w = Mat{{1.0}};
    AdamState st;
    adam_step(p, g, st, 0.01, 0.0, 1);
    // m_hat = 1, v_hat = 1 -> update = -lr / (1 + 1e-8).
    CHECK(std::abs(p[0].w(0, 0) - (0.5 - 0.01 / (1.0 + 1e-8))) <= 1e-16);
    CHECK(st.m[0].w(0, 0) == doctest::Approx(0.1));
    CHECK(st.v[0].w(0, 0) == doctest::Approx(0.001));
    CHECK_THROWS_AS(adam_step(p, g, st, 0.01, 0.0, 0), ParameterError);
}

TEST_CASE("adam_step: zero gradients shrink only through weight decay") {
    std::vector<GsaLayerParams> p(1), g(1);
    p[0].w = Mat{{2.0, -1.0}};
    g[0].w = Mat(1, 2);
    AdamState st;
    adam_step(p, g, st, 0.1, 0.0, 1);
    CHECK(p[0].w == Mat{{2.0, -1.0}});
    adam_step(p, g, st, 0.1, 0.5, 2);
    CHECK(p[0].w(0, 0) < 2.0);
    CHECK(p[0].w(0, 1) > -1.0);
}

TEST_CASE("adam_step: gamma clamped at 0, frozen gamma untouched, no decay on gamma") {
    std::vector<GsaLayerParams> p(1), g(1);
    for (auto* m : {&p[0].w, &p[0].wl, &p[0].wr, &p[0].wh, &p[0].wg, &g[0].w, &g[0].wl, &g[0].wr, &g[0].wh, &g[0].wg})
        *m = Mat(1, 1);
    p[0].gamma = 0.001;
    g[0].gamma = 5.0;
    AdamState st;
    adam_step(p, g, st, 0.1, 0.0, 1);
    CHECK(p[0].gamma == 0.0);

    p[0].gamma = 0.3;
    AdamState st2;
    adam_step(p, g, st2, 0.1, 0.0, 1, false);
    CHECK(p[0].gamma == 0.3);

    g[0].gamma = 0.0;
    AdamState st3;
    adam_step(p, g, st3, 0.1, 10.0, 1);
    CHECK(p[0].gamma == 0.3);
}

TEST_CASE("TrainConfig: defaults and validation") {
    CHECK(node_defaults().weight_decay == 5e-4);
    CHECK(node_defaults().learning_rate == 0.01);
    CHECK(node_defaults().epochs == 200);
    CHECK(node_defaults().patience == 10);
    CHECK(node_defaults().dropout == 0.5);
    CHECK(graph_defaults().weight_decay == 1e-4);
    CHECK(graph_defaults().batch_size == 32);
    TrainConfig c;
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = TrainConfig{};
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = TrainConfig{};
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("train_node_classifier: separable fixture reaches full train accuracy") {
    const NodeDataset ds = separable_fixture();
    TrainConfig cfg;
    cfg.patience = 0;
    cfg.dropout = 0.0;
    const auto res = train_node_classifier(make_spec({3, 8, 2}, false), ds, cfg);
    bool reached = false;
    for (const auto& r : res.history) reached = reached || r.train_acc == 1.0;
    CHECK(reached);
    CHECK(res.history.size() == 200);
    CHECK(res.history.front().gamma_values.empty());
}

TEST_CASE("train_node_classifier: determinism, gamma trace and loss decrease") {
    const NodeDataset ds = separable_fixture();
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.seed = 4;
    const ModelSpec spec = make_spec({3, 8, 2}, true);
    const auto a = train_node_classifier(spec, ds, cfg);
    const auto b = train_node_classifier(spec, ds, cfg);
    CHECK(a.history == b.history);
    CHECK(a.params == b.params);
    std::ostringstream ja, jb;
    write_metrics_jsonl(ja, a.history);
    write_metrics_jsonl(jb, b.history);
    CHECK(ja.str() == jb.str());
    CHECK(a.history.front().gamma_values == std::vector<double>{0.0, 0.0});
    CHECK(a.initial_params == init_params(spec, 4));
    CHECK(a.history[9].val_loss < a.history[0].val_loss);
    for (const auto& r : a.history) {
        for (double gv : r.gamma_values) CHECK(gv >= 0.0);
        CHECK(r.train_acc >= 0.0);
        CHECK(r.train_acc <= 1.0);
        CHECK(r.train_loss >= 0.0);
    }
    // Best-validation parameters are returned.
    double best = 1e300;
    std::size_t arg = 0;
    for (const auto& r : a.history)
        if (r.val_loss < best) {
            best = r.val_loss;
            arg = r.epoch;
        }
    CHECK(a.best_epoch == arg);
}

TEST_CASE("train_node_classifier: early stopping truncates the history") {
    const NodeDataset ds = separable_fixture();
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.patience = 3;
    cfg.learning_rate = 0.2;
    const auto res = train_node_classifier(make_spec({3, 8, 2}, false), ds, cfg);
    CHECK(res.history.size() < 400);
    CHECK(res.history.size() == res.best_epoch + 1 + 3);
}

TEST_CASE("train_node_classifier: frozen gamma 0 matches the plain model") {
    const NodeDataset ds = separable_fixture();
    TrainConfig cfg;
    cfg.epochs = 25;
    cfg.seed = 2;
    cfg.gamma_freeze = 0.0;
    const auto gsa = train_node_classifier(make_spec({3, 8, 2}, true), ds, cfg);
    cfg.gamma_freeze.reset();
    const auto gcn = train_node_classifier(make_spec({3, 8, 2}, false), ds, cfg);
    REQUIRE(gsa.history.size() == gcn.history.size());
    for (std::size_t e = 0; e < gsa.history.size(); ++e) {
        CHECK(gsa.history[e].train_loss == gcn.history[e].train_loss);
        CHECK(gsa.history[e].val_loss == gcn.history[e].val_loss);
        CHECK(gsa.history[e].test_acc == gcn.history[e].test_acc);
        CHECK(gsa.history[e].gamma_values == std::vector<double>{0.0, 0.0});
    }
}

TEST_CASE("train_node_classifier: divergence is reported with its epoch") {
    NodeDataset ds = separable_fixture();
    ds.x(0, 0) = std::numeric_limits<double>::infinity();
    TrainConfig cfg;
    cfg.epochs = 5;
    try {
        (void)train_node_classifier(make_spec({3, 4, 2}, false), ds, cfg);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch() == 0);
    }
}

TEST_CASE("train_node_classifier: empty split and width mismatch") {
    NodeDataset ds = separable_fixture();
    TrainConfig cfg;
    CHECK_THROWS_AS(train_node_classifier(make_spec({4, 8, 2}, false), ds, cfg), ShapeError);
    ds.masks.val.assign(ds.graph.num_nodes(), false);
    CHECK_THROWS_AS(train_node_classifier(make_spec({3, 8, 2}, false), ds, cfg), InputError);
}

TEST_CASE("graph batches: block-diagonal equivalence and isolation") {
    GraphSynthConfig gc;
    gc.graphs_per_class = 3;
    const GraphDataset ds = gen_graph_classification(gc);
    const ModelSpec spec = make_spec({ds.feature_dim, 8, ds.num_classes}, true);
    auto params = init_params(spec, 3);
    params[0].gamma = 0.6;
    params[1].gamma = 0.9;

    const GraphBatch batch = make_graph_batch(ds, {2, 7});
    const Mat joint = graph_logits(spec, params, batch);
    for (std::size_t k = 0; k < 2; ++k) {
        const std::size_t item = k == 0 ? 2 : 7;
        const Mat single = graph_logits(spec, params, make_graph_batch(ds, {item}));
        for (std::size_t c = 0; c < ds.num_classes; ++c) CHECK(std::abs(joint(k, c) - single(0, c)) <= 1e-12);
    }

    GraphDataset moved = ds;
    for (double& v : moved.items[7].x.data()) v += 3.0;
    const Mat after = graph_logits(spec, params, make_graph_batch(moved, {2, 7}));
    for (std::size_t c = 0; c < ds.num_classes; ++c) CHECK(after(0, c) == joint(0, c));

    // Single-node graph: node pipeline plus readout.
    GraphDataset one;
    one.num_classes = 2;
    one.feature_dim = 2;
    one.items.push_back({Graph(1, {}), Mat{{0.3, -0.2}}, 0, Split::train});
    const ModelSpec s1 = make_spec({2, 3, 2}, true);
    auto p1 = init_params(s1, 1);
    p1[0].gamma = 0.5;
    const Mat pooled = graph_logits(s1, p1, make_graph_batch(one, {0}));
    const Mat node = model_forward(s1, p1, normalize_adjacency(Graph(1, {})), one.items[0].x, false, 0).logits;
    CHECK(pooled == node);
}

TEST_CASE("train_graph_classifier: defaults, determinism, and learnability without noise") {
    GraphSynthConfig gc;
    gc.graphs_per_class = 20;
    gc.feature_noise = 0.0;
    const GraphDataset ds = gen_graph_classification(gc);
    TrainConfig cfg = graph_defaults();
    cfg.epochs = 150;
    cfg.patience = 0;
    cfg.dropout = 0.0;
    const ModelSpec spec = make_spec({ds.feature_dim, 32, ds.num_classes}, false);
    const auto res = train_graph_classifier(spec, ds, cfg);
    const double acc = graph_accuracy(spec, res.params, ds, Split::test, 32);
    MESSAGE("noise-free plain GCN test accuracy: " << acc);
    CHECK(acc > 0.9);
    CHECK(res.history.size() == 150);
    CHECK(res.history[9].train_loss < res.history[0].train_loss);

    cfg.epochs = 5;
    const auto a = train_graph_classifier(spec, ds, cfg);
    const auto b = train_graph_classifier(spec, ds, cfg);
    CHECK(a.history == b.history);
}

TEST_CASE("train_graph_classifier: input checks") {
    GraphSynthConfig gc;
    gc.graphs_per_class = 5;
    const GraphDataset ds = gen_graph_classification(gc);
    TrainConfig cfg = graph_defaults();
    CHECK_THROWS_AS(train_graph_classifier(make_spec({ds.feature_dim + 1, 4, ds.num_classes}, false), ds, cfg),
                    ShapeError);
    GraphDataset tiny = ds;
    tiny.items.resize(3);
    CHECK_THROWS_AS(train_graph_classifier(make_spec({ds.feature_dim, 4, ds.num_classes}, false), tiny, cfg),
                    InputError);
}

TEST_CASE("write_metrics_jsonl: one record per line with every field") {
    MetricsRecord r{3, 0.5, 0.75, 0.25, 1.0, 0.5, {0.1}};
    std::ostringstream s;
    write_metrics_jsonl(s, {r, r});
    std::istringstream in(s.str());
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("epoch") == 3);
        CHECK(j.at("train_loss") == 0.5);
        CHECK(j.at("val_acc") == 1.0);
        CHECK(j.at("gamma_values").size() == 1);
        ++count;
    }
    CHECK(count == 2);
}

}  // TEST_SUITE
