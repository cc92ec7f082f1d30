#include "gsagcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include <json.hpp>

#include "gsagcn/errors.hpp"
#include "gsagcn/numkernel.hpp"
#include "gsagcn/rng.hpp"

namespace gsagcn {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void check_rows(const Mat& logits, const std::vector<int>& labels, const std::vector<bool>& mask,
                const char* who) {
    if (logits.rows() != labels.size() || labels.size() != mask.size()) {
        throw ShapeError(std::string(who) + ": logits, labels and mask disagree in length");
    }
    if (std::find(mask.begin(), mask.end(), true) == mask.end()) {
        throw InputError(std::string(who) + ": empty mask (no supervised rows)");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (mask[i] && (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols())) {
            throw InputError(std::string(who) + ": label " + std::to_string(labels[i]) +
                             " out of range at row " + std::to_string(i));
        }
    }
}

void adam_mat(Mat& p, const Mat& g, Mat& m, Mat& v, double lr, double wd, double bc1, double bc2) {
    if (p.empty()) return;
    if (m.empty()) {
        m = Mat(p.rows(), p.cols());
        v = Mat(p.rows(), p.cols());
    }
    auto pd = p.data();
    auto gd = g.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
        const double gi = gd[i] + wd * pd[i];
        md[i] = kBeta1 * md[i] + (1.0 - kBeta1) * gi;
        vd[i] = kBeta2 * vd[i] + (1.0 - kBeta2) * gi * gi;
        const double mhat = md[i] / bc1;
        const double vhat = vd[i] / bc2;
        pd[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

void apply_gamma_freeze(std::vector<GsaLayerParams>& params, const TrainConfig& cfg) {
    if (!cfg.gamma_freeze) return;
    for (auto& p : params)
        if (p.attention()) p.gamma = *cfg.gamma_freeze;
}

void check_split(const std::vector<bool>& m, std::size_t n, const char* name) {
    if (m.size() != n || std::find(m.begin(), m.end(), true) == m.end()) {
        throw InputError(std::string("train_node_classifier: ") + name + " mask is empty");
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ParameterError("TrainConfig: learning_rate must be > 0");
    if (weight_decay < 0.0) throw ParameterError("TrainConfig: weight_decay must be >= 0");
    if (epochs < 1) throw ParameterError("TrainConfig: epochs must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("TrainConfig: dropout must lie in [0, 1)");
    if (gamma_freeze && !(*gamma_freeze >= 0.0)) throw ParameterError("TrainConfig: frozen gamma must be >= 0");
    if (batch_size < 1) throw ParameterError("TrainConfig: batch_size must be >= 1");
}

TrainConfig node_defaults() { return TrainConfig{}; }

TrainConfig graph_defaults() {
    TrainConfig c;
    c.weight_decay = 1e-4;
    c.batch_size = 32;
    return c;
}

LossAndGrad cross_entropy_masked(const Mat& logits, const std::vector<int>& labels,
                                 const std::vector<bool>& mask) {
    check_rows(logits, labels, mask, "cross_entropy_masked");
    const auto count = static_cast<double>(std::count(mask.begin(), mask.end(), true));
    LossAndGrad r;
    r.grad = Mat(logits.rows(), logits.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        auto z = logits.row(i);
        const double mx = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double v : z) s += std::exp(v - mx);
        const double lse = mx + std::log(s);
        const auto y = static_cast<std::size_t>(labels[i]);
        total += lse - z[y];
        auto g = r.grad.row(i);
        for (std::size_t j = 0; j < z.size(); ++j) g[j] = std::exp(z[j] - lse) / count;
        g[y] -= 1.0 / count;
    }
    r.loss = total / count;
    return r;
}

std::size_t argmax_row(const Mat& logits, std::size_t row) {
    auto z = logits.row(row);
    std::size_t best = 0;
    for (std::size_t j = 1; j < z.size(); ++j)
        if (z[j] > z[best]) best = j;
    return best;
}

double evaluate(const Mat& logits, const std::vector<int>& labels, const std::vector<bool>& mask) {
    check_rows(logits, labels, mask, "evaluate");
    std::size_t hit = 0, total = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        ++total;
        if (argmax_row(logits, i) == static_cast<std::size_t>(labels[i])) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

void adam_step(std::vector<GsaLayerParams>& params, const std::vector<GsaLayerParams>& grads,
               AdamState& state, double lr, double weight_decay, std::size_t t, bool update_gamma) {
    if (t < 1) throw ParameterError("adam_step: t must be >= 1");
    if (grads.size() != params.size()) throw ShapeError("adam_step: gradient count mismatch");
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
    }
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t l = 0; l < params.size(); ++l) {
        auto& p = params[l];
        const auto& g = grads[l];
        auto& m = state.m[l];
        auto& v = state.v[l];
        adam_mat(p.w, g.w, m.w, v.w, lr, weight_decay, bc1, bc2);
        if (!p.attention()) continue;
        adam_mat(p.wl, g.wl, m.wl, v.wl, lr, weight_decay, bc1, bc2);
        adam_mat(p.wr, g.wr, m.wr, v.wr, lr, weight_decay, bc1, bc2);
        adam_mat(p.wh, g.wh, m.wh, v.wh, lr, weight_decay, bc1, bc2);
        adam_mat(p.wg, g.wg, m.wg, v.wg, lr, weight_decay, bc1, bc2);
        if (update_gamma) {
            m.gamma = kBeta1 * m.gamma + (1.0 - kBeta1) * g.gamma;
            v.gamma = kBeta2 * v.gamma + (1.0 - kBeta2) * g.gamma * g.gamma;
            p.gamma -= lr * (m.gamma / bc1) / (std::sqrt(v.gamma / bc2) + kAdamEps);
            p.gamma = std::max(0.0, p.gamma);
        }
    }
}

std::vector<double> gamma_values(const std::vector<GsaLayerParams>& params) {
    std::vector<double> g;
    for (const auto& p : params)
        if (p.attention()) g.push_back(p.gamma);
    return g;
}

TrainResult train_node_classifier(const ModelSpec& spec_in, const NodeDataset& ds,
                                  const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    const std::size_t n = ds.graph.num_nodes();
    check_split(ds.masks.train, n, "train");
    check_split(ds.masks.val, n, "val");
    check_split(ds.masks.test, n, "test");

    ModelSpec spec = spec_in;
    spec.dropout_rate = cfg.dropout;
    spec.validate();
    if (spec.layer_dims.front() != ds.x.cols() || spec.layer_dims.back() != ds.num_classes) {
        throw ShapeError("train_node_classifier: model widths do not match the dataset");
    }

    TrainResult res;
    std::vector<GsaLayerParams> params = init_params(spec, cfg.seed);
    apply_gamma_freeze(params, cfg);
    res.initial_params = params;
    std::vector<GsaLayerParams> best = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t wait = 0;

    const NormalizedAdjacency na = normalize_adjacency(ds.graph);
    AdamState state;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        const auto fwd = model_forward(spec, params, na, ds.x, true,
                                       substream_seed(cfg.seed, "dropout/epoch" + std::to_string(e)));
        const LossAndGrad lg = cross_entropy_masked(fwd.logits, ds.labels, ds.masks.train);
        if (!std::isfinite(lg.loss)) {
            throw DivergenceError("training loss became non-finite at epoch " + std::to_string(e), e);
        }
        const Mat eval_logits =
            spec.dropout_rate > 0.0 ? model_forward(spec, params, na, ds.x, false, 0).logits : fwd.logits;

        MetricsRecord rec;
        rec.epoch = e;
        rec.train_loss = lg.loss;
        rec.train_acc = evaluate(eval_logits, ds.labels, ds.masks.train);
        rec.val_loss = cross_entropy_masked(eval_logits, ds.labels, ds.masks.val).loss;
        rec.val_acc = evaluate(eval_logits, ds.labels, ds.masks.val);
        rec.test_acc = evaluate(eval_logits, ds.labels, ds.masks.test);
        rec.gamma_values = gamma_values(params);
        res.history.push_back(rec);

        if (cfg.patience > 0) {
            if (rec.val_loss < best_val) {
                best_val = rec.val_loss;
                best = params;
                res.best_epoch = e;
                wait = 0;
            } else if (++wait >= cfg.patience) {
                break;
            }
        }
        const auto grads = model_backward(spec, params, na, fwd, lg.grad);
        adam_step(params, grads, state, cfg.learning_rate, cfg.weight_decay, e + 1,
                  !cfg.gamma_freeze.has_value());
    }
    if (cfg.patience > 0) {
        res.params = std::move(best);
    } else {
        res.params = std::move(params);
        res.best_epoch = cfg.epochs;
    }
    return res;
}

GraphBatch make_graph_batch(const GraphDataset& ds, const std::vector<std::size_t>& items) {
    GraphBatch b;
    std::vector<const Graph*> graphs;
    std::size_t total = 0;
    for (std::size_t i : items) {
        const auto& it = ds.items.at(i);
        graphs.push_back(&it.graph);
        b.counts.push_back(it.graph.num_nodes());
        b.labels.push_back(it.label);
        total += it.graph.num_nodes();
    }
    b.na = normalize_adjacency_blocks(graphs);
    b.x = Mat(total, ds.feature_dim);
    std::size_t r = 0;
    for (std::size_t i : items) {
        const Mat& x = ds.items[i].x;
        for (std::size_t k = 0; k < x.rows(); ++k, ++r) {
            std::copy(x.row(k).begin(), x.row(k).end(), b.x.row(r).begin());
        }
    }
    return b;
}

Mat graph_logits(const ModelSpec& spec, const std::vector<GsaLayerParams>& params,
                 const GraphBatch& batch) {
    const auto fwd = model_forward(spec, params, batch.na, batch.x, false, 0, batch.counts);
    return sum_pool_readout(fwd.logits, batch.counts);
}

namespace {

std::vector<std::size_t> items_in(const GraphDataset& ds, Split s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.items.size(); ++i)
        if (ds.items[i].split == s) out.push_back(i);
    return out;
}

struct SplitEval {
    double loss = 0.0;
    double acc = 0.0;
};

SplitEval eval_split(const ModelSpec& spec, const std::vector<GsaLayerParams>& params,
                     const GraphDataset& ds, const std::vector<std::size_t>& ids,
                     std::size_t batch_size) {
    double loss = 0.0;
    std::size_t hit = 0;
    for (std::size_t b = 0; b < ids.size(); b += batch_size) {
        std::vector<std::size_t> chunk(ids.begin() + static_cast<std::ptrdiff_t>(b),
                                       ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), b + batch_size)));
        const GraphBatch batch = make_graph_batch(ds, chunk);
        const Mat logits = graph_logits(spec, params, batch);
        const std::vector<bool> all(chunk.size(), true);
        loss += cross_entropy_masked(logits, batch.labels, all).loss * static_cast<double>(chunk.size());
        for (std::size_t i = 0; i < chunk.size(); ++i)
            if (argmax_row(logits, i) == static_cast<std::size_t>(batch.labels[i])) ++hit;
    }
    const auto n = static_cast<double>(ids.size());
    return {loss / n, static_cast<double>(hit) / n};
}

}  // namespace

double graph_accuracy(const ModelSpec& spec, const std::vector<GsaLayerParams>& params,
                      const GraphDataset& ds, Split split, std::size_t batch_size) {
    const auto ids = items_in(ds, split);
    if (ids.empty()) throw InputError("graph_accuracy: split is empty");
    return eval_split(spec, params, ds, ids, batch_size).acc;
}

TrainResult train_graph_classifier(const ModelSpec& spec_in, const GraphDataset& ds,
                                   const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    if (ds.num_classes < 2) throw InputError("train_graph_classifier: need at least 2 classes");
    const auto train_ids = items_in(ds, Split::train);
    const auto val_ids = items_in(ds, Split::val);
    const auto test_ids = items_in(ds, Split::test);
    if (train_ids.size() < 2 || val_ids.size() < 2 || test_ids.size() < 2) {
        throw InputError("train_graph_classifier: every split needs at least 2 graphs");
    }
    ModelSpec spec = spec_in;
    spec.dropout_rate = cfg.dropout;
    spec.validate();
    if (spec.layer_dims.front() != ds.feature_dim || spec.layer_dims.back() != ds.num_classes) {
        throw ShapeError("train_graph_classifier: model widths do not match the dataset");
    }

    TrainResult res;
    std::vector<GsaLayerParams> params = init_params(spec, cfg.seed);
    apply_gamma_freeze(params, cfg);
    res.initial_params = params;
    std::vector<GsaLayerParams> best = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t wait = 0;
    AdamState state;
    std::size_t t = 0;

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        MetricsRecord rec;
        rec.epoch = e;
        const auto tr = eval_split(spec, params, ds, train_ids, cfg.batch_size);
        const auto va = eval_split(spec, params, ds, val_ids, cfg.batch_size);
        const auto te = eval_split(spec, params, ds, test_ids, cfg.batch_size);
        rec.train_acc = tr.acc;
        rec.val_loss = va.loss;
        rec.val_acc = va.acc;
        rec.test_acc = te.acc;
        rec.gamma_values = gamma_values(params);

        if (cfg.patience > 0) {
            if (rec.val_loss < best_val) {
                best_val = rec.val_loss;
                best = params;
                res.best_epoch = e;
                wait = 0;
            } else if (++wait >= cfg.patience) {
                rec.train_loss = tr.loss;
                res.history.push_back(rec);
                break;
            }
        }

        auto order = train_ids;
        auto gen = make_stream(cfg.seed, "batches/epoch" + std::to_string(e));
        std::shuffle(order.begin(), order.end(), gen);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(b),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + cfg.batch_size)));
            const GraphBatch batch = make_graph_batch(ds, chunk);
            const auto fwd = model_forward(
                spec, params, batch.na, batch.x, true,
                substream_seed(cfg.seed, "dropout/epoch" + std::to_string(e) + "/batch" + std::to_string(b)),
                batch.counts);
            const Mat pooled = sum_pool_readout(fwd.logits, batch.counts);
            const std::vector<bool> all(chunk.size(), true);
            const LossAndGrad lg = cross_entropy_masked(pooled, batch.labels, all);
            if (!std::isfinite(lg.loss)) {
                throw DivergenceError("training loss became non-finite at epoch " + std::to_string(e), e);
            }
            loss_sum += lg.loss * static_cast<double>(chunk.size());
            const Mat g = sum_pool_backward(lg.grad, batch.counts);
            const auto grads = model_backward(spec, params, batch.na, fwd, g);
            adam_step(params, grads, state, cfg.learning_rate, cfg.weight_decay, ++t,
                      !cfg.gamma_freeze.has_value());
        }
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        res.history.push_back(rec);
    }
    if (cfg.patience > 0) {
        res.params = std::move(best);
    } else {
        res.params = std::move(params);
        res.best_epoch = cfg.epochs;
    }
    return res;
}

void write_metrics_jsonl(std::ostream& out, const std::vector<MetricsRecord>& history) {
    for (const auto& r : history) {
        nlohmann::ordered_json j;
        j["epoch"] = r.epoch;
        j["train_loss"] = r.train_loss;
        j["train_acc"] = r.train_acc;
        j["val_loss"] = r.val_loss;
        j["val_acc"] = r.val_acc;
        j["test_acc"] = r.test_acc;
        j["gamma_values"] = r.gamma_values;
        out << j.dump() << '\n';
    }
}

}  // namespace gsagcn
