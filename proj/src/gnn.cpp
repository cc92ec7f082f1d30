#include "gsagcn/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gsagcn/errors.hpp"
#include "gsagcn/numkernel.hpp"
#include "gsagcn/rng.hpp"

namespace gsagcn {

namespace {

std::string dims(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

Mat glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& gen) {
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-r, r);
    Mat m(fan_in, fan_out);
    for (double& x : m.data()) x = u(gen);
    return m;
}

Mat activation_grad(const Mat& grad_out, const Mat& pre, Activation act) {
    if (act == Activation::identity) return grad_out;
    Mat g(grad_out.rows(), grad_out.cols());
    auto go = grad_out.data();
    auto p = pre.data();
    auto out = g.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i] > 0.0 ? go[i] : 0.0;
    return g;
}

}  // namespace

void ModelSpec::validate() const {
    if (layer_dims.size() < 2) throw ParameterError("ModelSpec: need at least one layer");
    for (std::size_t d : layer_dims) {
        if (d == 0) throw ParameterError("ModelSpec: layer widths must be positive");
    }
    if (attention_enabled.size() != num_layers()) {
        throw ParameterError("ModelSpec: attention_enabled needs one flag per layer");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ParameterError("ModelSpec: dropout_rate must lie in [0, 1)");
    }
    if (attn_dim_divisor == 0) throw ParameterError("ModelSpec: attn_dim_divisor must be >= 1");
}

ModelSpec make_spec(std::vector<std::size_t> dims, bool attention, double dropout) {
    ModelSpec s;
    s.layer_dims = std::move(dims);
    s.attention_enabled.assign(s.num_layers(), attention);
    s.dropout_rate = dropout;
    return s;
}

std::size_t attention_dim(std::size_t d_in, std::size_t divisor) {
    if (divisor == 0) throw ParameterError("attention_dim: divisor must be >= 1");
    return std::max<std::size_t>(1, d_in / divisor);
}

Mat apply_activation(const Mat& pre, Activation act) {
    if (act == Activation::identity) return pre;
    Mat out = pre;
    for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
    return out;
}

Mat attention_scores(const Mat& h, const Mat& wl, const Mat& wr) {
    require(h.cols() == wl.rows() && h.cols() == wr.rows() && wl.cols() == wr.cols(),
            "attention_scores: h " + dims(h) + ", wl " + dims(wl) + ", wr " + dims(wr));
    return matmul_nt(matmul(h, wl), matmul(h, wr));
}

void mask_cross_segments(Mat& scores, std::span<const std::size_t> segments) {
    if (segments.empty()) return;
    std::size_t total = 0;
    for (std::size_t c : segments) total += c;
    require(total == scores.rows() && scores.rows() == scores.cols(),
            "mask_cross_segments: segments do not partition " + dims(scores));
    const double ninf = -std::numeric_limits<double>::infinity();
    std::size_t begin = 0;
    for (std::size_t c : segments) {
        const std::size_t end = begin + c;
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t j = 0; j < begin; ++j) scores(i, j) = ninf;
            for (std::size_t j = end; j < scores.cols(); ++j) scores(i, j) = ninf;
        }
        begin = end;
    }
}

Mat attention_output(const Mat& h, const Mat& mask, const Mat& wh, const Mat& wg) {
    require(mask.rows() == h.rows() && mask.cols() == h.rows() && wh.rows() == h.cols() &&
                wg.rows() == wh.cols() && wg.cols() == h.cols(),
            "attention_output: h " + dims(h) + ", mask " + dims(mask) + ", wh " + dims(wh) +
                ", wg " + dims(wg));
    return matmul(matmul(mask, matmul(h, wh)), wg);
}

LayerResult gcn_layer_forward(const NormalizedAdjacency& na, const Mat& h, const Mat& w,
                              Activation act) {
    require(h.rows() == na.size() && h.cols() == w.rows(),
            "gcn_layer_forward: adjacency " + dims(na.mat) + ", h " + dims(h) + ", w " + dims(w));
    LayerResult r;
    r.cache.h_in = h;
    r.cache.pre_activation = matmul(na.mat, matmul(h, w));
    r.cache.act = act;
    r.out = apply_activation(r.cache.pre_activation, act);
    return r;
}

LayerResult gsa_layer_forward(const NormalizedAdjacency& na, const Mat& h,
                              const GsaLayerParams& p, Activation act,
                              std::span<const std::size_t> segments) {
    if (!p.attention()) return gcn_layer_forward(na, h, p.w, act);
    if (!(p.gamma >= 0.0)) throw ParameterError("gsa_layer_forward: gamma must be >= 0");
    require(h.rows() == na.size() && h.cols() == p.w.rows(),
            "gsa_layer_forward: adjacency " + dims(na.mat) + ", h " + dims(h) + ", w " +
                dims(p.w));
    require(p.wl.rows() == h.cols() && p.wr.rows() == h.cols() && p.wh.rows() == h.cols() &&
                p.wl.cols() == p.wr.cols() && p.wh.cols() == p.wl.cols() &&
                p.wg.rows() == p.wh.cols() && p.wg.cols() == h.cols(),
            "gsa_layer_forward: attention weights do not match input width " +
                std::to_string(h.cols()));

    LayerResult r;
    LayerCache& c = r.cache;
    c.h_in = h;
    c.act = act;
    c.attention = true;
    c.gamma = p.gamma;
    c.q = matmul(h, p.wl);
    c.k = matmul(h, p.wr);
    c.scores = matmul_nt(c.q, c.k);
    mask_cross_segments(c.scores, segments);
    c.mask = row_softmax(c.scores);
    c.v = matmul(h, p.wh);
    c.u = matmul(c.mask, c.v);
    c.attn_out = matmul(c.u, p.wg);
    c.attn_proj = matmul(c.attn_out, p.w);

    // Same evaluation as the plain layer, then the attention term on top:
    // with gamma = 0 the addend is +0 and the result is bit-identical.
    c.pre_activation = matmul(na.mat, matmul(h, p.w));
    axpy(p.gamma, c.attn_proj, c.pre_activation);
    r.out = apply_activation(c.pre_activation, act);
    return r;
}

LayerGradients layer_backward(const NormalizedAdjacency& na, const LayerCache& cache,
                              const GsaLayerParams& p, const Mat& grad_out) {
    if (cache.attention != p.attention() || cache.h_in.cols() != p.w.rows() ||
        cache.pre_activation.rows() != cache.h_in.rows() ||
        cache.pre_activation.cols() != p.w.cols() || (cache.attention && cache.gamma != p.gamma)) {
        throw ConsistencyError("layer_backward: cache was not produced by these parameters");
    }
    if (!grad_out.same_shape(cache.pre_activation)) {
        throw ShapeError("layer_backward: grad_out " + dims(grad_out) + " vs output " +
                         dims(cache.pre_activation));
    }
    const Mat& h = cache.h_in;
    const Mat dpre = activation_grad(grad_out, cache.pre_activation, cache.act);
    const Mat adp = matmul(na.mat, dpre);  // symmetric adjacency

    LayerGradients g;
    g.grads.w = matmul_tn(h, adp);
    g.grad_h = matmul_nt(adp, p.w);
    if (!cache.attention) return g;

    axpy(p.gamma, matmul_tn(cache.attn_out, dpre), g.grads.w);
    g.grads.gamma = frobenius_inner(dpre, cache.attn_proj);

    const Mat d_o = scale(matmul_nt(dpre, p.w), p.gamma);
    g.grads.wg = matmul_tn(cache.u, d_o);
    const Mat d_u = matmul_nt(d_o, p.wg);
    const Mat d_b = matmul_nt(d_u, cache.v);
    const Mat d_v = matmul_tn(cache.mask, d_u);
    g.grads.wh = matmul_tn(h, d_v);

    // Row-wise softmax Jacobian: dS_ij = B_ij (dB_ij - sum_k B_ik dB_ik).
    const std::size_t n = h.rows();
    Mat d_s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto b = cache.mask.row(i);
        auto db = d_b.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += b[j] * db[j];
        auto ds = d_s.row(i);
        for (std::size_t j = 0; j < n; ++j) ds[j] = b[j] * (db[j] - dot);
    }
    const Mat d_q = matmul(d_s, cache.k);
    const Mat d_k = matmul_tn(d_s, cache.q);
    g.grads.wl = matmul_tn(h, d_q);
    g.grads.wr = matmul_tn(h, d_k);

    axpy(1.0, matmul_nt(d_v, p.wh), g.grad_h);
    axpy(1.0, matmul_nt(d_q, p.wl), g.grad_h);
    axpy(1.0, matmul_nt(d_k, p.wr), g.grad_h);
    return g;
}

Mat sum_pool_readout(const Mat& h, std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    require(total == h.rows(), "sum_pool_readout: counts cover " + std::to_string(total) +
                                   " rows, h has " + std::to_string(h.rows()));
    Mat out(counts.size(), h.cols());
    std::size_t r = 0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        auto o = out.row(g);
        for (std::size_t i = 0; i < counts[g]; ++i, ++r) {
            auto hr = h.row(r);
            for (std::size_t j = 0; j < o.size(); ++j) o[j] += hr[j];
        }
    }
    return out;
}

Mat sum_pool_backward(const Mat& grad_pooled, std::span<const std::size_t> counts) {
    require(grad_pooled.rows() == counts.size(), "sum_pool_backward: one row per graph expected");
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    Mat out(total, grad_pooled.cols());
    std::size_t r = 0;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        auto gp = grad_pooled.row(g);
        for (std::size_t i = 0; i < counts[g]; ++i, ++r) std::copy(gp.begin(), gp.end(), out.row(r).begin());
    }
    return out;
}

std::vector<GsaLayerParams> init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<GsaLayerParams> params(spec.num_layers());
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        const std::size_t din = spec.layer_dims[l], dout = spec.layer_dims[l + 1];
        auto wgen = make_stream(seed, "init/w/layer" + std::to_string(l));
        params[l].w = glorot(din, dout, wgen);
        if (spec.attention_enabled[l]) {
            const std::size_t da = attention_dim(din, spec.attn_dim_divisor);
            auto agen = make_stream(seed, "init/attn/layer" + std::to_string(l));
            params[l].wl = glorot(din, da, agen);
            params[l].wr = glorot(din, da, agen);
            params[l].wh = glorot(din, da, agen);
            params[l].wg = glorot(da, din, agen);
        }
        params[l].gamma = 0.0;
    }
    return params;
}

ForwardResult model_forward(const ModelSpec& spec, const std::vector<GsaLayerParams>& params,
                            const NormalizedAdjacency& na, const Mat& x, bool train_mode,
                            std::uint64_t seed, std::span<const std::size_t> segments) {
    spec.validate();
    if (params.size() != spec.num_layers()) {
        throw ShapeError("model_forward: " + std::to_string(params.size()) + " parameter sets for " +
                         std::to_string(spec.num_layers()) + " layers");
    }
    if (x.cols() != spec.layer_dims.front()) {
        throw ShapeError("model_forward: features have " + std::to_string(x.cols()) +
                         " columns, model expects " + std::to_string(spec.layer_dims.front()));
    }
    ForwardResult fr;
    Mat h = x;
    const bool drop = train_mode && spec.dropout_rate > 0.0;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        if (params[l].attention() != spec.attention_enabled[l]) {
            throw ConsistencyError("model_forward: layer " + std::to_string(l) +
                                   " attention flag does not match its parameters");
        }
        if (drop) {
            auto gen = make_stream(seed, "dropout/layer" + std::to_string(l));
            std::bernoulli_distribution keep(1.0 - spec.dropout_rate);
            const double s = 1.0 / (1.0 - spec.dropout_rate);
            Mat m(h.rows(), h.cols());
            for (double& v : m.data()) v = keep(gen) ? s : 0.0;
            h = hadamard(h, m);
            fr.dropout_masks.push_back(std::move(m));
        }
        const Activation act = l + 1 == spec.num_layers() ? Activation::identity : spec.activation;
        LayerResult r = gsa_layer_forward(na, h, params[l], act, segments);
        fr.caches.push_back(std::move(r.cache));
        h = std::move(r.out);
    }
    fr.logits = std::move(h);
    return fr;
}

std::vector<GsaLayerParams> model_backward(const ModelSpec& spec,
                                           const std::vector<GsaLayerParams>& params,
                                           const NormalizedAdjacency& na,
                                           const ForwardResult& fwd, const Mat& grad_logits) {
    if (fwd.caches.size() != spec.num_layers() || params.size() != spec.num_layers()) {
        throw ConsistencyError("model_backward: forward result does not match the model");
    }
    std::vector<GsaLayerParams> grads(spec.num_layers());
    Mat g = grad_logits;
    for (std::size_t l = spec.num_layers(); l-- > 0;) {
        LayerGradients lg = layer_backward(na, fwd.caches[l], params[l], g);
        grads[l] = std::move(lg.grads);
        if (l == 0) break;
        g = std::move(lg.grad_h);
        if (!fwd.dropout_masks.empty()) g = hadamard(g, fwd.dropout_masks[l]);
    }
    return grads;
}

}  // namespace gsagcn
