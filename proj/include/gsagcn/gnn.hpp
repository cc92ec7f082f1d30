#ifndef GSAGCN_GNN_HPP
#define GSAGCN_GNN_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gsagcn/graph.hpp"
#include "gsagcn/mat.hpp"

namespace gsagcn {

enum class Activation { relu, identity };

/// Trainables of one layer. A plain GCN layer leaves the four attention
/// matrices empty (0x0) and gamma at 0.
struct GsaLayerParams {
    Mat w;   // d_in x d_out
    Mat wl;  // d_in x d_att
    Mat wr;  // d_in x d_att
    Mat wh;  // d_in x d_att
    Mat wg;  // d_att x d_in
    double gamma = 0.0;

    bool attention() const noexcept { return !wl.empty(); }
    bool operator==(const GsaLayerParams&) const = default;
};

/// Everything the backward pass needs from one forward call.
struct LayerCache {
    Mat h_in;
    Mat scores;          // S, n x n (cross-segment entries are -inf)
    Mat mask;            // B = row_softmax(S)
    Mat attn_out;        // O
    Mat pre_activation;
    // Intermediates of the attention branch.
    Mat q;               // h wl
    Mat k;               // h wr
    Mat v;               // h wh
    Mat u;               // B v
    Mat attn_proj;       // O w
    Activation act = Activation::identity;
    bool attention = false;
    double gamma = 0.0;
};

struct LayerResult {
    Mat out;
    LayerCache cache;
};

struct ModelSpec {
    /// Widths d_0 (features), d_1, ..., d_L (classes).
    std::vector<std::size_t> layer_dims;
    /// One flag per layer (size L).
    std::vector<bool> attention_enabled;
    Activation activation = Activation::relu;
    double dropout_rate = 0.5;
    std::size_t attn_dim_divisor = 8;

    std::size_t num_layers() const noexcept {
        return layer_dims.empty() ? 0 : layer_dims.size() - 1;
    }
    /// Throws ParameterError when the fields are inconsistent.
    void validate() const;
};

/// L-layer spec with the given widths and attention on every layer (or none).
ModelSpec make_spec(std::vector<std::size_t> dims, bool attention, double dropout = 0.5);

std::size_t attention_dim(std::size_t d_in, std::size_t divisor);

Mat apply_activation(const Mat& pre, Activation act);

/// S = (h wl)(h wr)^T.
Mat attention_scores(const Mat& h, const Mat& wl, const Mat& wr);

/// Sets S entries linking different segments to -inf so the softmax gives
/// them exactly zero weight. `segments` lists consecutive block sizes.
void mask_cross_segments(Mat& scores, std::span<const std::size_t> segments);

/// O = (mask h wh) wg.
Mat attention_output(const Mat& h, const Mat& mask, const Mat& wh, const Mat& wg);

LayerResult gcn_layer_forward(const NormalizedAdjacency& na, const Mat& h, const Mat& w,
                              Activation act);

/// act((A h + gamma O) w), evaluated as A(h w) + gamma (O w). With an empty
/// `segments` every node attends to every node.
LayerResult gsa_layer_forward(const NormalizedAdjacency& na, const Mat& h,
                              const GsaLayerParams& p, Activation act,
                              std::span<const std::size_t> segments = {});

struct LayerGradients {
    Mat grad_h;
    GsaLayerParams grads;
};

/// Exact reverse pass for either layer kind. Throws ConsistencyError when
/// `cache` was not produced with `p`.
LayerGradients layer_backward(const NormalizedAdjacency& na, const LayerCache& cache,
                              const GsaLayerParams& p, const Mat& grad_out);

/// One row per graph, summing the rows of that graph. `counts` are the node
/// counts of consecutive graphs and must add up to h.rows().
Mat sum_pool_readout(const Mat& h, std::span<const std::size_t> counts);
Mat sum_pool_backward(const Mat& grad_pooled, std::span<const std::size_t> counts);

/// Glorot-uniform weights from named sub-streams of `seed`
/// ("init/w/layer<l>" and "init/attn/layer<l>"); gamma starts at 0.
std::vector<GsaLayerParams> init_params(const ModelSpec& spec, std::uint64_t seed);

struct ForwardResult {
    Mat logits;
    std::vector<LayerCache> caches;
    /// Inverted-dropout multipliers per layer input (empty in eval mode).
    std::vector<Mat> dropout_masks;
};

/// Hidden layers use spec.activation, the last layer is linear. Dropout on
/// layer inputs is drawn from "dropout/layer<l>" sub-streams of `seed` and
/// only in train mode.
ForwardResult model_forward(const ModelSpec& spec, const std::vector<GsaLayerParams>& params,
                            const NormalizedAdjacency& na, const Mat& x, bool train_mode,
                            std::uint64_t seed, std::span<const std::size_t> segments = {});

std::vector<GsaLayerParams> model_backward(const ModelSpec& spec,
                                           const std::vector<GsaLayerParams>& params,
                                           const NormalizedAdjacency& na,
                                           const ForwardResult& fwd, const Mat& grad_logits);

}  // namespace gsagcn

#endif  // GSAGCN_GNN_HPP
