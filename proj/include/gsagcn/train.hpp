#ifndef GSAGCN_TRAIN_HPP
#define GSAGCN_TRAIN_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gsagcn/data.hpp"
#include "gsagcn/gnn.hpp"
#include "gsagcn/mat.hpp"

namespace gsagcn {

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    /// Early stopping on validation loss; 0 disables.
    std::size_t patience = 10;
    double dropout = 0.5;
    /// When set, every attentive layer keeps gamma at this value.
    std::optional<double> gamma_freeze;
    /// Graphs per mini-batch (graph classification only).
    std::size_t batch_size = 32;

    void validate() const;
};

/// Node-task defaults.
TrainConfig node_defaults();
/// Graph-task defaults: weight decay 1e-4, batches of 32.
TrainConfig graph_defaults();

/// Record e describes the parameters before the e-th update (epoch 0 is the
/// initialization). Losses and accuracies come from an eval-mode pass,
/// except train_loss which is the loss the update was computed from.
struct MetricsRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    std::vector<double> gamma_values;

    bool operator==(const MetricsRecord&) const = default;
};

struct LossAndGrad {
    double loss = 0.0;
    Mat grad;
};

/// Mean softmax cross-entropy over masked rows, with its gradient.
LossAndGrad cross_entropy_masked(const Mat& logits, const std::vector<int>& labels,
                                 const std::vector<bool>& mask);

/// Fraction of masked rows whose argmax (lowest index on ties) is the label.
double evaluate(const Mat& logits, const std::vector<int>& labels, const std::vector<bool>& mask);

std::size_t argmax_row(const Mat& logits, std::size_t row);

struct AdamState {
    std::vector<GsaLayerParams> m;
    std::vector<GsaLayerParams> v;
};

/// Adam (0.9, 0.999, 1e-8) with bias correction; weight_decay * theta is added
/// to the gradient of every weight matrix (not gamma). Gamma is clamped to
/// >= 0 afterwards, or left alone when `update_gamma` is false. `t` >= 1.
void adam_step(std::vector<GsaLayerParams>& params, const std::vector<GsaLayerParams>& grads,
               AdamState& state, double lr, double weight_decay, std::size_t t,
               bool update_gamma = true);

struct TrainResult {
    /// Best-validation-loss parameters when patience > 0, otherwise final.
    std::vector<GsaLayerParams> params;
    std::vector<GsaLayerParams> initial_params;
    std::vector<MetricsRecord> history;
    std::size_t best_epoch = 0;
};

/// Full-batch training. Throws DivergenceError on a non-finite loss.
TrainResult train_node_classifier(const ModelSpec& spec, const NodeDataset& ds,
                                  const TrainConfig& cfg);

/// Mini-batch training on block-diagonal batches with per-graph attention
/// and sum-pooling readout.
TrainResult train_graph_classifier(const ModelSpec& spec, const GraphDataset& ds,
                                   const TrainConfig& cfg);

/// Block-diagonal batch of the given graphs.
struct GraphBatch {
    NormalizedAdjacency na;
    Mat x;
    std::vector<std::size_t> counts;
    std::vector<int> labels;
};
GraphBatch make_graph_batch(const GraphDataset& ds, const std::vector<std::size_t>& items);

/// Per-graph logits (sum-pooled) of a batch, in eval mode.
Mat graph_logits(const ModelSpec& spec, const std::vector<GsaLayerParams>& params,
                 const GraphBatch& batch);

/// Eval-mode accuracy over all graphs in `split`, processed in batches.
double graph_accuracy(const ModelSpec& spec, const std::vector<GsaLayerParams>& params,
                      const GraphDataset& ds, Split split, std::size_t batch_size);

std::vector<double> gamma_values(const std::vector<GsaLayerParams>& params);

void write_metrics_jsonl(std::ostream& out, const std::vector<MetricsRecord>& history);

}  // namespace gsagcn

#endif  // GSAGCN_TRAIN_HPP
