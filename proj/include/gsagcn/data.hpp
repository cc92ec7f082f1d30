#ifndef GSAGCN_DATA_HPP
#define GSAGCN_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsagcn/graph.hpp"
#include "gsagcn/mat.hpp"

namespace gsagcn {

struct SplitMasks {
    std::vector<bool> train;
    std::vector<bool> val;
    std::vector<bool> test;
};

struct NodeDataset {
    Graph graph;
    Mat x;
    std::vector<int> labels;
    SplitMasks masks;
    std::size_t num_classes = 0;
    /// Label strings in index order (empty for synthetic data).
    std::vector<std::string> class_names;
    /// Original node ids in index order (empty for synthetic data).
    std::vector<std::string> node_ids;

    /// Throws InputError if any invariant (shapes, label range, disjoint
    /// masks) is broken.
    void validate() const;
};

enum class Split { train, val, test };

struct GraphItem {
    Graph graph;
    Mat x;
    int label = 0;
    Split split = Split::train;
};

struct GraphDataset {
    std::vector<GraphItem> items;
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;

    void validate() const;
};

struct SynthConfig {
    std::size_t n = 60;
    std::size_t num_classes = 3;
    double p_in = 0.3;
    double p_out = 0.02;
    std::size_t feature_dim = 8;
    double feature_noise = 0.5;
    /// Added to p_out (capped at 1).
    double cross_class_edge_boost = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PlanetoidLoad {
    NodeDataset dataset;
    /// `.cites` lines skipped because an endpoint is absent from `.content`.
    std::size_t skipped_citations = 0;
    /// Citation lines whose two ends are the same document (dropped).
    std::size_t self_citations = 0;
};

/// Reads `<id>\t<f_1>...\t<f_d>\t<label>` lines and `<cited>\t<citing>`
/// lines. Masks are left empty.
PlanetoidLoad load_planetoid(const std::filesystem::path& content_path,
                             const std::filesystem::path& cites_path);
PlanetoidLoad load_planetoid(std::istream& content, std::istream& cites);

/// Per class, the first `per_class` nodes (node-id order at seed 0, a seeded
/// shuffle otherwise) go to train; of the rest, `val_size` go to val and the
/// next `test_size` to test.
SplitMasks make_semi_split(const std::vector<int>& labels, std::size_t per_class,
                           std::size_t val_size, std::size_t test_size, std::uint64_t seed);

/// Stratified split: per class round(frac * count) nodes to train and val,
/// the remainder to test.
SplitMasks make_full_split(const std::vector<int>& labels, double train_frac, double val_frac,
                           std::uint64_t seed);

/// Feature-SBM: balanced labels, block-model edges and class prototypes plus
/// Gaussian noise. Masks use a 0.6/0.2/0.2 stratified split.
NodeDataset gen_feature_sbm(const SynthConfig& cfg);

enum class Topology { triangle, path, star, clique };
const char* topology_name(Topology t);

struct GraphSynthConfig {
    std::size_t graphs_per_class = 40;
    std::size_t feature_dim = 4;
    double feature_noise = 0.3;
    std::size_t min_nodes = 4;
    std::size_t max_nodes = 8;
    double train_frac = 0.6;
    double val_frac = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Eight classes: {triangle, path, star, clique} x {prototype A, prototype B}.
/// Class c uses topology c / 2 and prototype c % 2. Triangles always have 3
/// nodes; the others draw a size from [min_nodes, max_nodes]. Node features
/// are the noisy prototype followed by a one-hot degree block.
GraphDataset gen_graph_classification(const GraphSynthConfig& cfg);

/// Scales each nonzero row to sum 1.
Mat row_normalize(const Mat& x);

// Export formats: edges.tsv (u<TAB>v), features.csv (node_id,f1..fd,label),
// masks.csv (node_id,train,val,test).
void write_features_csv(std::ostream& out, const NodeDataset& ds);
void write_masks_csv(std::ostream& out, const NodeDataset& ds);
void export_dataset(const NodeDataset& ds, const std::filesystem::path& dir);
NodeDataset import_dataset(const std::filesystem::path& dir);

}  // namespace gsagcn

#endif  // GSAGCN_DATA_HPP
