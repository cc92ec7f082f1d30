#include <fstream>
#include <sstream>

#include "gsagcn/cli.hpp"
#include "gsagcn/errors.hpp"

namespace gsagcn::cli {

namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot open " + p.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string node_fingerprint(const NodeDataset& ds) {
    std::ostringstream s;
    write_edge_list(s, ds.graph);
    write_features_csv(s, ds);
    write_masks_csv(s, ds);
    return sha256_hex(s.str());
}

std::string graph_fingerprint(const GraphDataset& ds) {
    std::ostringstream s;
    s.precision(17);
    for (const auto& it : ds.items) {
        s << "graph " << it.graph.num_nodes() << ' ' << it.label << ' ' << static_cast<int>(it.split) << '\n';
        write_edge_list(s, it.graph);
        for (double v : it.x.data()) s << v << ' ';
        s << '\n';
    }
    return sha256_hex(s.str());
}

void apply_split(NodeDataset& ds, const RunConfig& cfg) {
    if (cfg.task == "semi") {
        ds.masks = make_semi_split(ds.labels, 20, 500, 1000, cfg.split_seed);
    } else if (cfg.task == "full") {
        ds.masks = make_full_split(ds.labels, 0.6, 0.2, cfg.split_seed);
    } else {
        throw ParameterError("unknown task '" + cfg.task + "' (expected semi or full)");
    }
}

}  // namespace

LoadedData load_data(const RunConfig& cfg) {
    LoadedData out;
    if (cfg.dataset == "cora" || cfg.dataset == "citeseer") {
        const fs::path dir = fs::path(cfg.data_dir) / cfg.dataset;
        const fs::path content = dir / (cfg.dataset + ".content");
        const fs::path cites = dir / (cfg.dataset + ".cites");
        if (!fs::exists(content) || !fs::exists(cites)) {
            throw InputError("dataset not found: expected " + content.string() + " and " + cites.string() +
                             " (Planetoid .content/.cites files)");
        }
        const std::string content_bytes = read_all(content);
        const std::string cites_bytes = read_all(cites);
        std::istringstream cs(content_bytes), es(cites_bytes);
        out.node = load_planetoid(cs, es).dataset;
        out.fingerprint = sha256_hex(content_bytes + cites_bytes);
        apply_split(out.node, cfg);
    } else if (cfg.dataset == "sbm") {
        // Generator masks (stratified 0.6/0.2/0.2); --task does not apply.
        out.node = gen_feature_sbm(cfg.sbm);
        out.fingerprint = node_fingerprint(out.node);
    } else if (cfg.dataset == "graphs") {
        out.graph_task = true;
        out.graphs = gen_graph_classification(cfg.graphs);
        out.fingerprint = graph_fingerprint(out.graphs);
        return out;
    } else if (fs::is_directory(cfg.dataset)) {
        out.node = import_dataset(cfg.dataset);
        if (out.node.masks.train.empty()) apply_split(out.node, cfg);
        out.fingerprint = node_fingerprint(out.node);
    } else {
        throw InputError("unknown dataset '" + cfg.dataset +
                         "' (expected cora, citeseer, sbm, graphs or an export directory)");
    }
    if (cfg.row_normalize) out.node.x = row_normalize(out.node.x);
    return out;
}

ModelSpec model_spec(const RunConfig& cfg, std::size_t in_dim, std::size_t classes) {
    if (cfg.layers < 1) throw ParameterError("layers must be >= 1");
    std::vector<std::size_t> dims{in_dim};
    for (std::size_t l = 1; l < cfg.layers; ++l) dims.push_back(cfg.hidden);
    dims.push_back(classes);
    bool attention = false;
    if (cfg.model == "gsa-gcn") attention = true;
    else if (cfg.model != "gcn") throw ParameterError("unknown model '" + cfg.model + "' (expected gcn or gsa-gcn)");
    ModelSpec spec = make_spec(std::move(dims), attention, cfg.dropout);
    spec.attn_dim_divisor = cfg.attn_divisor;
    if (cfg.activation == "relu") spec.activation = Activation::relu;
    else if (cfg.activation == "identity") spec.activation = Activation::identity;
    else throw ParameterError("unknown activation '" + cfg.activation + "'");
    spec.validate();
    return spec;
}

}  // namespace gsagcn::cli
