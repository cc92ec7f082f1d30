#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "gsagcn/cli.hpp"
#include "gsagcn/errors.hpp"

namespace gsagcn::cli {

using nlohmann::json;
using nlohmann::ordered_json;

TrainConfig RunConfig::train_config(bool graph_task) const {
    TrainConfig t = graph_task ? graph_defaults() : node_defaults();
    t.learning_rate = learning_rate;
    if (weight_decay) t.weight_decay = *weight_decay;
    t.epochs = epochs;
    t.seed = seed;
    t.patience = patience;
    t.dropout = dropout;
    t.gamma_freeze = gamma_freeze;
    t.batch_size = batch_size;
    return t;
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["dataset"] = c.dataset;
    j["data_dir"] = c.data_dir;
    j["task"] = c.task;
    j["model"] = c.model;
    j["seed"] = c.seed;
    j["split_seed"] = c.split_seed;
    j["epochs"] = c.epochs;
    j["learning_rate"] = c.learning_rate;
    j["weight_decay"] = c.weight_decay ? json(*c.weight_decay) : json(nullptr);
    j["dropout"] = c.dropout;
    j["patience"] = c.patience;
    j["hidden"] = c.hidden;
    j["layers"] = c.layers;
    j["gamma_freeze"] = c.gamma_freeze ? json(*c.gamma_freeze) : json(nullptr);
    j["batch_size"] = c.batch_size;
    j["row_normalize"] = c.row_normalize;
    j["attn_divisor"] = c.attn_divisor;
    j["activation"] = c.activation;
    j["sbm"] = {{"n", c.sbm.n},
                {"num_classes", c.sbm.num_classes},
                {"p_in", c.sbm.p_in},
                {"p_out", c.sbm.p_out},
                {"feature_dim", c.sbm.feature_dim},
                {"feature_noise", c.sbm.feature_noise},
                {"cross_class_edge_boost", c.sbm.cross_class_edge_boost},
                {"seed", c.sbm.seed}};
    j["graphs"] = {{"graphs_per_class", c.graphs.graphs_per_class},
                   {"feature_dim", c.graphs.feature_dim},
                   {"feature_noise", c.graphs.feature_noise},
                   {"min_nodes", c.graphs.min_nodes},
                   {"max_nodes", c.graphs.max_nodes},
                   {"train_frac", c.graphs.train_frac},
                   {"val_frac", c.graphs.val_frac},
                   {"seed", c.graphs.seed}};
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    try {
        c.dataset = j.at("dataset").get<std::string>();
        c.data_dir = j.at("data_dir").get<std::string>();
        c.task = j.at("task").get<std::string>();
        c.model = j.at("model").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.split_seed = j.at("split_seed").get<std::uint64_t>();
        c.epochs = j.at("epochs").get<std::size_t>();
        c.learning_rate = j.at("learning_rate").get<double>();
        if (!j.at("weight_decay").is_null()) c.weight_decay = j.at("weight_decay").get<double>();
        c.dropout = j.at("dropout").get<double>();
        c.patience = j.at("patience").get<std::size_t>();
        c.hidden = j.at("hidden").get<std::size_t>();
        c.layers = j.at("layers").get<std::size_t>();
        if (!j.at("gamma_freeze").is_null()) c.gamma_freeze = j.at("gamma_freeze").get<double>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.row_normalize = j.at("row_normalize").get<bool>();
        c.attn_divisor = j.at("attn_divisor").get<std::size_t>();
        c.activation = j.at("activation").get<std::string>();
        const auto& s = j.at("sbm");
        c.sbm.n = s.at("n");
        c.sbm.num_classes = s.at("num_classes");
        c.sbm.p_in = s.at("p_in");
        c.sbm.p_out = s.at("p_out");
        c.sbm.feature_dim = s.at("feature_dim");
        c.sbm.feature_noise = s.at("feature_noise");
        c.sbm.cross_class_edge_boost = s.at("cross_class_edge_boost");
        c.sbm.seed = s.at("seed");
        const auto& g = j.at("graphs");
        c.graphs.graphs_per_class = g.at("graphs_per_class");
        c.graphs.feature_dim = g.at("feature_dim");
        c.graphs.feature_noise = g.at("feature_noise");
        c.graphs.min_nodes = g.at("min_nodes");
        c.graphs.max_nodes = g.at("max_nodes");
        c.graphs.train_frac = g.at("train_frac");
        c.graphs.val_frac = g.at("val_frac");
        c.graphs.seed = g.at("seed");
    } catch (const json::exception& e) {
        throw FormatError(std::string("run config: ") + e.what());
    }
    return c;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return sha256_hex(buf.str());
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& out) {
    const char* root = std::getenv("GSAGCN_OUTPUT_ROOT");
    if (root && *root && out.is_relative()) return std::filesystem::path(root) / out;
    return out;
}

ordered_json to_json(const RunManifest& m) {
    ordered_json j;
    j["command"] = m.command;
    j["config"] = m.config;
    j["seed"] = m.seed;
    j["dataset_fingerprint"] = m.dataset_fingerprint;
    j["artifact_version"] = m.artifact_version;
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    j["outputs"] = m.outputs;
    return j;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir / "manifest.json").string());
    f << to_json(m).dump(2) << '\n';
}

}  // namespace gsagcn::cli
