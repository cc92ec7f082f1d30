#ifndef GSAGCN_CLI_HPP
#define GSAGCN_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsagcn/data.hpp"
#include "gsagcn/gnn.hpp"
#include "gsagcn/train.hpp"

namespace gsagcn::cli {

enum ExitCode : int {
    kOk = 0,
    kRuntimeError = 1,
    kDivergence = 3,
    kLemmaFailure = 4,
    kLemmaBoundary = 5,
    kUsage = 64,
};

/// Everything that determines a training run.
struct RunConfig {
    std::string dataset = "cora";   // cora | citeseer | sbm | graphs | <export dir>
    std::string data_dir = "data";
    std::string task = "semi";      // semi | full (node datasets)
    std::string model = "gsa-gcn";  // gcn | gsa-gcn
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    /// Unset means the task default (5e-4 node, 1e-4 graph).
    std::optional<double> weight_decay;
    double dropout = 0.5;
    std::size_t patience = 10;
    std::size_t hidden = 16;
    std::size_t layers = 2;
    std::optional<double> gamma_freeze;
    std::size_t batch_size = 32;
    bool row_normalize = false;
    std::size_t attn_divisor = 8;
    std::string activation = "relu";  // relu | identity
    SynthConfig sbm;
    GraphSynthConfig graphs;

    TrainConfig train_config(bool graph_task) const;
};

nlohmann::ordered_json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

struct LoadedData {
    bool graph_task = false;
    NodeDataset node;
    GraphDataset graphs;
    /// Hex SHA-256 of the dataset's canonical bytes (source files for
    /// Planetoid, the export formats for synthetic data).
    std::string fingerprint;
};

/// Resolves `cfg.dataset`. Planetoid sets live at
/// <data_dir>/<name>/<name>.content and .cites.
LoadedData load_data(const RunConfig& cfg);

/// Model spec for `layers` layers of width `hidden` between the data's
/// feature and class counts.
ModelSpec model_spec(const RunConfig& cfg, std::size_t in_dim, std::size_t classes);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// `out`, placed under $GSAGCN_OUTPUT_ROOT when that is set and `out` is relative.
std::filesystem::path resolve_output_dir(const std::filesystem::path& out);

struct RunManifest {
    std::string command;
    nlohmann::ordered_json config;
    std::uint64_t seed = 0;
    std::string dataset_fingerprint;
    std::string artifact_version;
    double wall_clock_seconds = 0.0;
    std::vector<std::string> outputs;
};

nlohmann::ordered_json to_json(const RunManifest& m);
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

/// Entry point of the `gsagcn` tool. Returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace gsagcn::cli

#endif  // GSAGCN_CLI_HPP
