#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gsagcn/checkpoint.hpp"
#include "gsagcn/cli.hpp"
#include "gsagcn/diagnostics.hpp"
#include "gsagcn/errors.hpp"
#include "gsagcn/numkernel.hpp"

namespace gsagcn::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

fs::path prepare_dir(const std::string& out) {
    fs::path dir = resolve_output_dir(out);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write " + p.string());
    return f;
}

void write_config_toml(const fs::path& dir, const CLI::App* sub) {
    auto f = open_out(dir / "config.toml");
    f << '[' << sub->get_name() << "]\n" << sub->config_to_str(true, false);
}

void add_synth_options(CLI::App* s, RunConfig& c) {
    s->add_option("--sbm-n", c.sbm.n, "Feature-SBM node count")->capture_default_str();
    s->add_option("--sbm-classes", c.sbm.num_classes, "Feature-SBM classes")->capture_default_str();
    s->add_option("--sbm-p-in", c.sbm.p_in, "Within-class edge probability")->capture_default_str();
    s->add_option("--sbm-p-out", c.sbm.p_out, "Cross-class edge probability")->capture_default_str();
    s->add_option("--sbm-dim", c.sbm.feature_dim, "Feature-SBM feature width")->capture_default_str();
    s->add_option("--sbm-noise", c.sbm.feature_noise, "Feature noise scale")->capture_default_str();
    s->add_option("--sbm-boost", c.sbm.cross_class_edge_boost, "Added to the cross-class probability")
        ->capture_default_str();
    s->add_option("--sbm-seed", c.sbm.seed, "Feature-SBM seed")->capture_default_str();
    s->add_option("--graphs-per-class", c.graphs.graphs_per_class)->capture_default_str();
    s->add_option("--graph-dim", c.graphs.feature_dim, "Prototype width of graph items")->capture_default_str();
    s->add_option("--graph-noise", c.graphs.feature_noise)->capture_default_str();
    s->add_option("--graph-min-nodes", c.graphs.min_nodes)->capture_default_str();
    s->add_option("--graph-max-nodes", c.graphs.max_nodes)->capture_default_str();
    s->add_option("--graph-seed", c.graphs.seed)->capture_default_str();
}

void add_run_options(CLI::App* s, RunConfig& c) {
    s->add_option("--dataset", c.dataset, "cora | citeseer | sbm | graphs | export directory")
        ->capture_default_str();
    s->add_option("--data-dir", c.data_dir, "Folder holding <name>/<name>.content and .cites")
        ->capture_default_str();
    s->add_option("--task", c.task, "semi | full")->capture_default_str()->check(CLI::IsMember({"semi", "full"}));
    s->add_option("--model", c.model, "gcn | gsa-gcn")->capture_default_str()->check(CLI::IsMember({"gcn", "gsa-gcn"}));
    s->add_option("--seed", c.seed, "Root seed")->capture_default_str();
    s->add_option("--split-seed", c.split_seed, "Seed of the train/val/test split")->capture_default_str();
    s->add_option("--epochs", c.epochs)->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--lr", c.learning_rate)->capture_default_str();
    s->add_option("--weight-decay", c.weight_decay, "Default 5e-4 (node tasks) or 1e-4 (graph tasks)");
    s->add_option("--dropout", c.dropout)->capture_default_str();
    s->add_option("--patience", c.patience, "Early stopping on validation loss; 0 disables")->capture_default_str();
    s->add_option("--hidden", c.hidden)->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--layers", c.layers)->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--gamma-freeze", c.gamma_freeze, "Hold gamma at this value on every attentive layer");
    s->add_option("--batch-size", c.batch_size, "Graphs per batch (graph tasks)")->capture_default_str();
    s->add_flag("--row-normalize", c.row_normalize, "Scale feature rows to sum 1");
    s->add_option("--attn-divisor", c.attn_divisor, "Attention width is max(1, d_in / divisor)")
        ->capture_default_str();
    s->add_option("--activation", c.activation)->capture_default_str()->check(CLI::IsMember({"relu", "identity"}));
    add_synth_options(s, c);
}

RunConfig resolved(RunConfig c, bool graph_task) {
    if (!c.weight_decay) c.weight_decay = c.train_config(graph_task).weight_decay;
    return c;
}

struct Scores {
    double train = 0.0, val = 0.0, test = 0.0;
};

Scores score_params(const ModelSpec& spec, const std::vector<GsaLayerParams>& params, const LoadedData& data,
                    std::size_t batch_size) {
    Scores s;
    if (data.graph_task) {
        s.train = graph_accuracy(spec, params, data.graphs, Split::train, batch_size);
        s.val = graph_accuracy(spec, params, data.graphs, Split::val, batch_size);
        s.test = graph_accuracy(spec, params, data.graphs, Split::test, batch_size);
        return s;
    }
    const auto na = normalize_adjacency(data.node.graph);
    const auto logits = model_forward(spec, params, na, data.node.x, false, 0).logits;
    s.train = evaluate(logits, data.node.labels, data.node.masks.train);
    s.val = evaluate(logits, data.node.labels, data.node.masks.val);
    s.test = evaluate(logits, data.node.labels, data.node.masks.test);
    return s;
}

TrainResult train_any(const ModelSpec& spec, const LoadedData& data, const RunConfig& cfg) {
    if (data.graph_task) return train_graph_classifier(spec, data.graphs, cfg.train_config(true));
    return train_node_classifier(spec, data.node, cfg.train_config(false));
}

ModelSpec spec_for(const RunConfig& cfg, const LoadedData& data) {
    if (data.graph_task) return model_spec(cfg, data.graphs.feature_dim, data.graphs.num_classes);
    return model_spec(cfg, data.node.x.cols(), data.node.num_classes);
}

// ---------------------------------------------------------------------------

int cmd_train(const RunConfig& cfg_in, const std::string& out, const CLI::App* sub) {
    const auto t0 = Clock::now();
    const LoadedData data = load_data(cfg_in);
    const RunConfig cfg = resolved(cfg_in, data.graph_task);
    const ModelSpec spec = spec_for(cfg, data);
    const fs::path dir = prepare_dir(out);
    write_config_toml(dir, sub);

    RunManifest m;
    m.command = "train";
    m.config = to_json(cfg);
    m.seed = cfg.seed;
    m.dataset_fingerprint = data.fingerprint;
    m.artifact_version = GSAGCN_VERSION;
    m.outputs = {"config.toml"};

    TrainResult res;
    try {
        res = train_any(spec, data, cfg);
    } catch (const DivergenceError& e) {
        m.wall_clock_seconds = seconds_since(t0);
        write_manifest(dir, m);
        std::cerr << "error: " << e.what() << '\n';
        return kDivergence;
    }
    {
        auto f = open_out(dir / "metrics.jsonl");
        write_metrics_jsonl(f, res.history);
    }
    save_checkpoint(dir / "params.bin", res.params);
    save_checkpoint(dir / "params_init.bin", res.initial_params);
    m.outputs.insert(m.outputs.end(), {"metrics.jsonl", "params.bin", "params_init.bin"});
    m.wall_clock_seconds = seconds_since(t0);
    write_manifest(dir, m);

    const Scores s = score_params(spec, res.params, data, cfg.batch_size);
    std::cout << "epochs_run=" << res.history.size() << " best_epoch=" << res.best_epoch
              << " train_acc=" << fmt(s.train) << " val_acc=" << fmt(s.val) << " test_acc=" << fmt(s.test);
    for (double g : gamma_values(res.params)) std::cout << " gamma=" << fmt(g);
    std::cout << '\n';
    return kOk;
}

RunConfig config_from_run(const fs::path& run_dir) {
    std::ifstream f(run_dir / "manifest.json");
    if (!f) throw InputError("cannot open " + (run_dir / "manifest.json").string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest.json: ") + e.what());
    }
    return run_config_from_json(j.at("config"));
}

int cmd_eval(const std::string& run_dir, const std::string& checkpoint, const std::string& out) {
    const auto t0 = Clock::now();
    const fs::path rdir = resolve_output_dir(run_dir);
    const RunConfig cfg = config_from_run(rdir);
    const LoadedData data = load_data(cfg);
    const ModelSpec spec = spec_for(cfg, data);
    const fs::path ckpt = checkpoint.empty() ? rdir / "params.bin" : fs::path(checkpoint);
    const auto params = load_checkpoint(ckpt);
    const Scores s = score_params(spec, params, data, cfg.batch_size);

    ordered_json j;
    j["checkpoint"] = ckpt.string();
    j["train_acc"] = s.train;
    j["val_acc"] = s.val;
    j["test_acc"] = s.test;
    j["gamma_values"] = gamma_values(params);
    const fs::path dir = prepare_dir(out.empty() ? (rdir / "eval").string() : out);
    open_out(dir / "eval.json") << j.dump(2) << '\n';
    RunManifest m{"eval", to_json(cfg), cfg.seed, data.fingerprint, GSAGCN_VERSION, seconds_since(t0), {"eval.json"}};
    write_manifest(dir, m);
    std::cout << j.dump() << '\n';
    return kOk;
}

int cmd_oversmooth(const RunConfig& cfg_in, const std::vector<std::size_t>& depths, std::size_t seeds,
                   const std::vector<double>& sweep, const std::string& out, const CLI::App* sub) {
    const auto t0 = Clock::now();
    const LoadedData data = load_data(cfg_in);
    if (data.graph_task) throw InputError("oversmooth: needs a node-classification dataset");
    const RunConfig base = resolved(cfg_in, false);
    const fs::path dir = prepare_dir(out);
    write_config_toml(dir, sub);
    RunManifest m{"oversmooth", to_json(base), base.seed, data.fingerprint, GSAGCN_VERSION, 0.0, {"config.toml"}};

    auto summary = open_out(dir / "oversmooth_summary.csv");
    summary << "depth,train_acc_gcn,train_acc_gsa\n";
    m.outputs.push_back("oversmooth_summary.csv");
    for (std::size_t depth : depths) {
        if (depth < 1) throw ParameterError("oversmooth: depths must be >= 1");
        double acc_gcn = 0.0, acc_gsa = 0.0;
        std::vector<GsaLayerParams> first_gsa;
        for (std::size_t k = 0; k < seeds; ++k) {
            RunConfig c = base;
            c.layers = depth;
            c.seed = base.seed + k;
            c.model = "gcn";
            const ModelSpec sg = spec_for(c, data);
            const auto rg = train_node_classifier(sg, data.node, c.train_config(false));
            acc_gcn += score_params(sg, rg.params, data, c.batch_size).train;
            c.model = "gsa-gcn";
            const ModelSpec sa = spec_for(c, data);
            const auto ra = train_node_classifier(sa, data.node, c.train_config(false));
            acc_gsa += score_params(sa, ra.params, data, c.batch_size).train;
            if (k == 0) first_gsa = ra.params;
        }
        acc_gcn /= static_cast<double>(seeds);
        acc_gsa /= static_cast<double>(seeds);
        summary << depth << ',' << fmt(acc_gcn) << ',' << fmt(acc_gsa) << '\n';
        std::cout << "depth=" << depth << " train_acc_gcn=" << fmt(acc_gcn) << " train_acc_gsa=" << fmt(acc_gsa)
                  << '\n';

        const Activation act = base.activation == "relu" ? Activation::relu : Activation::identity;
        const auto rep = oversmooth_trace(data.node.graph, data.node.x, first_gsa, depth, act);
        const std::string sub_name = "depth_" + std::to_string(depth);
        fs::create_directories(dir / sub_name);
        {
            auto f = open_out(dir / sub_name / "dm_trace.csv");
            f << "layer,dm_plain,dm_gsa,s,s_tilde\n";
            for (std::size_t l = 0; l <= depth; ++l) {
                f << l << ',' << fmt(rep.per_layer_dm_plain[l]) << ',' << fmt(rep.per_layer_dm_gsa[l]) << ',';
                if (l < depth) {
                    f << fmt(rep.per_layer_s[l]) << ',';
                    if (rep.assumption_ok[l]) f << fmt(rep.per_layer_s_tilde[l]);
                } else {
                    f << ',';
                }
                f << '\n';
            }
        }
        for (const auto& note : rep.notes) std::cout << "  note: " << note << '\n';
        std::cout << "  lambda=" << fmt(rep.lambda) << " nodes_used=" << rep.nodes_used << '\n';
        m.outputs.push_back(sub_name + "/dm_trace.csv");
        if (!sweep.empty()) {
            const auto gs = gamma_reversal_sweep(data.node.graph, data.node.x, first_gsa, depth, act, sweep);
            auto f = open_out(dir / sub_name / "gamma_sweep.csv");
            f << "gamma,final_ratio\n";
            for (std::size_t i = 0; i < gs.gammas.size(); ++i) f << fmt(gs.gammas[i]) << ',' << fmt(gs.final_ratio[i]) << '\n';
            std::cout << "  smallest_reversal_gamma="
                      << (gs.smallest_reversal ? fmt(*gs.smallest_reversal) : std::string("none")) << '\n';
            m.outputs.push_back(sub_name + "/gamma_sweep.csv");
        }
    }
    m.wall_clock_seconds = seconds_since(t0);
    write_manifest(dir, m);
    return kOk;
}

int cmd_lemmas(std::size_t count, double gamma, double eps, std::uint64_t seed, const std::string& out) {
    const auto t0 = Clock::now();
    const fs::path dir = prepare_dir(out);
    auto lines = open_out(dir / "lemmas.jsonl");
    std::size_t valid = 0, pd = 0, amp = 0, sandwich = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const auto inst = sample_lemma_instance(seed, i);
        const auto r = run_lemma_instance(inst, gamma, eps);
        ordered_json j;
        j["index"] = r.index;
        j["n"] = r.n;
        j["c"] = r.c;
        j["assumptions_hold"] = r.assumptions_hold;
        if (r.assumptions_hold) {
            ++valid;
            pd += r.pd.pass;
            amp += r.amp.pass;
            sandwich += r.amp.sandwich;
            j["lambda_min_P"] = r.pd.lambda_min;
            j["sigma_min_P"] = r.pd.sigma_min;
            j["sigma_max_P"] = r.pd.sigma_max;
            j["s"] = r.amp.s;
            j["s_tilde"] = r.amp.s_tilde;
            j["pd_pass"] = r.pd.pass;
            j["amp_pass"] = r.amp.pass;
            j["sandwich"] = r.amp.sandwich;
            if (gamma == 0.0) j["boundary"] = r.amp.s_tilde == r.amp.s;
        } else {
            j["violation"] = r.violation;
        }
        std::cout << j.dump() << '\n';
        lines << j.dump() << '\n';
    }
    std::cout << "pd_pass=" << pd << '/' << valid << " amp_pass=" << amp << '/' << valid
              << " sandwich=" << sandwich << '/' << valid << " violations=" << (count - valid) << '\n';
    ordered_json cfg{{"n_instances", count}, {"gamma", gamma}, {"eps", eps}, {"seed", seed}};
    RunManifest m{"lemmas", cfg, seed, "", GSAGCN_VERSION, seconds_since(t0), {"lemmas.jsonl"}};
    write_manifest(dir, m);
    if (gamma == 0.0) return kLemmaBoundary;
    if (pd != valid || amp != valid || sandwich != valid) return kLemmaFailure;
    return kOk;
}

int cmd_dropedge(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& ds,
                 const std::vector<std::size_t>& rs, const std::string& signs, std::uint64_t seed, bool k6,
                 const std::string& out) {
    const auto t0 = Clock::now();
    const fs::path dir = prepare_dir(out);
    auto lines = open_out(dir / "dropedge.jsonl");
    int code = kOk;
    for (std::size_t n : ns) {
        for (std::size_t d : ds) {
            for (std::size_t r : rs) {
                ordered_json j{{"n", n}, {"d", d}, {"r", r}};
                std::cout << "n=" << n << " d=" << d << " r=" << r;
                try {
                    const PairSigns ps = signs == "positive" ? PairSigns(n, 1) : PairSigns::random(n, seed);
                    const auto rep = dropedge_simulation(n, d, r, ps, seed);
                    j["eliminated"] = rep.eliminated_count;
                    j["guaranteed"] = rep.guaranteed_count;
                    j["search_succeeded"] = rep.search_succeeded;
                    j["arrangement"] = rep.arrangement;
                    std::cout << " eliminated=" << rep.eliminated_count << " guaranteed=" << rep.guaranteed_count
                              << " arrangement=\"" << rep.arrangement << "\"\n";
                    if (rep.eliminated_count < rep.guaranteed_count && code == kOk) code = kLemmaFailure;
                } catch (const Error& e) {
                    j["error"] = e.what();
                    std::cout << " error=\"" << e.what() << "\"\n";
                    code = kRuntimeError;
                }
                lines << j.dump() << '\n';
            }
        }
    }
    if (k6) {
        const auto sw = exhaustive_k6_sweep(seed);
        std::cout << "k6_assignments=" << sw.assignments << " with_mono_triangle=" << sw.with_mono_triangle
                  << " min_eliminated=" << sw.min_eliminated << '\n';
        lines << ordered_json{{"k6_assignments", sw.assignments},
                              {"with_mono_triangle", sw.with_mono_triangle},
                              {"min_eliminated", sw.min_eliminated}}
                     .dump()
              << '\n';
        if (sw.with_mono_triangle != sw.assignments && code == kOk) code = kLemmaFailure;
    }
    ordered_json cfg{{"n", ns}, {"d", ds}, {"r", rs}, {"signs", signs}, {"seed", seed}, {"exhaustive_k6", k6}};
    RunManifest m{"dropedge-sim", cfg, seed, "", GSAGCN_VERSION, seconds_since(t0), {"dropedge.jsonl"}};
    write_manifest(dir, m);
    return code;
}

int cmd_decompose(const std::string& run_dir, const std::string& checkpoint, const std::string& mode,
                  const std::string& diag, std::optional<double> gamma_override, const std::string& out) {
    const auto t0 = Clock::now();
    const fs::path rdir = resolve_output_dir(run_dir);
    const RunConfig cfg = config_from_run(rdir);
    const LoadedData data = load_data(cfg);
    if (data.graph_task) throw InputError("decompose-loss: needs a node-classification run");
    const ModelSpec spec = spec_for(cfg, data);
    const fs::path ckpt = checkpoint.empty() ? rdir / "params.bin" : fs::path(checkpoint);
    const auto params = load_checkpoint(ckpt);
    const auto na = normalize_adjacency(data.node.graph);
    const auto fwd = model_forward(spec, params, na, data.node.x, false, 0);
    const LayerCache& last = fwd.caches.back();
    const GsaLayerParams& lp = params.back();
    const std::size_t n = data.node.graph.num_nodes();
    const Mat mask = last.attention ? last.mask : Mat(n, n);
    const double gamma = gamma_override ? *gamma_override : lp.gamma;
    const Mat h_last = matmul(last.h_in, lp.w);
    const auto dec = loss_decomposition(last.h_in, h_last, na, data.node.graph, mask, gamma,
                                        mode == "self" ? FeatureRegMode::self : FeatureRegMode::cross,
                                        diag == "exclude" ? ComplementDiagonal::exclude : ComplementDiagonal::include);

    const Mat& gm = dec.geometry_matrix;
    double mn = gm(0, 0), mx = gm(0, 0), sum = 0.0, maxdiff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            mn = std::min(mn, gm(i, j));
            mx = std::max(mx, gm(i, j));
            sum += gm(i, j);
            maxdiff = std::max(maxdiff, std::abs(gm(i, j) - na.mat(i, j)));
        }
    }
    ordered_json j;
    j["checkpoint"] = ckpt.string();
    j["gamma"] = dec.gamma;
    j["reg_mode"] = mode;
    j["feature_reg"] = dec.feature_reg;
    j["feature_reg_unclamped"] = dec.feature_reg_unclamped;
    j["geometry"] = {{"min", mn},
                     {"max", mx},
                     {"mean", sum / static_cast<double>(n * n)},
                     {"frobenius", frobenius_norm(gm)},
                     {"max_abs_diff_from_adjacency", maxdiff},
                     {"equals_adjacency", gm == na.mat}};
    const fs::path dir = prepare_dir(out.empty() ? (rdir / "decompose").string() : out);
    open_out(dir / "decomposition.json") << j.dump(2) << '\n';
    RunManifest m{"decompose-loss", to_json(cfg), cfg.seed, data.fingerprint, GSAGCN_VERSION, seconds_since(t0),
                  {"decomposition.json"}};
    write_manifest(dir, m);
    std::cout << j.dump() << '\n';
    return kOk;
}

int cmd_gen_synth(const RunConfig& cfg, const std::string& kind, const std::string& out, const CLI::App* sub) {
    const auto t0 = Clock::now();
    const fs::path dir = prepare_dir(out);
    write_config_toml(dir, sub);
    RunManifest m{"gen-synth", to_json(cfg), 0, "", GSAGCN_VERSION, 0.0, {"config.toml"}};
    if (kind == "sbm") {
        const NodeDataset ds = gen_feature_sbm(cfg.sbm);
        export_dataset(ds, dir);
        m.seed = cfg.sbm.seed;
        m.outputs.insert(m.outputs.end(), {"edges.tsv", "features.csv", "masks.csv"});
        RunConfig c = cfg;
        c.dataset = dir.string();
        m.dataset_fingerprint = load_data(c).fingerprint;
    } else {
        const GraphDataset ds = gen_graph_classification(cfg.graphs);
        m.seed = cfg.graphs.seed;
        ordered_json items = ordered_json::array();
        for (const auto& it : ds.items) {
            ordered_json e = ordered_json::array();
            for (const auto& [u, v] : it.graph.edges()) e.push_back({u, v});
            ordered_json x = ordered_json::array();
            for (std::size_t i = 0; i < it.x.rows(); ++i) {
                x.push_back(std::vector<double>(it.x.row(i).begin(), it.x.row(i).end()));
            }
            const char* split = it.split == Split::train ? "train" : it.split == Split::val ? "val" : "test";
            items.push_back({{"nodes", it.graph.num_nodes()}, {"edges", e}, {"features", x}, {"label", it.label},
                             {"split", split}});
        }
        const std::string text = ordered_json{{"num_classes", ds.num_classes},
                                              {"feature_dim", ds.feature_dim},
                                              {"items", items}}
                                     .dump() +
                                 "\n";
        open_out(dir / "graphs.json") << text;
        m.outputs.push_back("graphs.json");
        m.dataset_fingerprint = sha256_hex(text);
    }
    m.wall_clock_seconds = seconds_since(t0);
    write_manifest(dir, m);
    std::cout << "wrote " << dir.string() << '\n';
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"GCN / GSA-GCN laboratory: training, over-smoothing and lemma diagnostics", "gsagcn"};
    app.set_config("--config", "", "TOML file with [<command>] sections; flags override it");
    app.set_version_flag("--version", GSAGCN_VERSION);
    app.require_subcommand(1);

    RunConfig train_cfg;
    std::string train_out;
    auto* train = app.add_subcommand("train", "Train a node or graph classifier");
    add_run_options(train, train_cfg);
    train->add_option("--out", train_out, "Output directory")->required();
    train->fallthrough();

    std::string eval_run, eval_ckpt, eval_out;
    auto* eval = app.add_subcommand("eval", "Score a trained checkpoint on its run's dataset");
    eval->add_option("--run", eval_run, "Directory of a train run")->required();
    eval->add_option("--checkpoint", eval_ckpt, "Defaults to <run>/params.bin");
    eval->add_option("--out", eval_out, "Defaults to <run>/eval");
    eval->fallthrough();

    RunConfig os_cfg;
    std::string os_out;
    std::vector<std::size_t> depths{2, 4, 8, 16, 32};
    std::size_t os_seeds = 1;
    std::vector<double> sweep{0.1, 0.25, 0.5, 1.0, 2.0, 4.0};
    auto* os = app.add_subcommand("oversmooth", "Train plain and GSA stacks over a range of depths");
    add_run_options(os, os_cfg);
    os->add_option("--depths", depths, "Comma-separated depths")->delimiter(',')->capture_default_str();
    os->add_option("--seeds", os_seeds, "Seeds averaged per depth")->capture_default_str()->check(CLI::PositiveNumber);
    os->add_option("--gamma-sweep", sweep, "Gammas for the reversal sweep (empty to skip)")
        ->delimiter(',')
        ->capture_default_str();
    os->add_option("--out", os_out, "Output directory")->required();
    os->fallthrough();

    std::size_t lem_n = 100;
    double lem_gamma = 0.5, lem_eps = 0.01;
    std::uint64_t lem_seed = 0;
    std::string lem_out = "runs/lemmas";
    auto* lem = app.add_subcommand("lemmas", "Positive-definiteness and amplification checks on seeded instances");
    lem->add_option("--n-instances", lem_n)->capture_default_str();
    lem->add_option("--gamma", lem_gamma)->capture_default_str()->check(CLI::NonNegativeNumber);
    lem->add_option("--eps", lem_eps, "Shift of the approximated adjacency")->capture_default_str()->check(CLI::PositiveNumber);
    lem->add_option("--seed", lem_seed)->capture_default_str();
    lem->add_option("--out", lem_out)->capture_default_str();
    lem->fallthrough();

    std::vector<std::size_t> de_n{4, 8, 16, 64}, de_d{2}, de_r{1, 2};
    std::string de_signs = "random", de_out = "runs/dropedge-sim";
    std::uint64_t de_seed = 0;
    bool de_k6 = false;
    auto* de = app.add_subcommand("dropedge-sim", "Monochromatic-clique elimination counts");
    de->add_option("--n", de_n)->delimiter(',')->capture_default_str();
    de->add_option("--d", de_d)->delimiter(',')->capture_default_str();
    de->add_option("--r", de_r)->delimiter(',')->capture_default_str();
    de->add_option("--signs", de_signs, "random | positive")->capture_default_str()->check(CLI::IsMember({"random", "positive"}));
    de->add_option("--seed", de_seed)->capture_default_str();
    de->add_flag("--exhaustive-k6", de_k6, "Also sweep all 2^15 sign assignments of K6");
    de->add_option("--out", de_out)->capture_default_str();
    de->fallthrough();

    std::string dl_run, dl_ckpt, dl_mode = "cross", dl_diag = "include", dl_out;
    std::optional<double> dl_gamma;
    auto* dl = app.add_subcommand("decompose-loss", "Geometry matrix and feature regularization of a checkpoint");
    dl->add_option("--run", dl_run, "Directory of a train run")->required();
    dl->add_option("--checkpoint", dl_ckpt, "Defaults to <run>/params.bin");
    dl->add_option("--reg-mode", dl_mode, "cross | self")->capture_default_str()->check(CLI::IsMember({"cross", "self"}));
    dl->add_option("--complement-diagonal", dl_diag, "include | exclude")
        ->capture_default_str()
        ->check(CLI::IsMember({"include", "exclude"}));
    dl->add_option("--gamma", dl_gamma, "Evaluate at this gamma instead of the checkpoint's");
    dl->add_option("--out", dl_out, "Defaults to <run>/decompose");
    dl->fallthrough();

    RunConfig gs_cfg;
    std::string gs_kind = "sbm", gs_out;
    auto* gs = app.add_subcommand("gen-synth", "Write a synthetic dataset in the export formats");
    gs->add_option("--kind", gs_kind, "sbm | graphs")->capture_default_str()->check(CLI::IsMember({"sbm", "graphs"}));
    add_synth_options(gs, gs_cfg);
    gs->add_option("--out", gs_out, "Output directory")->required();
    gs->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*train) return cmd_train(train_cfg, train_out, train);
        if (*eval) return cmd_eval(eval_run, eval_ckpt, eval_out);
        if (*os) return cmd_oversmooth(os_cfg, depths, os_seeds, sweep, os_out, os);
        if (*lem) return cmd_lemmas(lem_n, lem_gamma, lem_eps, lem_seed, lem_out);
        if (*de) return cmd_dropedge(de_n, de_d, de_r, de_signs, de_seed, de_k6, de_out);
        if (*dl) return cmd_decompose(dl_run, dl_ckpt, dl_mode, dl_diag, dl_gamma, dl_out);
        if (*gs) return cmd_gen_synth(gs_cfg, gs_kind, gs_out, gs);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsage;
}

}  // namespace gsagcn::cli
