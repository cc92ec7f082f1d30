#include "gsagcn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "gsagcn/errors.hpp"
#include "gsagcn/rng.hpp"

namespace gsagcn {

namespace {

std::vector<std::string_view> split_on(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t count_true(const std::vector<bool>& m) {
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
}

std::vector<std::vector<std::size_t>> members_by_class(const std::vector<int>& labels) {
    int maxl = -1;
    for (int l : labels) {
        if (l < 0) throw InputError("split: negative label");
        maxl = std::max(maxl, l);
    }
    std::vector<std::vector<std::size_t>> by(static_cast<std::size_t>(maxl + 1));
    for (std::size_t i = 0; i < labels.size(); ++i) by[static_cast<std::size_t>(labels[i])].push_back(i);
    return by;
}

}  // namespace

void NodeDataset::validate() const {
    const std::size_t n = graph.num_nodes();
    if (x.rows() != n) throw InputError("NodeDataset: feature rows do not match node count");
    if (labels.size() != n) throw InputError("NodeDataset: label count does not match node count");
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
            throw InputError("NodeDataset: label " + std::to_string(l) + " outside [0, " +
                             std::to_string(num_classes) + ")");
        }
    }
    const auto& m = masks;
    if (m.train.empty() && m.val.empty() && m.test.empty()) return;
    if (m.train.size() != n || m.val.size() != n || m.test.size() != n) {
        throw InputError("NodeDataset: mask length does not match node count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (int(m.train[i]) + int(m.val[i]) + int(m.test[i]) > 1) {
            throw InputError("NodeDataset: masks overlap at node " + std::to_string(i));
        }
    }
}

void GraphDataset::validate() const {
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& it = items[i];
        if (it.graph.num_nodes() == 0) throw InputError("GraphDataset: item " + std::to_string(i) + " is empty");
        if (it.x.rows() != it.graph.num_nodes() || it.x.cols() != feature_dim) {
            throw InputError("GraphDataset: item " + std::to_string(i) + " has inconsistent features");
        }
        if (it.label < 0 || static_cast<std::size_t>(it.label) >= num_classes) {
            throw InputError("GraphDataset: item " + std::to_string(i) + " label out of range");
        }
    }
}

void SynthConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(p_in) || !prob(p_out)) throw ParameterError("SynthConfig: probabilities must lie in [0, 1]");
    if (cross_class_edge_boost < 0.0) throw ParameterError("SynthConfig: cross_class_edge_boost must be >= 0");
    if (num_classes == 0 || n < num_classes) throw ParameterError("SynthConfig: need 1 <= num_classes <= n");
    if (feature_dim == 0) throw ParameterError("SynthConfig: feature_dim must be positive");
    if (feature_noise < 0.0) throw ParameterError("SynthConfig: feature_noise must be >= 0");
}

void GraphSynthConfig::validate() const {
    if (graphs_per_class == 0) throw ParameterError("GraphSynthConfig: graphs_per_class must be positive");
    if (feature_dim == 0) throw ParameterError("GraphSynthConfig: feature_dim must be positive");
    if (min_nodes < 4 || max_nodes < min_nodes) {
        throw ParameterError("GraphSynthConfig: need 4 <= min_nodes <= max_nodes");
    }
    if (feature_noise < 0.0) throw ParameterError("GraphSynthConfig: feature_noise must be >= 0");
    if (train_frac <= 0.0 || val_frac < 0.0 || train_frac + val_frac >= 1.0) {
        throw ParameterError("GraphSynthConfig: fractions must be positive and sum below 1");
    }
}

// ---------------------------------------------------------------------------
// Planetoid

PlanetoidLoad load_planetoid(const std::filesystem::path& content_path,
                             const std::filesystem::path& cites_path) {
    std::ifstream content(content_path);
    if (!content) throw InputError("cannot open " + content_path.string());
    std::ifstream cites(cites_path);
    if (!cites) throw InputError("cannot open " + cites_path.string());
    return load_planetoid(content, cites);
}

PlanetoidLoad load_planetoid(std::istream& content, std::istream& cites) {
    PlanetoidLoad out;
    NodeDataset& ds = out.dataset;
    std::unordered_map<std::string, std::size_t> index;
    std::unordered_map<std::string, int> label_index;
    std::vector<double> feats;
    std::size_t width = 0;
    bool have_width = false;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(content, line)) {
        ++lineno;
        const std::string_view sv = trim(line);
        if (sv.empty()) continue;
        const auto fields = split_on(sv, '\t');
        if (fields.size() < 3) throw ParseError("content: expected id, features and label", lineno);
        const std::size_t d = fields.size() - 2;
        if (!have_width) {
            width = d;
            have_width = true;
        } else if (d != width) {
            throw FormatError("content: line " + std::to_string(lineno) + " has " + std::to_string(d) +
                              " features, expected " + std::to_string(width));
        }
        std::string id(trim(fields.front()));
        if (id.empty()) throw ParseError("content: empty node id", lineno);
        if (!index.emplace(id, ds.node_ids.size()).second) {
            throw FormatError("content: duplicate node id '" + id + "' at line " + std::to_string(lineno));
        }
        ds.node_ids.push_back(id);
        for (std::size_t j = 1; j + 1 < fields.size(); ++j) {
            double v = 0.0;
            if (!parse_double(fields[j], v)) throw ParseError("content: bad feature value", lineno);
            feats.push_back(v);
        }
        std::string lab(trim(fields.back()));
        if (lab.empty()) throw ParseError("content: empty label", lineno);
        auto [it, inserted] = label_index.emplace(lab, static_cast<int>(ds.class_names.size()));
        if (inserted) ds.class_names.push_back(lab);
        ds.labels.push_back(it->second);
    }
    const std::size_t n = ds.node_ids.size();
    if (n == 0) throw FormatError("content: no nodes");
    ds.x = Mat(n, width, std::move(feats));
    ds.num_classes = ds.class_names.size();

    std::vector<Graph::Edge> edges;
    lineno = 0;
    while (std::getline(cites, line)) {
        ++lineno;
        const std::string_view sv = trim(line);
        if (sv.empty()) continue;
        auto fields = split_on(sv, '\t');
        if (fields.size() != 2) throw ParseError("cites: expected two tab-separated ids", lineno);
        auto a = index.find(std::string(trim(fields[0])));
        auto b = index.find(std::string(trim(fields[1])));
        if (a == index.end() || b == index.end()) {
            ++out.skipped_citations;
            continue;
        }
        if (a->second == b->second) {
            ++out.self_citations;
            continue;
        }
        edges.emplace_back(a->second, b->second);
    }
    ds.graph = Graph(n, std::move(edges));
    return out;
}

// ---------------------------------------------------------------------------
// Splits

SplitMasks make_semi_split(const std::vector<int>& labels, std::size_t per_class,
                           std::size_t val_size, std::size_t test_size, std::uint64_t seed) {
    const std::size_t n = labels.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (seed != 0) {
        auto gen = make_stream(seed, "split/semi");
        std::shuffle(order.begin(), order.end(), gen);
    }
    const auto by = members_by_class(labels);
    SplitMasks m{std::vector<bool>(n), std::vector<bool>(n), std::vector<bool>(n)};
    std::vector<std::size_t> taken(by.size(), 0);
    for (std::size_t i : order) {
        const auto c = static_cast<std::size_t>(labels[i]);
        if (taken[c] < per_class) {
            m.train[i] = true;
            ++taken[c];
        }
    }
    for (std::size_t c = 0; c < by.size(); ++c) {
        if (taken[c] < per_class) {
            throw InputError("make_semi_split: class " + std::to_string(c) + " has " +
                             std::to_string(by[c].size()) + " nodes, need " + std::to_string(per_class));
        }
    }
    std::size_t val = 0, test = 0;
    for (std::size_t i : order) {
        if (m.train[i]) continue;
        if (val < val_size) {
            m.val[i] = true;
            ++val;
        } else if (test < test_size) {
            m.test[i] = true;
            ++test;
        }
    }
    if (val < val_size || test < test_size) {
        throw InputError("make_semi_split: only " + std::to_string(n - count_true(m.train)) +
                         " unlabeled nodes for " + std::to_string(val_size) + " val + " +
                         std::to_string(test_size) + " test");
    }
    return m;
}

SplitMasks make_full_split(const std::vector<int>& labels, double train_frac, double val_frac,
                           std::uint64_t seed) {
    if (!(train_frac > 0.0) || val_frac < 0.0 || !(train_frac + val_frac < 1.0)) {
        throw ParameterError("make_full_split: fractions must be positive and sum below 1");
    }
    const std::size_t n = labels.size();
    auto by = members_by_class(labels);
    auto gen = make_stream(seed, "split/full");
    SplitMasks m{std::vector<bool>(n), std::vector<bool>(n), std::vector<bool>(n)};
    for (std::size_t c = 0; c < by.size(); ++c) {
        auto& mem = by[c];
        std::shuffle(mem.begin(), mem.end(), gen);
        const double cnt = static_cast<double>(mem.size());
        const auto ntr = std::min(mem.size(), static_cast<std::size_t>(std::llround(train_frac * cnt)));
        const auto nva = std::min(mem.size() - ntr, static_cast<std::size_t>(std::llround(val_frac * cnt)));
        for (std::size_t k = 0; k < mem.size(); ++k) {
            if (k < ntr) m.train[mem[k]] = true;
            else if (k < ntr + nva) m.val[mem[k]] = true;
            else m.test[mem[k]] = true;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Synthetic generators

NodeDataset gen_feature_sbm(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n, k = cfg.num_classes, d = cfg.feature_dim;
    NodeDataset ds;
    ds.num_classes = k;
    ds.labels.resize(n);
    // Contiguous balanced blocks; the first n % k classes get one extra node.
    std::size_t pos = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t size = n / k + (c < n % k ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) ds.labels[pos++] = static_cast<int>(c);
    }

    auto pgen = make_stream(cfg.seed, "sbm/prototypes");
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat proto(k, d);
    for (std::size_t c = 0; c < k; ++c) {
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            proto(c, j) = nd(pgen);
            norm += proto(c, j) * proto(c, j);
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d; ++j) proto(c, j) /= norm;
    }
    auto fgen = make_stream(cfg.seed, "sbm/features");
    ds.x = Mat(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(ds.labels[i]);
        for (std::size_t j = 0; j < d; ++j) {
            const double noise = cfg.feature_noise * nd(fgen);
            ds.x(i, j) = proto(c, j) + noise;
        }
    }

    const double p_out = std::min(1.0, cfg.p_out + cfg.cross_class_edge_boost);
    auto egen = make_stream(cfg.seed, "sbm/edges");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Graph::Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = ds.labels[i] == ds.labels[j] ? cfg.p_in : p_out;
            if (u(egen) < p) edges.emplace_back(i, j);
        }
    }
    ds.graph = Graph(n, std::move(edges));
    ds.masks = make_full_split(ds.labels, 0.6, 0.2, substream_seed(cfg.seed, "sbm/split"));
    return ds;
}

const char* topology_name(Topology t) {
    switch (t) {
        case Topology::triangle: return "triangle";
        case Topology::path: return "path";
        case Topology::star: return "star";
        case Topology::clique: return "clique";
    }
    return "?";
}

namespace {

std::vector<Graph::Edge> topology_edges(Topology t, std::size_t n) {
    std::vector<Graph::Edge> e;
    switch (t) {
        case Topology::triangle:
            e = {{0, 1}, {1, 2}, {0, 2}};
            break;
        case Topology::path:
            for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
            break;
        case Topology::star:
            for (std::size_t i = 1; i < n; ++i) e.emplace_back(0, i);
            break;
        case Topology::clique:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
            break;
    }
    return e;
}

}  // namespace

GraphDataset gen_graph_classification(const GraphSynthConfig& cfg) {
    cfg.validate();
    constexpr std::size_t kClasses = 8;
    GraphDataset ds;
    ds.num_classes = kClasses;
    // Prototype block followed by a one-hot degree block (degrees 0..max_nodes-1).
    ds.feature_dim = cfg.feature_dim + cfg.max_nodes;

    auto sgen = make_stream(cfg.seed, "graphs/sizes");
    auto fgen = make_stream(cfg.seed, "graphs/features");
    auto split_gen = make_stream(cfg.seed, "graphs/split");
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size_dist(cfg.min_nodes, cfg.max_nodes);

    for (std::size_t c = 0; c < kClasses; ++c) {
        const auto topo = static_cast<Topology>(c / 2);
        const bool proto_a = c % 2 == 0;
        std::vector<std::size_t> slots(cfg.graphs_per_class);
        std::iota(slots.begin(), slots.end(), 0);
        std::shuffle(slots.begin(), slots.end(), split_gen);
        const double cnt = static_cast<double>(cfg.graphs_per_class);
        const auto ntr = static_cast<std::size_t>(std::llround(cfg.train_frac * cnt));
        const auto nva = static_cast<std::size_t>(std::llround(cfg.val_frac * cnt));
        std::vector<Split> split_of(cfg.graphs_per_class, Split::test);
        for (std::size_t k = 0; k < slots.size(); ++k) {
            if (k < ntr) split_of[slots[k]] = Split::train;
            else if (k < ntr + nva) split_of[slots[k]] = Split::val;
        }
        for (std::size_t g = 0; g < cfg.graphs_per_class; ++g) {
            const std::size_t nn = topo == Topology::triangle ? 3 : size_dist(sgen);
            GraphItem item;
            item.graph = Graph(nn, topology_edges(topo, nn));
            item.label = static_cast<int>(c);
            item.split = split_of[g];
            item.x = Mat(nn, ds.feature_dim);
            for (std::size_t i = 0; i < nn; ++i) {
                for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
                    // Prototype A is 1 on even coordinates, B on odd ones.
                    const double base = (j % 2 == 0) == proto_a ? 1.0 : 0.0;
                    item.x(i, j) = base + cfg.feature_noise * nd(fgen);
                }
                const std::size_t deg = std::min(item.graph.degree(i), cfg.max_nodes - 1);
                item.x(i, cfg.feature_dim + deg) = 1.0;
            }
            ds.items.push_back(std::move(item));
        }
    }
    return ds;
}

Mat row_normalize(const Mat& x) {
    Mat out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        double s = 0.0;
        for (double v : r) s += v;
        if (s != 0.0) {
            for (double& v : r) v /= s;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export / import

void write_features_csv(std::ostream& out, const NodeDataset& ds) {
    out << "node_id";
    for (std::size_t j = 0; j < ds.x.cols(); ++j) out << ",f" << (j + 1);
    out << ",label\n";
    for (std::size_t i = 0; i < ds.x.rows(); ++i) {
        out << i;
        for (double v : ds.x.row(i)) out << ',' << fmt_double(v);
        out << ',' << ds.labels[i] << '\n';
    }
}

void write_masks_csv(std::ostream& out, const NodeDataset& ds) {
    out << "node_id,train,val,test\n";
    const auto& m = ds.masks;
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        auto bit = [&](const std::vector<bool>& v) { return i < v.size() && v[i] ? 1 : 0; };
        out << i << ',' << bit(m.train) << ',' << bit(m.val) << ',' << bit(m.test) << '\n';
    }
}

void export_dataset(const NodeDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw InputError("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("edges.tsv");
        write_edge_list(f, ds.graph);
    }
    {
        auto f = open("features.csv");
        write_features_csv(f, ds);
    }
    {
        auto f = open("masks.csv");
        write_masks_csv(f, ds);
    }
}

NodeDataset import_dataset(const std::filesystem::path& dir) {
    NodeDataset ds;
    std::ifstream feats(dir / "features.csv");
    if (!feats) throw InputError("cannot open " + (dir / "features.csv").string());
    std::string line;
    if (!std::getline(feats, line)) throw FormatError("features.csv: missing header");
    const auto header = split_on(trim(line), ',');
    if (header.size() < 2 || header.front() != "node_id" || header.back() != "label") {
        throw ParseError("features.csv: header must be node_id,f1..fd,label", 1);
    }
    const std::size_t d = header.size() - 2;
    std::vector<double> values;
    std::size_t lineno = 1;
    int maxl = -1;
    while (std::getline(feats, line)) {
        ++lineno;
        const auto sv = trim(line);
        if (sv.empty()) continue;
        const auto f = split_on(sv, ',');
        if (f.size() != d + 2) throw ParseError("features.csv: wrong field count", lineno);
        std::size_t id = 0;
        if (!parse_size(f[0], id) || id != ds.labels.size()) {
            throw ParseError("features.csv: node ids must be 0..n-1 in order", lineno);
        }
        for (std::size_t j = 1; j <= d; ++j) {
            double v = 0.0;
            if (!parse_double(f[j], v)) throw ParseError("features.csv: bad value", lineno);
            values.push_back(v);
        }
        std::size_t lab = 0;
        if (!parse_size(f.back(), lab)) throw ParseError("features.csv: bad label", lineno);
        ds.labels.push_back(static_cast<int>(lab));
        maxl = std::max(maxl, static_cast<int>(lab));
    }
    const std::size_t n = ds.labels.size();
    ds.x = Mat(n, d, std::move(values));
    ds.num_classes = static_cast<std::size_t>(maxl + 1);

    std::ifstream edges(dir / "edges.tsv");
    if (!edges) throw InputError("cannot open " + (dir / "edges.tsv").string());
    ds.graph = read_edge_list(edges, n);

    std::ifstream masks(dir / "masks.csv");
    if (masks) {
        ds.masks = SplitMasks{std::vector<bool>(n), std::vector<bool>(n), std::vector<bool>(n)};
        std::getline(masks, line);
        lineno = 1;
        while (std::getline(masks, line)) {
            ++lineno;
            const auto sv = trim(line);
            if (sv.empty()) continue;
            const auto f = split_on(sv, ',');
            std::size_t id = 0, a = 0, b = 0, c = 0;
            if (f.size() != 4 || !parse_size(f[0], id) || id >= n || !parse_size(f[1], a) ||
                !parse_size(f[2], b) || !parse_size(f[3], c)) {
                throw ParseError("masks.csv: expected node_id,train,val,test", lineno);
            }
            ds.masks.train[id] = a != 0;
            ds.masks.val[id] = b != 0;
            ds.masks.test[id] = c != 0;
        }
    }
    ds.validate();
    return ds;
}

}  // namespace gsagcn
