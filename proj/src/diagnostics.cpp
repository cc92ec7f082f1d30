#include "gsagcn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gsagcn/errors.hpp"
#include "gsagcn/numkernel.hpp"
#include "gsagcn/rng.hpp"

namespace gsagcn {

namespace {

std::string dims(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double row_dot(const Mat& a, std::size_t i, std::size_t j) {
    auto x = a.row(i);
    auto y = a.row(j);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
    return s;
}

double row_dist2(const Mat& a, std::size_t i, std::size_t j) {
    auto x = a.row(i);
    auto y = a.row(j);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        s += d * d;
    }
    return s;
}

Mat gaussian(std::size_t r, std::size_t c, std::mt19937_64& gen) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat m(r, c);
    for (double& x : m.data()) x = nd(gen);
    return m;
}

// (H^T H)^{-1} rhs. A Gram matrix that passed the eigenvalue screen can still
// be too ill-conditioned for Cholesky; that is the same rank assumption
// failing numerically.
Mat solve_gram(const Mat& hth, const Mat& rhs, const char* who) {
    try {
        return solve_spd(hth, rhs);
    } catch (const SingularityError& e) {
        throw AssumptionViolation(std::string(who) + ": H^T H is numerically singular (" + e.what() + ")");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Loss decomposition

LossDecomposition loss_decomposition(const Mat& h_prev, const Mat& h_last,
                                     const NormalizedAdjacency& na, const Graph& g,
                                     const Mat& mask, double gamma, FeatureRegMode mode,
                                     ComplementDiagonal diag) {
    const std::size_t n = g.num_nodes();
    if (na.size() != n || h_prev.rows() != n || h_last.rows() != n || mask.rows() != n ||
        mask.cols() != n) {
        throw ShapeError("loss_decomposition: graph has " + std::to_string(n) + " nodes; h_prev " +
                         dims(h_prev) + ", h_last " + dims(h_last) + ", mask " + dims(mask));
    }
    LossDecomposition r;
    r.gamma = gamma;
    r.geometry_matrix = na.mat;
    if (gamma != 0.0) {
        const Mat comp = complement_adjacency(g, diag);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double l = i == j ? 0.0 : 1.0;
                r.geometry_matrix(i, j) += gamma * (comp(i, j) + l) * mask(i, j);
            }
        }
    }

    double clamped = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nb = g.neighbors(i);
        std::size_t next = 0;
        for (std::size_t j = 0; j < n; ++j) {
            while (next < nb.size() && nb[next] < j) ++next;
            if (j == i || (next < nb.size() && nb[next] == j)) continue;
            const double sim = mode == FeatureRegMode::cross ? row_dot(h_prev, i, j)
                                                             : row_dot(h_prev, i, i);
            const double dist = row_dist2(h_last, i, j);
            raw += sim * dist;
            clamped += std::max(sim, 0.0) * dist;
        }
    }
    r.feature_reg = 0.5 * gamma * clamped;
    r.feature_reg_unclamped = 0.5 * gamma * raw;
    return r;
}

// ---------------------------------------------------------------------------
// Subspace distance and effective weight

double subspace_distance(const Mat& h, const NormalizedAdjacency& na) {
    if (h.rows() != na.size()) {
        throw ShapeError("subspace_distance: h " + dims(h) + " vs " + std::to_string(na.size()) + " nodes");
    }
    if (!is_connected(na)) {
        throw ConnectivityError(
            "subspace_distance: graph is disconnected; use its largest component");
    }
    const auto e = principal_direction(na);
    std::vector<double> coef(h.cols(), 0.0);
    for (std::size_t i = 0; i < h.rows(); ++i) {
        auto r = h.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) coef[j] += e[i] * r[j];
    }
    double s = 0.0;
    for (std::size_t i = 0; i < h.rows(); ++i) {
        auto r = h.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double d = r[j] - e[i] * coef[j];
            s += d * d;
        }
    }
    return std::sqrt(s);
}

double gram_min_eigenvalue(const Mat& h) { return sym_eig_extreme(gram(h)).min; }

EffectiveWeight effective_weight(const Mat& h, const NormalizedAdjacency& na, const Mat& mask,
                                 double gamma, const Mat& w, double eps) {
    const std::size_t n = h.rows(), c = h.cols();
    if (na.size() != n || mask.rows() != n || mask.cols() != n || w.rows() != c) {
        throw ShapeError("effective_weight: h " + dims(h) + ", mask " + dims(mask) + ", w " + dims(w));
    }
    const Mat hth = gram(h);
    const double lmin = sym_eig_extreme(hth).min;
    if (!(lmin > 1e-10)) {
        throw AssumptionViolation("effective_weight: H is not of full column rank (min eig of H^T H = " +
                                  std::to_string(lmin) + ")");
    }
    EffectiveWeight out;
    if (gamma == 0.0) {
        out.w_tilde = w;
        return out;
    }
    const Mat bh = matmul(mask, h);
    Mat x;
    try {
        x = cholesky_solve(cholesky(na.mat), bh);
    } catch (const SingularityError&) {
        Mat shifted = na.mat;
        for (std::size_t i = 0; i < n; ++i) shifted(i, i) = 1.0 + eps;
        x = solve_spd(shifted, bh);
        out.shifted = true;
    }
    const Mat z = solve_gram(hth, matmul_tn(h, x), "effective_weight");
    Mat p = Mat::identity(c);
    axpy(gamma, z, p);
    out.w_tilde = matmul(p, w);
    return out;
}

// ---------------------------------------------------------------------------
// Lemma checks

Mat lemma_operator(const Mat& h, const Graph& g, double eps, double gamma, std::uint64_t seed) {
    const std::size_t n = h.rows();
    if (g.num_nodes() != n) throw ShapeError("lemma_operator: H rows must match the graph");
    if (!(gamma >= 0.0)) throw ParameterError("lemma_operator: gamma must be >= 0");
    if (h.cols() != n) {
        throw AssumptionViolation("lemma_operator: H is " + dims(h) +
                                  "; both H^T H and H H^T must be invertible, so H must be square");
    }
    const Mat hth = gram(h);
    const double lmin = sym_eig_extreme(hth).min;
    if (!(lmin > 1e-10)) {
        throw AssumptionViolation("lemma_operator: H is singular (min eig of H^T H = " +
                                  std::to_string(lmin) + ")");
    }
    auto gen = make_stream(seed, "lemma/bhat");
    const Mat gm = gaussian(n, n, gen);
    Mat bhat = gram(gm);
    for (std::size_t i = 0; i < n; ++i) bhat(i, i) += 1e-3;
    const Mat c = solve_spd(shifted_laplacian(g, eps), bhat);
    const Mat q = solve_gram(hth, matmul_tn(h, matmul(c, h)), "lemma_operator");
    Mat p = Mat::identity(n);
    axpy(gamma, q, p);
    return p;
}

LemmaPd check_lemma_pd(const Mat& h, const Graph& g, double eps, double gamma, std::uint64_t seed) {
    const Mat p = lemma_operator(h, g, eps, gamma, seed);
    const std::size_t n = p.rows();
    Eigen::MatrixXd pe(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) pe(Eigen::Index(i), Eigen::Index(j)) = p(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> es(pe, false);
    if (es.info() != Eigen::Success) throw Error("check_lemma_pd: eigenvalue iteration failed");
    LemmaPd r;
    r.lambda_min = std::numeric_limits<double>::infinity();
    r.lambda_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const auto ev = es.eigenvalues()[k];
        r.lambda_min = std::min(r.lambda_min, ev.real());
        r.lambda_max = std::max(r.lambda_max, ev.real());
        r.max_imag = std::max(r.max_imag, std::abs(ev.imag()));
    }
    const auto sv = singular_extremes(p);
    r.sigma_min = sv.min;
    r.sigma_max = sv.max;
    r.pass = r.lambda_min > 1.0;
    return r;
}

LemmaAmplification check_singular_amplification(const Mat& h, const Graph& g, double eps,
                                                double gamma, const Mat& w, std::uint64_t seed) {
    if (w.rows() != h.cols()) throw ShapeError("check_singular_amplification: w " + dims(w) + " vs h " + dims(h));
    const Mat p = lemma_operator(h, g, eps, gamma, seed);
    LemmaAmplification r;
    const auto sp = singular_extremes(p);
    r.sigma_min_p = sp.min;
    r.sigma_max_p = sp.max;
    r.s = singular_extremes(w).max;
    r.s_tilde = singular_extremes(matmul(p, w)).max;
    r.pass = r.s_tilde > r.s;
    constexpr double kSlack = 1e-12;
    r.sandwich = r.sigma_min_p * r.s <= r.s_tilde * (1.0 + kSlack) &&
                 r.s_tilde <= r.sigma_max_p * r.s * (1.0 + kSlack);
    return r;
}

LemmaInstance sample_lemma_instance(std::uint64_t root_seed, std::size_t index) {
    auto gen = make_stream(root_seed, "lemma/instance" + std::to_string(index));
    LemmaInstance inst;
    inst.index = index;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(4, 12)(gen);
    std::bernoulli_distribution edge(0.4);
    std::vector<Graph::Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (edge(gen)) edges.emplace_back(i, j);
    inst.graph = Graph(n, std::move(edges));
    inst.h = gaussian(n, n, gen);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(2, n)(gen);
    inst.w = gaussian(n, m, gen);
    inst.seed = substream_seed(root_seed, "lemma/bhat" + std::to_string(index));
    return inst;
}

LemmaInstanceResult run_lemma_instance(const LemmaInstance& inst, double gamma, double eps) {
    LemmaInstanceResult r;
    r.index = inst.index;
    r.n = inst.h.rows();
    r.c = inst.h.cols();
    try {
        r.pd = check_lemma_pd(inst.h, inst.graph, eps, gamma, inst.seed);
        r.amp = check_singular_amplification(inst.h, inst.graph, eps, gamma, inst.w, inst.seed);
        r.assumptions_hold = true;
    } catch (const AssumptionViolation& e) {
        r.violation = e.what();
    }
    return r;
}

// ---------------------------------------------------------------------------
// Over-smoothing

namespace {

OversmoothReport trace_impl(const Graph& g, const Mat& x, const std::vector<GsaLayerParams>& params,
                            std::size_t depth, Activation act, double eps, bool with_effective) {
    if (depth == 0 || depth > params.size()) {
        throw ParameterError("oversmooth_trace: depth must lie in [1, " + std::to_string(params.size()) + "]");
    }
    if (x.rows() != g.num_nodes()) throw ShapeError("oversmooth_trace: features do not match the graph");
    const Subgraph sub = largest_component(g);
    Mat xs(sub.nodes.size(), x.cols());
    for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
        std::copy(x.row(sub.nodes[i]).begin(), x.row(sub.nodes[i]).end(), xs.row(i).begin());
    }
    const NormalizedAdjacency na = normalize_adjacency(sub.graph);

    OversmoothReport rep;
    rep.nodes_used = sub.nodes.size();
    rep.lambda = spectral_gap(na);
    for (const auto& p : params) {
        if (p.attention()) {
            rep.gamma = p.gamma;
            break;
        }
    }
    Mat hp = xs, hg = xs;
    rep.per_layer_dm_plain.push_back(subspace_distance(hp, na));
    rep.per_layer_dm_gsa.push_back(rep.per_layer_dm_plain.back());
    for (std::size_t l = 0; l < depth; ++l) {
        const Activation a = l + 1 == depth ? Activation::identity : act;
        const GsaLayerParams& p = params[l];
        LayerResult plain = gcn_layer_forward(na, hp, p.w, a);
        LayerResult gsa = gsa_layer_forward(na, hg, p, a);
        if (with_effective) {
            const double s = singular_extremes(p.w).max;
            rep.per_layer_s.push_back(s);
            double st = std::numeric_limits<double>::quiet_NaN();
            bool ok = false;
            std::string note;
            if (!p.attention()) {
                st = s;
                ok = true;
            } else if (hg.cols() > 512) {
                note = "layer " + std::to_string(l) + ": input width " + std::to_string(hg.cols()) +
                       " > 512, effective weight skipped";
            } else {
                try {
                    st = singular_extremes(effective_weight(hg, na, gsa.cache.mask, p.gamma, p.w, eps).w_tilde).max;
                    ok = true;
                } catch (const AssumptionViolation& e) {
                    note = "layer " + std::to_string(l) + ": " + e.what();
                }
            }
            rep.per_layer_s_tilde.push_back(st);
            rep.assumption_ok.push_back(ok);
            if (!note.empty()) rep.notes.push_back(note);
        }
        hp = std::move(plain.out);
        hg = std::move(gsa.out);
        rep.per_layer_dm_plain.push_back(subspace_distance(hp, na));
        rep.per_layer_dm_gsa.push_back(subspace_distance(hg, na));
    }
    return rep;
}

}  // namespace

OversmoothReport oversmooth_trace(const Graph& g, const Mat& x,
                                  const std::vector<GsaLayerParams>& params, std::size_t depth,
                                  Activation act, double eps) {
    return trace_impl(g, x, params, depth, act, eps, true);
}

GammaSweep gamma_reversal_sweep(const Graph& g, const Mat& x,
                                const std::vector<GsaLayerParams>& params, std::size_t depth,
                                Activation act, const std::vector<double>& gammas) {
    GammaSweep out;
    for (double gm : gammas) {
        if (!(gm >= 0.0)) throw ParameterError("gamma_reversal_sweep: gamma must be >= 0");
        auto p = params;
        for (auto& lp : p)
            if (lp.attention()) lp.gamma = gm;
        const auto rep = trace_impl(g, x, p, depth, act, 0.01, false);
        const double ratio = rep.per_layer_dm_gsa.back() / rep.per_layer_dm_plain.back();
        out.gammas.push_back(gm);
        out.final_ratio.push_back(ratio);
        if (ratio > 1.0 && (!out.smallest_reversal || gm < *out.smallest_reversal)) out.smallest_reversal = gm;
    }
    return out;
}

// ---------------------------------------------------------------------------
// DropEdge simulation

PairSigns::PairSigns(std::size_t n, int fill) : n_(n), s_(n * n, static_cast<signed char>(fill)) {
    if (fill != 1 && fill != -1) throw ParameterError("PairSigns: signs are +1 or -1");
}

PairSigns PairSigns::random(std::size_t n, std::uint64_t seed) {
    PairSigns p(n);
    auto gen = make_stream(seed, "dropedge/pair_signs");
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) p.set(i, j, coin(gen) ? 1 : -1);
    return p;
}

void PairSigns::set(std::size_t i, std::size_t j, int sign) {
    if (sign != 1 && sign != -1) throw ParameterError("PairSigns: signs are +1 or -1");
    s_[i * n_ + j] = s_[j * n_ + i] = static_cast<signed char>(sign);
}

std::size_t ramsey_diagonal(std::size_t s) {
    switch (s) {
        case 2: return 2;
        case 3: return 6;
        default:
            throw ParameterError("ramsey_diagonal: only R(2,2) and R(3,3) are available");
    }
}

Graph regular_graph(std::size_t n, std::size_t d, std::uint64_t seed) {
    if (d >= n || (n * d) % 2 != 0) {
        throw ParameterError("regular_graph: no simple " + std::to_string(d) + "-regular graph on " +
                             std::to_string(n) + " nodes");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    auto gen = make_stream(seed, "dropedge/regular");
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<Graph::Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 1; k <= d / 2; ++k) edges.emplace_back(perm[i], perm[(i + k) % n]);
        if (d % 2 == 1 && i < n / 2) edges.emplace_back(perm[i], perm[i + n / 2]);
    }
    return Graph(n, std::move(edges));
}

namespace {

using Clique = std::vector<std::size_t>;

bool monochromatic(const PairSigns& s, const Clique& c) {
    for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = a + 1; b < c.size(); ++b)
            if (s(c[a], c[b]) != s(c[0], c[1])) return false;
    return true;
}

struct TriangleSearch {
    const PairSigns& s;
    std::size_t n;
    std::vector<char> used;
    std::vector<Clique> current, best;
    std::size_t budget = 2'000'000;
    bool exhausted = false;

    void run(std::size_t from, std::size_t free_count) {
        if (budget == 0) {
            exhausted = true;
            return;
        }
        --budget;
        if (current.size() > best.size()) best = current;
        if (current.size() + free_count / 3 <= best.size()) return;
        std::size_t v = from;
        while (v < n && used[v]) ++v;
        if (v >= n) return;
        used[v] = 1;
        for (std::size_t a = v + 1; a < n; ++a) {
            if (used[a]) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (used[b] || s(v, a) != s(v, b) || s(a, b) != s(v, a)) continue;
                used[a] = used[b] = 1;
                current.push_back({v, a, b});
                run(v + 1, free_count - 3);
                current.pop_back();
                used[a] = used[b] = 0;
            }
        }
        // Leave v out of every triangle.
        run(v + 1, free_count - 1);
        used[v] = 0;
    }
};

std::vector<Clique> greedy_triangles(const PairSigns& s) {
    const std::size_t n = s.size();
    std::vector<char> used(n, 0);
    std::vector<Clique> out;
    for (std::size_t v = 0; v < n; ++v) {
        if (used[v]) continue;
        bool found = false;
        for (std::size_t a = v + 1; a < n && !found; ++a) {
            if (used[a] || s(v, a) == 0) continue;
            for (std::size_t b = a + 1; b < n && !found; ++b) {
                if (used[b] || s(v, a) != s(v, b) || s(a, b) != s(v, a)) continue;
                used[v] = used[a] = used[b] = 1;
                out.push_back({v, a, b});
                found = true;
            }
        }
    }
    return out;
}

}  // namespace

DropEdgeSimReport dropedge_simulation(std::size_t n, std::size_t d, std::size_t r,
                                      const PairSigns& signs, std::uint64_t seed) {
    DropEdgeSimReport rep;
    rep.n = n;
    rep.d = d;
    rep.r = r;
    const std::size_t ramsey = ramsey_diagonal(r + 1);
    if (n < 2) {
        rep.search_succeeded = true;
        return rep;
    }
    if (signs.size() != n) throw ShapeError("dropedge_simulation: sign table does not match n");
    if (d < 2) throw ParameterError("dropedge_simulation: mixed neighbour influences need d >= 2");
    const Graph g = regular_graph(n, d, seed);
    rep.guaranteed_count = (r + 1) * (n / ramsey);

    // Neighbour influence signs, both signs present at every vertex.
    auto gen = make_stream(seed, "dropedge/influence");
    std::bernoulli_distribution coin(0.5);
    std::vector<std::vector<int>> influence(n);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& nb = g.neighbors(v);
        auto& inf = influence[v];
        for (std::size_t k = 0; k < nb.size(); ++k) inf.push_back(coin(gen) ? 1 : -1);
        const bool has_pos = std::find(inf.begin(), inf.end(), 1) != inf.end();
        const bool has_neg = std::find(inf.begin(), inf.end(), -1) != inf.end();
        if (!has_pos || !has_neg) {
            const std::size_t k = std::uniform_int_distribution<std::size_t>(0, inf.size() - 1)(gen);
            inf[k] = -inf[k];
        }
    }

    std::vector<Clique> cliques;
    bool complete = true;
    if (r == 1) {
        for (std::size_t v = 0; v + 1 < n; v += 2) cliques.push_back({v, v + 1});
    } else {
        TriangleSearch ts{signs, n, std::vector<char>(n, 0), {}, greedy_triangles(signs)};
        ts.run(0, n);
        cliques = ts.best;
        complete = !ts.exhausted;
    }

    std::ostringstream arr;
    for (const auto& c : cliques) {
        if (!monochromatic(signs, c)) throw ConsistencyError("dropedge_simulation: clique is not monochromatic");
        const int colour = signs(c[0], c[1]);
        rep.cliques.push_back(c);
        rep.clique_signs.push_back(colour);
        if (arr.tellp() > 0) arr << ' ';
        arr << (colour > 0 ? '+' : '-') << '{';
        for (std::size_t k = 0; k < c.size(); ++k) arr << (k ? "," : "") << c[k];
        arr << '}';
        // GSA relations spread weight 1/r over the other r members, each with
        // influence colour/d; in units of 1/(d r) the aggregate is colour * r.
        for (std::size_t v : c) {
            const long gsa_units = static_cast<long>(colour) * static_cast<long>(r);
            const auto& inf = influence[v];
            for (int s : inf) {
                const long neighbour_units = static_cast<long>(s) * static_cast<long>(r);
                if (gsa_units + neighbour_units == 0) {
                    ++rep.eliminated_count;
                    break;
                }
            }
        }
    }
    rep.arrangement = arr.str();
    rep.search_succeeded = complete || rep.cliques.size() * (r + 1) >= rep.guaranteed_count;
    return rep;
}

DropEdgeSimReport dropedge_simulation(std::size_t n, std::size_t d, std::size_t r,
                                      std::uint64_t seed) {
    return dropedge_simulation(n, d, r, PairSigns::random(n, seed), seed);
}

K6Sweep exhaustive_k6_sweep(std::uint64_t seed) {
    constexpr std::size_t n = 6;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    K6Sweep out;
    out.min_eliminated = std::numeric_limits<std::size_t>::max();
    for (std::uint32_t bits = 0; bits < (1u << pairs.size()); ++bits) {
        PairSigns s(n);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            s.set(pairs[k].first, pairs[k].second, (bits >> k) & 1u ? -1 : 1);
        }
        bool mono = false;
        for (std::size_t a = 0; a < n && !mono; ++a)
            for (std::size_t b = a + 1; b < n && !mono; ++b)
                for (std::size_t c = b + 1; c < n && !mono; ++c)
                    mono = s(a, b) == s(a, c) && s(a, b) == s(b, c);
        ++out.assignments;
        if (mono) ++out.with_mono_triangle;
        const auto rep = dropedge_simulation(n, 2, 2, s, seed);
        out.min_eliminated = std::min(out.min_eliminated, rep.eliminated_count);
    }
    return out;
}

}  // namespace gsagcn
