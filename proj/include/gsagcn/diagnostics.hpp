#ifndef GSAGCN_DIAGNOSTICS_HPP
#define GSAGCN_DIAGNOSTICS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsagcn/gnn.hpp"
#include "gsagcn/graph.hpp"
#include "gsagcn/mat.hpp"

namespace gsagcn {

// ---------------------------------------------------------------------------
// Loss decomposition

/// Which feature similarity weights a disconnected pair (i, j).
enum class FeatureRegMode {
    cross,  // <h_i, h_j>
    self,   // <h_i, h_i>
};

struct LossDecomposition {
    /// A' = A_norm + gamma (Abar + L) o B, L the all-ones matrix minus I.
    Mat geometry_matrix;
    /// Pair terms with a negative similarity clamped to 0.
    double feature_reg = 0.0;
    double feature_reg_unclamped = 0.0;
    double gamma = 0.0;
};

/// feature_reg = gamma/2 * sum over ordered pairs i != j with no edge of
/// sim(i, j) * ||h_last_i - h_last_j||^2.
LossDecomposition loss_decomposition(const Mat& h_prev, const Mat& h_last,
                                     const NormalizedAdjacency& na, const Graph& g,
                                     const Mat& mask, double gamma,
                                     FeatureRegMode mode = FeatureRegMode::cross,
                                     ComplementDiagonal diag = ComplementDiagonal::include);

// ---------------------------------------------------------------------------
// Subspace distance and effective weight

/// ||h - e e^T h||_F with e the unit principal direction. Throws
/// ConnectivityError on a disconnected adjacency.
double subspace_distance(const Mat& h, const NormalizedAdjacency& na);

struct EffectiveWeight {
    Mat w_tilde;
    /// True when A_norm was not positive definite and the shifted form
    /// (1 + eps) I + D^{-1/2} A D^{-1/2} stood in for it.
    bool shifted = false;
};

/// W~ = (I + gamma (H^T H)^{-1} H^T A^{-1} B H) W. Throws AssumptionViolation
/// when H^T H has smallest eigenvalue <= 1e-10.
EffectiveWeight effective_weight(const Mat& h, const NormalizedAdjacency& na, const Mat& mask,
                                 double gamma, const Mat& w, double eps = 0.01);

/// Smallest eigenvalue of H^T H (full column rank check).
double gram_min_eigenvalue(const Mat& h);

// ---------------------------------------------------------------------------
// Lemma checks

struct LemmaPd {
    double lambda_min = 0.0;   // smallest real part of eig(P)
    double lambda_max = 0.0;
    double max_imag = 0.0;     // largest |imaginary part| among eig(P)
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    bool pass = false;         // lambda_min > 1
};

struct LemmaAmplification {
    double s = 0.0;
    double s_tilde = 0.0;
    double sigma_min_p = 0.0;
    double sigma_max_p = 0.0;
    bool pass = false;        // s_tilde > s
    /// sigma_min(P) s <= s_tilde <= sigma_max(P) s, up to 1e-12 relative slack.
    bool sandwich = false;
};

/// P = I + gamma (H^T H)^{-1} H^T C H with C = A'^{-1} Bhat, A' the shifted
/// normalized adjacency and Bhat = G^T G + 1e-3 I for a seeded Gaussian G.
/// H must be square and invertible; otherwise AssumptionViolation.
Mat lemma_operator(const Mat& h, const Graph& g, double eps, double gamma, std::uint64_t seed);

LemmaPd check_lemma_pd(const Mat& h, const Graph& g, double eps, double gamma,
                       std::uint64_t seed);

LemmaAmplification check_singular_amplification(const Mat& h, const Graph& g, double eps,
                                                double gamma, const Mat& w, std::uint64_t seed);

struct LemmaInstance {
    std::size_t index = 0;
    Graph graph;
    Mat h;
    Mat w;
    std::uint64_t seed = 0;
};

/// Instance `index` of the seeded family: n in [4, 12], G(n, 0.4) graph,
/// square Gaussian H, Gaussian W with 2..n columns.
LemmaInstance sample_lemma_instance(std::uint64_t root_seed, std::size_t index);

struct LemmaInstanceResult {
    std::size_t index = 0;
    std::size_t n = 0;
    std::size_t c = 0;
    bool assumptions_hold = false;
    std::string violation;
    LemmaPd pd;
    LemmaAmplification amp;
};

LemmaInstanceResult run_lemma_instance(const LemmaInstance& inst, double gamma, double eps);

// ---------------------------------------------------------------------------
// Over-smoothing

struct OversmoothReport {
    /// Entry l is d_M(H^(l)); entry 0 is the input features.
    std::vector<double> per_layer_dm_plain;
    std::vector<double> per_layer_dm_gsa;
    /// Entry l describes layer l (0-based, one per layer).
    std::vector<double> per_layer_s;
    /// NaN where the layer input violates full column rank (see flags).
    std::vector<double> per_layer_s_tilde;
    std::vector<bool> assumption_ok;
    std::vector<std::string> notes;
    double lambda = 0.0;
    double gamma = 0.0;
    /// Nodes kept (largest connected component).
    std::size_t nodes_used = 0;
};

/// Runs a plain stack (weights params[l].w) and a GSA stack (params[l]) on
/// the largest component of `g`. Hidden layers use `act`, the last layer is
/// linear. Effective weights are skipped for inputs wider than 512 columns.
OversmoothReport oversmooth_trace(const Graph& g, const Mat& x,
                                  const std::vector<GsaLayerParams>& params, std::size_t depth,
                                  Activation act, double eps = 0.01);

struct GammaSweep {
    std::vector<double> gammas;
    /// d_M(H_gsa^(L)) / d_M(H_plain^(L)) per gamma.
    std::vector<double> final_ratio;
    std::optional<double> smallest_reversal;
};

/// Replaces every layer's gamma by each candidate in turn (ascending order is
/// not required) and reports the smallest one whose final-layer distance
/// exceeds the plain stack's.
GammaSweep gamma_reversal_sweep(const Graph& g, const Mat& x,
                                const std::vector<GsaLayerParams>& params, std::size_t depth,
                                Activation act, const std::vector<double>& gammas);

// ---------------------------------------------------------------------------
// DropEdge simulation

/// Symmetric +1/-1 influence sign for every pair of distinct vertices.
class PairSigns {
public:
    PairSigns() = default;
    explicit PairSigns(std::size_t n, int fill = 1);
    static PairSigns random(std::size_t n, std::uint64_t seed);

    std::size_t size() const noexcept { return n_; }
    int operator()(std::size_t i, std::size_t j) const { return s_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, int sign);

private:
    std::size_t n_ = 0;
    std::vector<signed char> s_;
};

struct DropEdgeSimReport {
    std::size_t n = 0, d = 0, r = 0;
    std::size_t eliminated_count = 0;
    std::size_t guaranteed_count = 0;
    bool search_succeeded = false;
    std::vector<std::vector<std::size_t>> cliques;
    std::vector<int> clique_signs;
    /// Human-readable clique list, e.g. "+{0,1} -{2,3}".
    std::string arrangement;
};

std::size_t ramsey_diagonal(std::size_t s);

/// Seeded d-regular simple graph (relabelled circulant). ParameterError when
/// none exists for (n, d).
Graph regular_graph(std::size_t n, std::size_t d, std::uint64_t seed);

/// Packs disjoint monochromatic (r+1)-cliques of the signed complete graph,
/// gives every member a GSA relation of weight 1/d with sign equal to the
/// clique colour and counts members whose GSA term cancels one opposite-sign
/// neighbour influence exactly. Neighbour influences are seeded with both
/// signs present at every vertex, which requires d >= 2.
DropEdgeSimReport dropedge_simulation(std::size_t n, std::size_t d, std::size_t r,
                                      const PairSigns& signs, std::uint64_t seed);
/// Same with seeded random pair signs.
DropEdgeSimReport dropedge_simulation(std::size_t n, std::size_t d, std::size_t r,
                                      std::uint64_t seed);

struct K6Sweep {
    std::size_t assignments = 0;
    std::size_t with_mono_triangle = 0;
    std::size_t min_eliminated = 0;
};

/// Every one of the 2^15 sign assignments on K6 (n=6, d=2, r=2).
K6Sweep exhaustive_k6_sweep(std::uint64_t seed);

}  // namespace gsagcn

#endif  // GSAGCN_DIAGNOSTICS_HPP
