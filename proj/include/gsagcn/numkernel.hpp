#ifndef GSAGCN_NUMKERNEL_HPP
#define GSAGCN_NUMKERNEL_HPP

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gsagcn/mat.hpp"

namespace gsagcn {

/// Result of an iterative spectral estimate.
struct SpectralEstimate {
    double value = 0.0;
    std::size_t iterations = 0;
    double tolerance = 0.0;
    bool converged = false;
};

struct EigenExtremes {
    double min = 0.0;
    double max = 0.0;
};

// ---------------------------------------------------------------------------
// Elementwise and structural helpers. All throw ShapeError on mismatch.

Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat subtract(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double s);
Mat hadamard(const Mat& a, const Mat& b);
/// y += alpha * x, in place.
void axpy(double alpha, const Mat& x, Mat& y);
double frobenius_norm(const Mat& a);
/// Sum of elementwise products, accumulated in row-major order.
double frobenius_inner(const Mat& a, const Mat& b);
bool all_finite(const Mat& a);
bool is_symmetric(const Mat& a, double tol);

// ---------------------------------------------------------------------------
// Products

/// Standard product a*b. Each output entry accumulates over k in increasing
/// order starting from +0.0, so results are deterministic and zero entries of
/// `a` can be skipped without changing a single bit.
Mat matmul(const Mat& a, const Mat& b);
/// a^T * b without materializing the transpose.
Mat matmul_tn(const Mat& a, const Mat& b);
/// a * b^T.
Mat matmul_nt(const Mat& a, const Mat& b);
/// a^T * a.
Mat gram(const Mat& a);

// ---------------------------------------------------------------------------
// Nonlinearities

/// Row-wise softmax with max subtraction. Entries equal to -inf map to an
/// exact zero; every row needs at least one finite entry.
Mat row_softmax(const Mat& s);

// ---------------------------------------------------------------------------
// Spectral routines

/// Largest singular value by power iteration on m^T m, starting from the
/// normalized all-ones vector. Reports converged=false with the best
/// estimate if the relative change never drops below `tol`.
SpectralEstimate max_singular_value(const Mat& m, double tol = 1e-12,
                                    std::size_t max_iters = 20000);

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi.
/// Throws InputError when asymmetry exceeds 1e-10 (relative to max |a_ij|).
std::vector<double> sym_eigenvalues(const Mat& m);

/// Smallest and largest eigenvalue of a symmetric matrix (cyclic Jacobi).
EigenExtremes sym_eig_extreme(const Mat& m);

/// Smallest and largest singular value via the eigenvalues of m^T m.
/// Exact to rounding for the small matrices the diagnostics use.
EigenExtremes singular_extremes(const Mat& m);

// ---------------------------------------------------------------------------
// Linear solves

/// Lower-triangular Cholesky factor L with a = L L^T.
/// Throws SingularityError naming the first non-positive pivot.
Mat cholesky(const Mat& a);

/// Solves L L^T x = b given a Cholesky factor.
Mat cholesky_solve(const Mat& factor, const Mat& b);

/// Solves a x = b for symmetric positive definite a.
Mat solve_spd(const Mat& a, const Mat& b);

}  // namespace gsagcn

#endif  // GSAGCN_NUMKERNEL_HPP
