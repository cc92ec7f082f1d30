#include "gsagcn/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gsagcn/errors.hpp"

namespace gsagcn {

namespace {

std::string shape_str(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                         " differ");
    }
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Column blocking keeps a slab of the right operand hot in cache; the k order
// per output entry is untouched.
constexpr std::size_t kColumnBlock = 512;

}  // namespace

// ---------------------------------------------------------------------------
// Mat

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("Mat: data length " + std::to_string(data_.size()) + " != " +
                         std::to_string(rows_) + "*" + std::to_string(cols_));
    }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("Mat: ragged initializer list");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diagonal(std::span<const double> values) {
    Mat m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

// ---------------------------------------------------------------------------
// Elementwise

Mat transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Mat add(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "add");
    Mat c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
    return c;
}

Mat subtract(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "subtract");
    Mat c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
    return c;
}

Mat scale(const Mat& a, double s) {
    Mat c = a;
    for (double& x : c.data()) x *= s;
    return c;
}

Mat hadamard(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "hadamard");
    Mat c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) cd[i] *= bd[i];
    return c;
}

void axpy(double alpha, const Mat& x, Mat& y) {
    require_same_shape(x, y, "axpy");
    auto xd = x.data();
    auto yd = y.data();
    for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += alpha * xd[i];
}

double frobenius_norm(const Mat& a) { return norm2(a.data()); }

double frobenius_inner(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "frobenius_inner");
    double s = 0.0;
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) s += ad[i] * bd[i];
    return s;
}

bool all_finite(const Mat& a) {
    return std::all_of(a.data().begin(), a.data().end(), [](double x) { return std::isfinite(x); });
}

bool is_symmetric(const Mat& a, double tol) {
    if (a.rows() != a.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Products

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
    }
    const std::size_t m = a.rows(), kdim = a.cols(), n = b.cols();
    Mat c(m, n);
    for (std::size_t j0 = 0; j0 < n; j0 += kColumnBlock) {
        const std::size_t j1 = std::min(n, j0 + kColumnBlock);
        for (std::size_t i = 0; i < m; ++i) {
            double* crow = c.row(i).data();
            const double* arow = a.row(i).data();
            for (std::size_t k = 0; k < kdim; ++k) {
                const double aik = arow[k];
                if (aik == 0.0) continue;
                const double* brow = b.row(k).data();
                for (std::size_t j = j0; j < j1; ++j) crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
    }
    const std::size_t m = a.cols(), n = b.cols();
    Mat c(m, n);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* arow = a.row(r).data();
        const double* brow = n ? b.row(r).data() : nullptr;
        for (std::size_t i = 0; i < m; ++i) {
            const double ari = arow[i];
            if (ari == 0.0) continue;
            double* crow = c.row(i).data();
            for (std::size_t j = 0; j < n; ++j) crow[j] += ari * brow[j];
        }
    }
    return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
    }
    const std::size_t m = a.rows(), n = b.rows(), kdim = a.cols();
    Mat c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.row(i).data();
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b.row(j).data();
            double s = 0.0;
            for (std::size_t k = 0; k < kdim; ++k) s += arow[k] * brow[k];
            c(i, j) = s;
        }
    }
    return c;
}

Mat gram(const Mat& a) { return matmul_tn(a, a); }

// ---------------------------------------------------------------------------
// Softmax

Mat row_softmax(const Mat& s) {
    Mat out(s.rows(), s.cols());
    for (std::size_t i = 0; i < s.rows(); ++i) {
        auto in = s.row(i);
        auto o = out.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (double x : in) mx = std::max(mx, x);
        if (!std::isfinite(mx)) {
            throw InputError("row_softmax: row " + std::to_string(i) + " has no finite entry");
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (double& x : o) x /= sum;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectral

SpectralEstimate max_singular_value(const Mat& m, double tol, std::size_t max_iters) {
    SpectralEstimate est;
    est.tolerance = tol;
    const std::size_t n = m.cols();
    if (n == 0 || m.rows() == 0) {
        est.converged = true;
        return est;
    }
    Mat v(n, 1, 1.0 / std::sqrt(static_cast<double>(n)));
    bool perturbed = false;
    double best = 0.0;
    double prev = -1.0;
    // Mixes a fixed seeded unit vector into the iterate. Used once, when the
    // start vector has no component along the top direction.
    auto perturb = [&] {
        perturbed = true;
        std::mt19937_64 gen(0x5eedf00dULL);
        std::normal_distribution<double> nd(0.0, 1.0);
        Mat r(n, 1);
        for (double& x : r.data()) x = nd(gen);
        const double rn = frobenius_norm(r);
        for (std::size_t i = 0; i < n; ++i) v(i, 0) += r(i, 0) / rn;
        const double vn = frobenius_norm(v);
        for (double& x : v.data()) x /= vn;
        prev = -1.0;
    };
    for (std::size_t it = 1; it <= max_iters; ++it) {
        est.iterations = it;
        Mat u = matmul(m, v);
        const double sigma = frobenius_norm(u);
        if (sigma == 0.0 || (prev > 0.0 && sigma < prev * (1.0 - 1e-3))) {
            // Stalled in (or collapsing toward) a null direction.
            if (perturbed) {
                est.value = std::max({sigma, prev, best});
                est.converged = est.value == 0.0;
                return est;
            }
            best = std::max(best, prev);
            perturb();
            continue;
        }
        est.value = std::max(sigma, best);
        Mat w = matmul_tn(m, u);
        const double wn = frobenius_norm(w);
        for (std::size_t i = 0; i < n; ++i) v(i, 0) = w(i, 0) / wn;
        if (prev > 0.0 && std::abs(sigma - prev) <= tol * sigma) {
            // A converged limit may still be a lower singular value when the
            // start vector missed the top direction: restart once and keep
            // the larger limit.
            if (!perturbed) {
                best = sigma;
                perturb();
                continue;
            }
            est.converged = true;
            return est;
        }
        prev = sigma;
    }
    return est;
}

std::vector<double> sym_eigenvalues(const Mat& m) {
    if (m.rows() != m.cols()) throw InputError("sym_eigenvalues: matrix is not square");
    const std::size_t n = m.rows();
    double amax = 0.0;
    for (double x : m.data()) amax = std::max(amax, std::abs(x));
    if (!is_symmetric(m, 1e-10 * std::max(1.0, amax))) {
        throw InputError("sym_eigenvalues: matrix is not symmetric within 1e-10");
    }
    Mat a = m;
    // Symmetrize exactly so rotations act on a truly symmetric matrix.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

    const double total = frobenius_norm(a);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off == 0.0 || std::sqrt(off) <= 1e-15 * total) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

EigenExtremes sym_eig_extreme(const Mat& m) {
    auto eig = sym_eigenvalues(m);
    if (eig.empty()) throw InputError("sym_eig_extreme: empty matrix");
    return {eig.front(), eig.back()};
}

EigenExtremes singular_extremes(const Mat& m) {
    if (m.empty()) throw InputError("singular_extremes: empty matrix");
    const Mat g = m.cols() <= m.rows() ? gram(m) : matmul_nt(m, m);
    const auto eig = sym_eigenvalues(g);
    return {std::sqrt(std::max(0.0, eig.front())), std::sqrt(std::max(0.0, eig.back()))};
}

// ---------------------------------------------------------------------------
// Cholesky

Mat cholesky(const Mat& a) {
    if (a.rows() != a.cols()) throw InputError("cholesky: matrix is not square");
    const std::size_t n = a.rows();
    Mat l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw SingularityError("cholesky: matrix is not positive definite (pivot " +
                                       std::to_string(j) + ")",
                                   j);
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

Mat cholesky_solve(const Mat& factor, const Mat& b) {
    const std::size_t n = factor.rows();
    if (b.rows() != n) {
        throw ShapeError("cholesky_solve: factor " + shape_str(factor) + ", rhs " + shape_str(b));
    }
    Mat x = b;
    const std::size_t m = b.cols();
    // Forward: L y = b, row-oriented so each step touches contiguous rows.
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = factor(i, k);
            if (lik == 0.0) continue;
            auto xk = x.row(k);
            for (std::size_t j = 0; j < m; ++j) xi[j] -= lik * xk[j];
        }
        const double d = factor(i, i);
        for (double& v : xi) v /= d;
    }
    // Backward: L^T x = y.
    for (std::size_t ii = n; ii-- > 0;) {
        auto xi = x.row(ii);
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double lki = factor(k, ii);
            if (lki == 0.0) continue;
            auto xk = x.row(k);
            for (std::size_t j = 0; j < m; ++j) xi[j] -= lki * xk[j];
        }
        const double d = factor(ii, ii);
        for (double& v : xi) v /= d;
    }
    return x;
}

Mat solve_spd(const Mat& a, const Mat& b) {
    if (a.rows() != a.cols()) throw InputError("solve_spd: matrix is not square");
    if (b.rows() != a.rows()) {
        throw ShapeError("solve_spd: " + shape_str(a) + " with rhs " + shape_str(b));
    }
    double amax = 0.0;
    for (double x : a.data()) amax = std::max(amax, std::abs(x));
    if (!is_symmetric(a, 1e-10 * std::max(1.0, amax))) {
        throw InputError("solve_spd: matrix is not symmetric");
    }
    return cholesky_solve(cholesky(a), b);
}

}  // namespace gsagcn
