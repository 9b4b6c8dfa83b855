#pragma once

// Self-contained dense and banded linear algebra sized for this project:
// the action Hessians are block-tridiagonal (bandwidth 2n with n <= 2), and
// the few dense eigen-decompositions are on matrices small enough for Jacobi.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "symhom/core.hpp"

namespace symhom {

// ---------------------------------------------------------------------------
// Dense matrices (row-major)
// ---------------------------------------------------------------------------

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    Vec mul(const Vec& x) const {
        Vec y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[i] += a_[i * cols_ + j] * x[j];
        return y;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec a_;
};

/// LU solve with partial pivoting; returns false when the matrix is
/// numerically singular.
inline bool lu_solve(Matrix a, Vec b, Vec& x) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw InvalidInput("lu_solve: shape mismatch");
    std::vector<std::size_t> piv(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > best) { best = std::abs(a(i, k)); p = i; }
        if (best < 1e-300) return false;
        piv[k] = p;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(b[k], b[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = a(i, k) / a(k, k);
            a(i, k) = m;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
            b[i] -= m * b[k];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return true;
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns the
/// eigenvalues ascending; eigenvectors (columns) are optional.
inline Vec jacobi_eigenvalues(Matrix a, Matrix* vectors = nullptr, int max_sweeps = 64) {
    const std::size_t n = a.rows();
    Matrix v(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) < 1e-14 * (1.0 + std::sqrt(off))) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    double apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return ev[x] < ev[y]; });
    Vec sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = ev[order[i]];
    if (vectors) {
        *vectors = Matrix(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) (*vectors)(i, j) = v(i, order[j]);
    }
    return sorted;
}

// ---------------------------------------------------------------------------
// Banded matrices (LAPACK gbtrf-style storage, partial pivoting)
// ---------------------------------------------------------------------------

/// General banded matrix with kl sub- and ku super-diagonals. Factorization
/// uses row pivoting, which can fill up to kl extra super-diagonals.
class BandMatrix {
public:
    BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(ldab_ * n, 0.0) {}

    std::size_t dim() const { return n_; }
    std::size_t lower() const { return kl_; }
    std::size_t upper() const { return ku_; }

    /// Entry (i, j); writes outside the band throw.
    double& at(std::size_t i, std::size_t j) {
        if (j + kl_ < i || i + ku_ < j) throw InvalidInput("BandMatrix: outside band");
        return ab_[idx(i, j)];
    }
    double get(std::size_t i, std::size_t j) const {
        if (j + kl_ < i || i + ku_ + kl_ < j) return 0.0;  // includes fill band
        return ab_[idx(i, j)];
    }

    Vec mul(const Vec& x) const {
        Vec y(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            std::size_t ilo = j > ku_ ? j - ku_ : 0;
            std::size_t ihi = std::min(n_ - 1, j + kl_);
            for (std::size_t i = ilo; i <= ihi; ++i) y[i] += ab_[idx(i, j)] * x[j];
        }
        return y;
    }

    struct Factor {
        std::size_t n, kl, ku, ldab;
        Vec ab;                      // factored storage (U in band, multipliers below)
        std::vector<std::size_t> piv;
        bool singular = false;

        void solve(Vec b, Vec& x) const {
            for (std::size_t k = 0; k + 1 < n; ++k) {
                if (piv[k] != k) std::swap(b[k], b[piv[k]]);
                std::size_t last = std::min(n - 1, k + kl);
                for (std::size_t i = k + 1; i <= last; ++i)
                    b[i] -= ab[pos(i, k)] * b[k];
            }
            x.assign(n, 0.0);
            std::size_t width = kl + ku;  // fill widens U
            for (std::size_t ii = n; ii-- > 0;) {
                double s = b[ii];
                std::size_t jhi = std::min(n - 1, ii + width);
                for (std::size_t j = ii + 1; j <= jhi; ++j) s -= ab[pos(ii, j)] * x[j];
                x[ii] = s / ab[pos(ii, ii)];
            }
        }

        std::size_t pos(std::size_t i, std::size_t j) const {
            return (kl + ku + i - j) + j * ldab;
        }
    };

    /// LU factorization with partial pivoting.
    Factor factor() const {
        Factor f{n_, kl_, ku_, ldab_, ab_, std::vector<std::size_t>(n_), false};
        const std::size_t width = kl_ + ku_;
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t last = std::min(n_ - 1, k + kl_);
            std::size_t p = k;
            double best = std::abs(f.ab[f.pos(k, k)]);
            for (std::size_t i = k + 1; i <= last; ++i) {
                double v = std::abs(f.ab[f.pos(i, k)]);
                if (v > best) { best = v; p = i; }
            }
            f.piv[k] = p;
            if (best < 1e-300) { f.singular = true; return f; }
            if (p != k) {
                std::size_t jhi = std::min(n_ - 1, k + width);
                for (std::size_t j = k; j <= jhi; ++j)
                    std::swap(f.ab[f.pos(k, j)], f.ab[f.pos(p, j)]);
            }
            for (std::size_t i = k + 1; i <= last; ++i) {
                double m = f.ab[f.pos(i, k)] / f.ab[f.pos(k, k)];
                f.ab[f.pos(i, k)] = m;
                std::size_t jhi = std::min(n_ - 1, k + width);
                for (std::size_t j = k + 1; j <= jhi; ++j)
                    f.ab[f.pos(i, j)] -= m * f.ab[f.pos(k, j)];
            }
        }
        return f;
    }

private:
    std::size_t idx(std::size_t i, std::size_t j) const {
        return (kl_ + ku_ + i - j) + j * ldab_;
    }
    std::size_t n_, kl_, ku_, ldab_;
    Vec ab_;
};

/// Inertia (negative count, near-zero count) of a symmetric banded matrix via
/// unpivoted LDL^T with a shift-retry when a pivot collapses. `zero_tol` is
/// relative to the largest diagonal scale.
struct Inertia {
    int negatives = 0;
    bool degenerate = false;  // some pivot within zero_tol of 0
};

inline Inertia banded_inertia(const BandMatrix& a, double zero_tol = 1e-8) {
    const std::size_t n = a.dim();
    const std::size_t b = std::max(a.lower(), a.upper());
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a.get(i, i)));
    for (std::size_t i = 0; i + 1 < n; ++i) scale = std::max(scale, std::abs(a.get(i, i + 1)));
    if (scale == 0.0) scale = 1.0;

    auto attempt = [&](double shift, Inertia& out) -> bool {
        // dense-in-band LDL^T without pivoting
        std::vector<Vec> col(n);  // col[j][i-j] for i in [j, j+b]
        for (std::size_t j = 0; j < n; ++j) {
            col[j].assign(b + 1, 0.0);
            for (std::size_t i = j; i <= std::min(n - 1, j + b); ++i)
                col[j][i - j] = a.get(i, j) - (i == j ? shift : 0.0);
        }
        Vec d(n, 0.0);
        out = Inertia{};
        for (std::size_t j = 0; j < n; ++j) {
            double dj = col[j][0];
            std::size_t klo = j > b ? j - b : 0;
            for (std::size_t k = klo; k < j; ++k) {
                double l = col[k][j - k];
                dj -= l * l * d[k];
            }
            if (std::abs(dj) < 1e-12 * scale) return false;  // pivot collapse
            if (std::abs(dj) < zero_tol * scale) out.degenerate = true;
            d[j] = dj;
            if (dj < 0) ++out.negatives;
            for (std::size_t i = j + 1; i <= std::min(n - 1, j + b); ++i) {
                double s = col[j][i - j];
                std::size_t klo2 = i > b ? i - b : 0;
                for (std::size_t k = std::max(klo, klo2); k < j; ++k)
                    s -= col[k][i - k] * col[k][j - k] * d[k];
                col[j][i - j] = s / dj;
            }
        }
        return true;
    };

    Inertia res;
    if (attempt(0.0, res)) return res;
    // Shift slightly in both directions; a differing count brackets a zero
    // eigenvalue, which we report as degeneracy.
    Inertia lo, hi;
    double eps = 1e-7 * scale;
    bool okl = attempt(eps, lo), okh = attempt(-eps, hi);
    if (okl && okh) {
        Inertia out;
        out.negatives = std::min(lo.negatives, hi.negatives);
        out.degenerate = lo.negatives != hi.negatives || lo.degenerate || hi.degenerate;
        return out;
    }
    Inertia out = okl ? lo : hi;
    out.degenerate = true;
    return out;
}

/// Smallest |eigenvalue| estimate of a symmetric banded matrix by inverse
/// iteration on the pivoted LU factors.
inline double banded_min_abs_eigenvalue(const BandMatrix& a, Rng& rng, int iters = 30) {
    auto f = a.factor();
    if (f.singular) return 0.0;
    const std::size_t n = a.dim();
    Vec x(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    double inv_norm = 0.0;
    for (int it = 0; it < iters; ++it) {
        double nx = norm2(x);
        if (nx == 0.0) return 0.0;
        for (double& v : x) v /= nx;
        Vec y;
        f.solve(x, y);
        inv_norm = norm2(y);
        if (!std::isfinite(inv_norm) || inv_norm > 1e300) return 0.0;
        x = y;
    }
    return inv_norm > 0 ? 1.0 / inv_norm : 0.0;
}

// ---------------------------------------------------------------------------
// Planar convex hull (for 2-dimensional subdifferential polytopes)
// ---------------------------------------------------------------------------

/// Monotone-chain hull; returns vertices in counterclockwise order.
inline std::vector<std::array<double, 2>> convex_hull_2d(std::vector<std::array<double, 2>> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;
    auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                    const std::array<double, 2>& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<std::array<double, 2>> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Distance from a point to a convex polygon (0 when inside).
inline double hull_distance_2d(const std::vector<std::array<double, 2>>& hull, double x, double y) {
    if (hull.empty()) return std::numeric_limits<double>::infinity();
    if (hull.size() == 1) return std::hypot(x - hull[0][0], y - hull[0][1]);
    auto seg_dist = [&](const std::array<double, 2>& a, const std::array<double, 2>& b) {
        double vx = b[0] - a[0], vy = b[1] - a[1];
        double wx = x - a[0], wy = y - a[1];
        double t = (vx * vx + vy * vy) > 0 ? (vx * wx + vy * wy) / (vx * vx + vy * vy) : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return std::hypot(wx - t * vx, wy - t * vy);
    };
    bool inside = hull.size() >= 3;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        double cr = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        if (cr < 0) inside = false;
        dmin = std::min(dmin, seg_dist(a, b));
    }
    return inside ? 0.0 : dmin;
}

}  // namespace symhom
