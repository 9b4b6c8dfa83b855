#pragma once

// Discrete stand-in for the generating function quadratic at infinity: the
// broken symplectic action
//
//   W(q_0; p_1, q_1, ..., p_m, q_m)
//     = sum_{i=0}^{m-1} [ tau K(q_i, p_{i+1}, t_i) - p_{i+1} . (q_{i+1} - q_i) ]
//
// whose critical points are exactly the symplectic-Euler orbits of K running
// from the zero section to the zero section (stationarity in q_0 forces zero
// initial momentum, stationarity in q_m forces p_m = 0), and whose critical
// values carry the normalized chord action  int (H - p qdot) dt.
//
// Away from a compact set W differs from the transport quadratic form
// B = -sum p_i u_i (u_i = q_i - q_{i-1}) by the bounded K-sum, which is what
// makes level-set homology of W meaningful on a finite window.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "symhom/core.hpp"
#include "symhom/linalg.hpp"
#include "symhom/models.hpp"

namespace symhom {

// ---------------------------------------------------------------------------
// DiscreteAction
// ---------------------------------------------------------------------------

struct MultistartSpec {
    int count = 64;
    std::uint64_t seed = 1;
    double box_lo = 0.0;   // q_0 sampling box (per component)
    double box_hi = 1.0;
};

class DiscreteAction {
public:
    HamiltonianModel H;      // the unshifted model (kept for translation checks)
    HamiltonianModel K;      // K(q,p,t) = H(q, p - lambda, t)
    OneFormClass lambda;
    int k = 1;               // iterate count (time span)
    int N = 16;              // substeps per unit time (after C1-smallness doubling)
    double tau = 0.0;
    long m = 0;              // k*N steps
    std::size_t n = 1;       // base dimension

    DiscreteAction() = default;

    std::size_t n_vars() const { return std::size_t(2 * m + 1) * n; }

    // variable layout: q_i at offset 2i, p_i at offset 2i-1 (blocks of n)
    std::size_t q_off(long i) const { return std::size_t(2 * i) * n; }
    std::size_t p_off(long i) const { return std::size_t(2 * i - 1) * n; }

    Vec q_at(const Vec& z, long i) const { return Vec(z.begin() + q_off(i), z.begin() + q_off(i) + n); }
    Vec p_at(const Vec& z, long i) const { return Vec(z.begin() + p_off(i), z.begin() + p_off(i) + n); }

    double time_at(long i) const { return double(i) * tau; }

    double value(const Vec& z) const {
        check_dim(z, n_vars(), "DiscreteAction::value");
        double s = 0.0;
        for (long i = 0; i < m; ++i) {
            Vec qi = q_at(z, i), pi1 = p_at(z, i + 1), qi1 = q_at(z, i + 1);
            s += tau * K.eval(qi, pi1, time_at(i));
            for (std::size_t c = 0; c < n; ++c) s -= pi1[c] * (qi1[c] - qi[c]);
        }
        return s;
    }

    Vec gradient(const Vec& z) const {
        check_dim(z, n_vars(), "DiscreteAction::gradient");
        Vec g(n_vars(), 0.0);
        for (long i = 0; i < m; ++i) {
            Vec qi = q_at(z, i), pi1 = p_at(z, i + 1), qi1 = q_at(z, i + 1);
            double t = time_at(i);
            Vec kq = K.grad_q(qi, pi1, t), kp = K.grad_p(qi, pi1, t);
            for (std::size_t c = 0; c < n; ++c) {
                g[q_off(i) + c] += tau * kq[c] + pi1[c];
                g[p_off(i + 1) + c] += tau * kp[c] - (qi1[c] - qi[c]);
                g[q_off(i + 1) + c] += -pi1[c];
            }
        }
        return g;
    }

    /// Banded Hessian (second derivatives of K by central differences of the
    /// exact gradients).
    BandMatrix hessian(const Vec& z, double fd = 1e-5) const {
        const std::size_t dim = n_vars();
        const std::size_t band = 2 * n;
        BandMatrix h(dim, band, band);
        for (long i = 0; i < m; ++i) {
            Vec qi = q_at(z, i), pi1 = p_at(z, i + 1);
            double t = time_at(i);
            // FD blocks of K at (qi, pi1)
            for (std::size_t c = 0; c < n; ++c) {
                Vec qp = qi, qm = qi;
                qp[c] += fd; qm[c] -= fd;
                Vec dq_q = (1.0 / (2 * fd)) * (K.grad_q(qp, pi1, t) - K.grad_q(qm, pi1, t));
                Vec dp_q = (1.0 / (2 * fd)) * (K.grad_p(qp, pi1, t) - K.grad_p(qm, pi1, t));
                Vec pp = pi1, pm = pi1;
                pp[c] += fd; pm[c] -= fd;
                Vec dp_p = (1.0 / (2 * fd)) * (K.grad_p(qi, pp, t) - K.grad_p(qi, pm, t));
                for (std::size_t r = 0; r < n; ++r) {
                    h.at(q_off(i) + r, q_off(i) + c) += tau * dq_q[r];
                    h.at(p_off(i + 1) + r, q_off(i) + c) += tau * dp_q[r];
                    h.at(q_off(i) + r, p_off(i + 1) + c) += tau * dp_q[r];
                    h.at(p_off(i + 1) + r, p_off(i + 1) + c) += tau * dp_p[r];
                }
            }
            for (std::size_t c = 0; c < n; ++c) {
                h.at(q_off(i) + c, p_off(i + 1) + c) += 1.0;
                h.at(p_off(i + 1) + c, q_off(i) + c) += 1.0;
                h.at(p_off(i + 1) + c, q_off(i + 1) + c) += -1.0;
                h.at(q_off(i + 1) + c, p_off(i + 1) + c) += -1.0;
            }
        }
        return h;
    }

    // -- shooting -----------------------------------------------------------

    /// The symplectic-Euler orbit from (q0, p = 0), assembled as a full
    /// variable vector. Critical points of W are exactly the orbits whose
    /// final momentum vanishes.
    Vec orbit_from(const Vec& q0) const {
        check_dim(q0, n, "orbit_from q0");
        Vec z(n_vars(), 0.0);
        for (std::size_t c = 0; c < n; ++c) z[q_off(0) + c] = q0[c];
        Vec q = q0, p = zeros(n);
        for (long i = 0; i < m; ++i) {
            double t = time_at(i);
            Vec p1 = solve_p_update(q, p, t);
            Vec kp = K.grad_p(q, p1, t);
            Vec q1 = q;
            axpy(tau, kp, q1);
            for (std::size_t c = 0; c < n; ++c) {
                z[p_off(i + 1) + c] = p1[c];
                z[q_off(i + 1) + c] = q1[c];
            }
            q = q1;
            p = p1;
        }
        return z;
    }

    /// Final momentum of the shooting orbit (the chord condition is = 0).
    Vec shoot_residual(const Vec& q0) const {
        Vec z = orbit_from(q0);
        return p_at(z, m);
    }

private:
    Vec solve_p_update(const Vec& q, const Vec& p, double t) const {
        // p1 = p - tau dK/dq(q, p1): fixed point (contraction for small tau)
        Vec p1 = p;
        for (int it = 0; it < 64; ++it) {
            Vec kq = K.grad_q(q, p1, t);
            double err = 0.0;
            Vec next(n);
            for (std::size_t c = 0; c < n; ++c) {
                next[c] = p[c] - tau * kq[c];
                err = std::max(err, std::abs(next[c] - p1[c]));
            }
            p1 = next;
            if (err < 1e-14 * (1.0 + norm_inf(p))) return p1;
        }
        // Newton fallback on g(p1) = p1 - p + tau dK/dq(q, p1)
        p1 = p;
        const double fd = 1e-7;
        for (int it = 0; it < 80; ++it) {
            Vec kq = K.grad_q(q, p1, t);
            Vec g(n);
            double err = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                g[c] = p1[c] - p[c] + tau * kq[c];
                err = std::max(err, std::abs(g[c]));
            }
            if (err < 1e-13 * (1.0 + norm_inf(p))) return p1;
            Matrix jac(n, n);
            for (std::size_t c = 0; c < n; ++c) {
                Vec pp = p1, pm = p1;
                pp[c] += fd; pm[c] -= fd;
                Vec dp = (1.0 / (2 * fd)) * (K.grad_q(q, pp, t) - K.grad_q(q, pm, t));
                for (std::size_t r = 0; r < n; ++r) jac(r, c) = (r == c ? 1.0 : 0.0) + tau * dp[r];
            }
            Vec step;
            if (!lu_solve(jac, g, step)) break;
            for (std::size_t c = 0; c < n; ++c) p1[c] -= step[c];
        }
        throw IntegrationFailure("discrete p-update did not converge (increase N)", -1);
    }
};

/// Estimate of max |D^2 K| over the chord-relevant window, used for the
/// C1-smallness step policy. Deterministic grid scan so that small supports
/// cannot slip between probes.
inline double estimate_hessian_norm(const HamiltonianModel& k_model, double p_box = 1.5) {
    double worst = 0.0;
    const double fd = 1e-4;
    const int gq = 24, gp = 25, gt = k_model.time_dependent ? 6 : 1;
    const int g2 = k_model.dim > 1 ? gq : 1;
    for (int it = 0; it < gt; ++it) {
        double t = (it + 0.5) / gt;
        for (int i1 = 0; i1 < gq; ++i1)
            for (int i2 = 0; i2 < g2; ++i2)
                for (int j = 0; j < gp; ++j) {
                    Vec q(k_model.dim, (i1 + 0.5) / gq);
                    if (k_model.dim > 1) q[1] = (i2 + 0.5) / gq;
                    Vec p(k_model.dim, -p_box + 2.0 * p_box * j / (gp - 1));
                    for (std::size_t c = 0; c < k_model.dim; ++c) {
                        Vec qp = q, qm = q, pp = p, pm = p;
                        qp[c] += fd; qm[c] -= fd; pp[c] += fd; pm[c] -= fd;
                        worst = std::max(worst, norm_inf((1.0 / (2 * fd)) * (k_model.grad_q(qp, p, t) - k_model.grad_q(qm, p, t))));
                        worst = std::max(worst, norm_inf((1.0 / (2 * fd)) * (k_model.grad_q(q, pp, t) - k_model.grad_q(q, pm, t))));
                        worst = std::max(worst, norm_inf((1.0 / (2 * fd)) * (k_model.grad_p(q, pp, t) - k_model.grad_p(q, pm, t))));
                    }
                }
    }
    return worst;
}

/// Build W_{k,lambda}. N doubles until tau * max|D^2 K| < 0.5 (capped at 512)
/// so every substep map stays C^1-small without convexity assumptions.
inline DiscreteAction build_discrete_action(const HamiltonianModel& h, const OneFormClass& lam,
                                            int k, int N) {
    if (k < 1) throw InvalidInput("build_discrete_action: k must be >= 1");
    if (N < 4) throw InvalidInput("build_discrete_action: N must be >= 4");
    if (lam.dim() != h.dim) throw InvalidInput("build_discrete_action: lambda dim mismatch");
    DiscreteAction w;
    w.H = h;
    w.K = shift_by_form(h, lam);
    w.lambda = lam;
    w.k = k;
    w.n = h.dim;
    double d2 = estimate_hessian_norm(w.K);
    int n_eff = N;
    while (n_eff < 512 && (1.0 / n_eff) * d2 >= 0.5) n_eff *= 2;
    w.N = n_eff;
    w.tau = 1.0 / n_eff;
    w.m = long(k) * n_eff;
    return w;
}

inline double action_value(const DiscreteAction& w, const Vec& vars) { return w.value(vars); }
inline Vec action_gradient(const DiscreteAction& w, const Vec& vars) { return w.gradient(vars); }

// ---------------------------------------------------------------------------
// Critical points
// ---------------------------------------------------------------------------

struct CriticalPoint {
    Vec vars;                 // full variable vector (q_0, p_1, q_1, ..., p_m, q_m)
    double value = 0.0;       // W at the point
    double grad_norm = 0.0;
    int morse_index = 0;      // index of Hess_xi W minus the background index m*n
    bool degenerate = false;  // near-singular full Hessian (critical manifold)
    Vec lambda_partial;       // calibrated d_lambda W = lifted displacement q_m - q_0
    Vec q0;                   // start of the chord (torus representative)
    Vec displacement;         // q_m_lift - q_0_lift
};

namespace detail {

/// Full-space Newton with Levenberg damping on the banded Hessian; polishes
/// until |grad|_2 <= tol.
inline bool newton_polish(const DiscreteAction& w, Vec& z, double tol = 1e-10, int max_iter = 60) {
    double mu = 0.0;
    Vec g = w.gradient(z);
    double gn = norm2(g);
    for (int it = 0; it < max_iter; ++it) {
        if (gn <= tol) return true;
        BandMatrix hess = w.hessian(z);
        if (mu > 0)
            for (std::size_t i = 0; i < hess.dim(); ++i) hess.at(i, i) += mu;
        auto f = hess.factor();
        if (f.singular) {
            mu = mu == 0 ? 1e-8 * (1.0 + gn) : mu * 10;
            if (mu > 1e6) return false;
            continue;
        }
        Vec step;
        f.solve(g, step);
        bool improved = false;
        double scale = 1.0;
        for (int bt = 0; bt < 12; ++bt) {
            Vec trial = z;
            axpy(-scale, step, trial);
            Vec gt = w.gradient(trial);
            double gtn = norm2(gt);
            if (std::isfinite(gtn) && gtn < gn) {
                z = std::move(trial);
                g = std::move(gt);
                gn = gtn;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) {
            mu = mu == 0 ? 1e-8 * (1.0 + gn) : mu * 10;
            if (mu > 1e6) return false;
        } else if (mu > 0) {
            mu *= 0.25;
            if (mu < 1e-14) mu = 0.0;
        }
    }
    return gn <= tol;
}

inline void fill_point_meta(const DiscreteAction& w, CriticalPoint& cp) {
    cp.value = w.value(cp.vars);
    cp.grad_norm = norm2(w.gradient(cp.vars));
    cp.q0 = wrap_unit(w.q_at(cp.vars, 0));
    Vec qm = w.q_at(cp.vars, w.m), q0l = w.q_at(cp.vars, 0);
    cp.displacement = qm - q0l;
    cp.lambda_partial = cp.displacement;
}

}  // namespace detail

/// Morse index of the Hessian restricted to the fiber variables xi, shifted
/// so the background transport form has index 0. Sets the degeneracy flag
/// from the full Hessian (critical manifolds keep a zero direction there).
inline int reduced_hessian_index(const DiscreteAction& w, CriticalPoint& cp) {
    BandMatrix full = w.hessian(cp.vars);
    const std::size_t dim = w.n_vars();
    const std::size_t band = 2 * w.n;
    BandMatrix xi(dim - w.n, band, band);
    for (std::size_t i = w.n; i < dim; ++i)
        for (std::size_t j = (i > band ? i - band : 0); j <= std::min(dim - 1, i + band); ++j) {
            if (j < w.n) continue;
            double v = full.get(i, j);
            if (v != 0.0) xi.at(i - w.n, j - w.n) = v;
        }
    Inertia in = banded_inertia(xi);
    Rng rng(17);
    double min_eig = banded_min_abs_eigenvalue(full, rng);
    cp.degenerate = in.degenerate || min_eig < 1e-8;
    cp.morse_index = in.negatives - int(w.m * w.n);
    return cp.morse_index;
}

namespace detail {

/// Equilibria of X_K in the window q in [0,1), |p| <= p_box, found by a
/// coarse scan plus 2-d Newton on the vector field. n = 1 only.
inline std::vector<std::array<double, 2>> find_equilibria(const HamiltonianModel& k_model,
                                                          double p_box) {
    std::vector<std::array<double, 2>> out;
    const int gq = 48, gp = 33;
    auto field = [&](double q, double p, double& xq, double& xp) {
        xq = k_model.grad_p({q}, {p}, 0.0)[0];
        xp = -k_model.grad_q({q}, {p}, 0.0)[0];
    };
    // coarse field magnitudes; Newton only from local minima
    std::vector<double> mag(std::size_t(gq) * gp);
    for (int i = 0; i < gq; ++i)
        for (int j = 0; j < gp; ++j) {
            double xq, xp;
            field((i + 0.5) / gq, -p_box + 2.0 * p_box * j / (gp - 1), xq, xp);
            mag[std::size_t(i) * gp + j] = std::abs(xq) + std::abs(xp);
        }
    for (int i = 0; i < gq; ++i)
        for (int j = 0; j < gp; ++j) {
            double m0 = mag[std::size_t(i) * gp + j];
            bool is_min = true;
            for (int di = -1; di <= 1 && is_min; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    int i2 = (i + di + gq) % gq, j2 = j + dj;
                    if (j2 < 0 || j2 >= gp) continue;
                    if (mag[std::size_t(i2) * gp + j2] < m0) { is_min = false; break; }
                }
            if (!is_min) continue;
            double q = (i + 0.5) / gq;
            double p = -p_box + 2.0 * p_box * j / (gp - 1);
            // Newton with FD Jacobian
            bool ok = false;
            for (int it = 0; it < 25; ++it) {
                double xq, xp;
                field(q, p, xq, xp);
                if (std::abs(xq) + std::abs(xp) < 1e-12) { ok = true; break; }
                const double fd = 1e-6;
                double aq, ap, bq, bp;
                field(q + fd, p, aq, ap);
                field(q - fd, p, bq, bp);
                double j11 = (aq - bq) / (2 * fd), j21 = (ap - bp) / (2 * fd);
                field(q, p + fd, aq, ap);
                field(q, p - fd, bq, bp);
                double j12 = (aq - bq) / (2 * fd), j22 = (ap - bp) / (2 * fd);
                double det = j11 * j22 - j12 * j21;
                if (std::abs(det) < 1e-14) break;
                double dq = (xq * j22 - xp * j12) / det;
                double dp = (xp * j11 - xq * j21) / det;
                if (std::abs(dq) > 0.2 || std::abs(dp) > 0.2) { dq *= 0.2 / std::max(std::abs(dq), std::abs(dp)); dp *= 0.2 / std::max(std::abs(dq), std::abs(dp)); }
                q -= dq;
                p -= dp;
                if (std::abs(p) > p_box + 0.5) break;
            }
            if (!ok) continue;
            double qw = wrap_unit(q);
            bool dup = false;
            for (const auto& e : out) {
                double dq = std::abs(qw - e[0]);
                dq = std::min(dq, 1.0 - dq);
                if (dq < 1e-6 && std::abs(p - e[1]) < 1e-6) { dup = true; break; }
            }
            if (!dup) out.push_back({qw, p});
        }
    return out;
}

/// Inverse of the discrete step: given (q1, p1) returns (q0, p0) with
/// p1 = p0 - tau dK/dq(q0, p1), q1 = q0 + tau dK/dp(q0, p1).
inline bool inverse_step(const DiscreteAction& w, double q1, double p1, double t, double& q0,
                         double& p0) {
    double q = q1;
    for (int it = 0; it < 80; ++it) {
        double g = q + w.tau * w.K.grad_p({q}, {p1}, t)[0] - q1;
        if (std::abs(g) < 1e-14 * (1.0 + std::abs(q1))) break;
        const double fd = 1e-7;
        double dp = (w.K.grad_p({q + fd}, {p1}, t)[0] - w.K.grad_p({q - fd}, {p1}, t)[0]) / (2 * fd);
        double jac = 1.0 + w.tau * dp;
        if (std::abs(jac) < 1e-12) return false;
        q -= g / jac;
        if (it == 79) return false;
    }
    q0 = q;
    p0 = p1 + w.tau * w.K.grad_q({q}, {p1}, t)[0];
    return true;
}

/// Mountain-pass chord guesses hugging a hyperbolic equilibrium off the zero
/// section: stable-manifold arc in from p = 0, hover, unstable-manifold arc
/// back out to p = 0. Initial-value shooting cannot reach these chords (their
/// basins shrink like exp(-mu k)), but full-space Newton polishes the guess.
inline std::vector<Vec> hover_chord_guesses(const DiscreteAction& w, double qh, double ph) {
    std::vector<Vec> guesses;
    if (w.n != 1) return guesses;

    // linearized step map at the equilibrium
    const double fd = 1e-6;
    auto forward_one = [&](double q, double p, double& q1, double& p1) -> bool {
        // p1 = p - tau dKq(q, p1) via a few Newton iterations
        double pn = p;
        for (int it = 0; it < 60; ++it) {
            double g = pn - p + w.tau * w.K.grad_q({q}, {pn}, 0.0)[0];
            if (std::abs(g) < 1e-14 * (1.0 + std::abs(p))) break;
            double dq = (w.K.grad_q({q}, {pn + fd}, 0.0)[0] - w.K.grad_q({q}, {pn - fd}, 0.0)[0]) / (2 * fd);
            double jac = 1.0 + w.tau * dq;
            if (std::abs(jac) < 1e-12) return false;
            pn -= g / jac;
            if (it == 59) return false;
        }
        p1 = pn;
        q1 = q + w.tau * w.K.grad_p({q}, {pn}, 0.0)[0];
        return true;
    };

    double a, b, c, d;  // Jacobian of the forward map at (qh, ph)
    {
        double q1p, p1p, q1m, p1m;
        if (!forward_one(qh + fd, ph, q1p, p1p) || !forward_one(qh - fd, ph, q1m, p1m)) return guesses;
        a = (q1p - q1m) / (2 * fd);
        c = (p1p - p1m) / (2 * fd);
        if (!forward_one(qh, ph + fd, q1p, p1p) || !forward_one(qh, ph - fd, q1m, p1m)) return guesses;
        b = (q1p - q1m) / (2 * fd);
        d = (p1p - p1m) / (2 * fd);
    }
    double tr = a + d, det = a * d - b * c;
    double disc = tr * tr / 4 - det;
    if (disc <= 1e-14) return guesses;  // elliptic: no manifolds to follow
    double mu_u = tr / 2 + std::sqrt(disc);
    double mu_s = tr / 2 - std::sqrt(disc);
    auto eigvec = [&](double mu, double& vq, double& vp) {
        // (A - mu I) v = 0
        if (std::abs(b) > std::abs(c)) { vq = b; vp = mu - a; }
        else { vq = mu - d; vp = c; }
        double nn = std::hypot(vq, vp);
        vq /= nn;
        vp /= nn;
    };
    double uq, up, sq, sp;
    eigvec(mu_u, uq, up);
    eigvec(mu_s, sq, sp);
    if (std::abs(mu_u) <= 1.0 + 1e-10 || std::abs(mu_s) >= 1.0 - 1e-10) return guesses;

    const long max_arc = w.m;
    struct Arc { std::vector<std::array<double, 2>> pts; };  // time-ordered (q, p)

    auto trace_out = [&](int sign, double eps, long cap) -> Arc {
        Arc arc;
        double q = qh + sign * eps * uq, p = ph + sign * eps * up;
        for (long s = 0; s < cap; ++s) {
            double q1, p1;
            if (!forward_one(q, p, q1, p1)) return {};
            arc.pts.push_back({q1, p1});
            if ((p1 == 0.0) || (p * p1 < 0.0) || std::abs(p1) < 1e-12) return arc;
            if (std::abs(p1) > std::abs(ph) + 2.0) return {};
            q = q1;
            p = p1;
        }
        return {};
    };
    auto trace_in = [&](int sign, double eps, long cap) -> Arc {
        Arc arc;  // collected backward, reversed at the end
        double q = qh + sign * eps * sq, p = ph + sign * eps * sp;
        for (long s = 0; s < cap; ++s) {
            double q0, p0;
            if (!inverse_step(w, q, p, 0.0, q0, p0)) return {};
            arc.pts.push_back({q0, p0});
            if (p0 == 0.0 || p * p0 < 0.0 || std::abs(p0) < 1e-12) {
                std::reverse(arc.pts.begin(), arc.pts.end());
                return arc;
            }
            if (std::abs(p0) > std::abs(ph) + 2.0) return {};
            q = q0;
            p = p0;
        }
        return {};
    };

    // the arcs must fit in m steps together; launch further out along the
    // manifolds when the chord is short
    const Vec eps_ladder = {1e-9, 1e-7, 1e-5, 1e-3, 1e-2, 5e-2};
    auto fit = [&](auto&& tracer, int sign) -> Arc {
        for (double eps : eps_ladder) {
            Arc a = tracer(sign, eps * (1.0 + std::abs(ph)), max_arc);
            if (!a.pts.empty() && long(a.pts.size()) <= (max_arc + 1) / 2) return a;
        }
        return {};
    };

    for (int si : {+1, -1}) {
        Arc in = fit(trace_in, si);
        if (in.pts.empty()) continue;
        for (int so : {+1, -1}) {
            Arc out = fit(trace_out, so);
            if (out.pts.empty()) continue;
            long len_in = long(in.pts.size()), len_out = long(out.pts.size());
            long hover = w.m - len_in - len_out;
            if (hover < 0) continue;
            // assemble variables: q_0..q_m, p_1..p_m
            Vec z(w.n_vars(), 0.0);
            std::vector<std::array<double, 2>> path;  // (q_i, p_i), i = 0..m
            path.push_back({in.pts.front()[0], 0.0});
            for (long i = 1; i < len_in; ++i) path.push_back(in.pts[std::size_t(i)]);
            for (long i = 0; i <= hover; ++i) path.push_back({qh, ph});
            for (long i = 0; i < len_out; ++i) path.push_back(out.pts[std::size_t(i)]);
            if (long(path.size()) != w.m + 1) continue;
            for (long i = 0; i <= w.m; ++i) z[w.q_off(i)] = path[std::size_t(i)][0];
            for (long i = 1; i <= w.m; ++i) z[w.p_off(i)] = path[std::size_t(i)][1];
            guesses.push_back(std::move(z));
        }
    }
    return guesses;
}

}  // namespace detail

/// Multistart search for the critical points of W. For n = 1 the chord
/// condition is a scalar shooting residual scanned over q_0 with sign-change
/// bisection (plus tangency candidates); for n = 2 it is a small Newton
/// multistart. Deterministic given the seed; results are deduplicated on the
/// torus quotient and sorted by value (descending).
inline std::vector<CriticalPoint> find_critical_points(const DiscreteAction& w,
                                                       const MultistartSpec& ms = {}) {
    if (ms.count < 1) throw InvalidInput("find_critical_points: count must be >= 1");
    std::vector<Vec> seeds;                 // q_0 candidates (shooting assembly)
    std::vector<Vec> direct_guesses;        // full variable vectors (no shooting)
    Rng rng(ms.seed);

    if (w.n == 1) {
        const int count = std::max(ms.count, 16);
        Vec grid(count), res(count);
        for (int j = 0; j < count; ++j) {
            grid[j] = ms.box_lo + (j + 0.3 + 0.4 * rng.uniform()) * (ms.box_hi - ms.box_lo) / count;
            res[j] = w.shoot_residual({grid[j]})[0];
        }
        double scale = 1.0;
        for (double r : res) scale = std::max(scale, std::abs(r));
        std::vector<char> flat(count);
        int n_flat = 0;
        for (int j = 0; j < count; ++j) {
            flat[j] = std::abs(res[j]) < 1e-10 * scale;
            n_flat += flat[j];
        }
        if (n_flat > 0) {
            // chord condition holds on at least part of the circle: one
            // representative per flat run (center of the longest run)
            int best_len = 0, best_start = 0;
            for (int j = 0; j < count; ++j) {
                if (!flat[j]) continue;
                int len = 0;
                while (len < count && flat[(j + len) % count]) ++len;
                if (len > best_len) { best_len = len; best_start = j; }
                j += len;
            }
            seeds.push_back({grid[(best_start + best_len / 2) % count]});
        }
        if (n_flat < count) {
            // Constant chords sit at zeros of the vector field on the zero
            // section; hover chords cling to hyperbolic equilibria off it.
            // Both live in exponentially narrow shooting basins, so their
            // variable vectors are assembled directly and polished by the
            // boundary-value Newton instead of being re-shot.
            for (const auto& eq : detail::find_equilibria(w.K, 1.5 + std::abs(w.lambda[0]))) {
                if (std::abs(eq[1]) < 1e-9) {
                    // on-section equilibrium: the constant orbit is an exact
                    // critical point
                    Vec z(w.n_vars(), 0.0);
                    for (long i = 0; i <= w.m; ++i) z[w.q_off(i)] = eq[0];
                    direct_guesses.push_back(std::move(z));
                } else if (!w.K.time_dependent) {
                    for (auto& g : detail::hover_chord_guesses(w, eq[0], eq[1]))
                        direct_guesses.push_back(std::move(g));
                }
            }
            for (int j = 0; j < count; ++j) {
                int j1 = (j + 1) % count;
                if (flat[j] || flat[j1]) continue;  // runs are covered by representatives
                double a = grid[j], b = grid[j1] + (j1 == 0 ? (ms.box_hi - ms.box_lo) : 0.0);
                double ra = res[j], rb = res[j1];
                if (ra * rb < 0.0) {
                    for (int bis = 0; bis < 30; ++bis) {
                        double c = 0.5 * (a + b);
                        double rc = w.shoot_residual({c})[0];
                        if (ra * rc <= 0.0) { b = c; rb = rc; } else { a = c; ra = rc; }
                    }
                    seeds.push_back({0.5 * (a + b)});
                } else {
                    // tangency candidate: local minimum of |res| close to zero
                    int j0 = (j + count - 1) % count;
                    if (std::abs(res[j]) < std::abs(res[j0]) && std::abs(res[j]) < std::abs(res[j1]) &&
                        std::abs(res[j]) < 1e-3 * scale)
                        seeds.push_back({grid[j]});
                }
            }
        }
    } else {
        // n = 2: Newton on the 2-dimensional shooting residual
        for (int s = 0; s < ms.count; ++s) {
            Vec q0 = {ms.box_lo + (ms.box_hi - ms.box_lo) * rng.uniform(),
                      ms.box_lo + (ms.box_hi - ms.box_lo) * rng.uniform()};
            bool ok = true;
            for (int it = 0; it < 40; ++it) {
                Vec r = w.shoot_residual(q0);
                if (norm2(r) < 1e-11) break;
                const double fd = 1e-6;
                Matrix jac(w.n, w.n);
                for (std::size_t c = 0; c < w.n; ++c) {
                    Vec qp = q0, qm = q0;
                    qp[c] += fd; qm[c] -= fd;
                    Vec rp = w.shoot_residual(qp), rm = w.shoot_residual(qm);
                    for (std::size_t rr = 0; rr < w.n; ++rr)
                        jac(rr, c) = (rp[rr] - rm[rr]) / (2 * fd);
                }
                Vec step;
                if (!lu_solve(jac, r, step)) { ok = false; break; }
                double sn = norm2(step);
                if (sn > 0.25) step = (0.25 / sn) * step;
                q0 = q0 - step;
                if (it == 39) ok = norm2(w.shoot_residual(q0)) < 1e-9;
            }
            if (ok) seeds.push_back(q0);
        }
    }

    std::vector<CriticalPoint> found;
    auto polish_and_keep = [&](Vec z) {
        if (!detail::newton_polish(w, z)) return;
        CriticalPoint cp;
        cp.vars = std::move(z);
        detail::fill_point_meta(w, cp);
        if (cp.grad_norm > 1e-9 * (1.0 + std::abs(cp.value))) return;
        for (const auto& other : found) {
            if (torus_dist(cp.q0, other.q0) < 1e-6 &&
                std::abs(cp.value - other.value) < 1e-7 * (1.0 + std::abs(other.value)) &&
                norm_inf(cp.displacement - other.displacement) < 1e-5)
                return;
        }
        found.push_back(std::move(cp));
    };
    for (const Vec& q0 : seeds) polish_and_keep(w.orbit_from(q0));
    for (Vec& z : direct_guesses) polish_and_keep(std::move(z));
    for (auto& cp : found) reduced_hessian_index(w, cp);
    std::sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.q0 < b.q0;
    });
    return found;
}

/// Calibrated lambda-derivative of the action at a critical point: computed
/// both as -sum tau dK/dp (the analytic d_lambda W up to orientation) and as
/// the lifted displacement; the two must agree at a genuine critical point.
inline Vec lambda_partial(const DiscreteAction& w, const CriticalPoint& cp) {
    if (cp.grad_norm > 1e-6 * (1.0 + std::abs(cp.value)))
        throw InvalidInput("lambda_partial: input is not a critical point");
    Vec sum = zeros(w.n);
    for (long i = 0; i < w.m; ++i) {
        Vec kp = w.K.grad_p(w.q_at(cp.vars, i), w.p_at(cp.vars, i + 1), w.time_at(i));
        axpy(w.tau, kp, sum);
    }
    double gap = norm_inf(sum - cp.displacement);
    if (gap > 1e-6 * (1.0 + norm_inf(cp.displacement)) + 1e-8)
        throw PropertyFailure("lambda_partial: velocity sum and displacement disagree (" +
                              std::to_string(gap) + ")");
    return cp.displacement;
}

/// Continuum chord action cross-check: re-integrates the chord with implicit
/// midpoint at a finer step and evaluates int (K - p qdot) dt.
inline double chord_action_continuum(const DiscreteAction& w, const CriticalPoint& cp,
                                     int refine = 4) {
    CotangentPoint z0(w.q_at(cp.vars, 0), zeros(w.n));
    double tau = w.tau / refine;
    auto tr = integrate_flow(w.K, z0, 0.0, double(w.k), tau);
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < tr.points.size(); ++j) {
        const auto& a = tr.points[j];
        const auto& b = tr.points[j + 1];
        Vec pm(w.n), qd(w.n);
        for (std::size_t c = 0; c < w.n; ++c) {
            pm[c] = 0.5 * (a.p[c] + b.p[c]);
            qd[c] = b.q_lift[c] - a.q_lift[c];
        }
        Vec qm(w.n);
        for (std::size_t c = 0; c < w.n; ++c) qm[c] = 0.5 * (a.q_lift[c] + b.q_lift[c]);
        s += tau * w.K.eval(qm, pm, tr.times[j] + 0.5 * tau);
        for (std::size_t c = 0; c < w.n; ++c) s -= pm[c] * qd[c];
    }
    return s;
}

}  // namespace symhom
