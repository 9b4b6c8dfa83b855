#pragma once

// Independent Tonelli-side oracle (n = 1, autonomous, strictly convex in p):
// discrete Aubry-Mather computation of the minimal-action beta function over
// a grid of rational rotation numbers, then alpha by discrete
// Legendre-Fenchel. Shares nothing with the generating-function pipeline, so
// the two can cross-check each other.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "symhom/core.hpp"
#include "symhom/models.hpp"

namespace symhom {

struct TwistOracleSettings {
    int steps_per_unit_time = 32;  // tau = 1 / this
    int q_max = 6;                 // rotation denominators up to q_max
    double rho_max = 4.0;          // rotation numbers explored in [-rho_max, rho_max]
    int inits = 3;                 // relaxation restarts (phase-shifted)
    int max_sweeps = 220;
    double legendre_tol = 1e-8;
};

class TwistOracle {
public:
    TwistOracle(HamiltonianModel h, TwistOracleSettings s = {})
        : h_(std::move(h)), s_(s), tau_(1.0 / s.steps_per_unit_time) {
        if (h_.dim != 1) throw NotApplicable("twist oracle: base dimension must be 1");
        if (h_.time_dependent) throw NotApplicable("twist oracle: autonomous models only");
        check_convexity();
    }

    /// L(q, v) = max_p (p v - H(q, p)) with the maximizing momentum.
    std::pair<double, double> legendre(double q, double v, double p_warm) const {
        // solve dH/dp(q, p) = v; strict convexity makes dH/dp increasing
        double p = p_warm;
        for (int it = 0; it < 60; ++it) {
            double g = h_.grad_p({q}, {p}, 0.0)[0] - v;
            if (std::abs(g) < s_.legendre_tol) break;
            const double fd = 1e-6 * (1.0 + std::abs(p));
            double g2 = (h_.grad_p({q}, {p + fd}, 0.0)[0] - h_.grad_p({q}, {p - fd}, 0.0)[0]) / (2 * fd);
            if (g2 <= 1e-12) {  // fell off the convex window; bisect back
                p = bisect_legendre(q, v);
                break;
            }
            double step = g / g2;
            if (std::abs(step) > 2.0) step = step > 0 ? 2.0 : -2.0;
            p -= step;
            if (it == 59) p = bisect_legendre(q, v);
        }
        return {p * v - h_.eval({q}, {p}, 0.0), p};
    }

    /// Minimal average action over periodic configurations with rotation
    /// number rot_p / rot_q (winding rot_p in time rot_q). The one-step
    /// action is the midpoint rule tau L((q+q')/2, (q'-q)/tau), second order
    /// in tau.
    double beta(long rot_p, long rot_q) const {
        if (rot_q < 1) throw InvalidInput("beta: denominator must be positive");
        const long s = rot_q * s_.steps_per_unit_time;
        const double wind = double(rot_p);
        double best = 1e300;
        for (int init = 0; init < s_.inits; ++init) {
            double phase = double(init) / double(s_.inits);
            Vec q(s);
            for (long i = 0; i < s; ++i) q[i] = phase + wind * double(i) / double(s);
            Vec warm(s, 0.0);  // per-edge Legendre warm starts
            for (int sweep = 0; sweep < s_.max_sweeps; ++sweep) {
                double moved = 0.0;
                for (long i = 0; i < s; ++i) moved = std::max(moved, relax_coordinate(q, wind, i, warm));
                if (moved < 1e-11) break;
            }
            best = std::min(best, total_action(q, wind, warm) / double(rot_q));
        }
        return best;
    }

    struct BetaTable {
        std::vector<double> rho;
        std::vector<double> value;
    };

    /// beta on the grid of reduced rationals with denominator <= q_max.
    const BetaTable& beta_table() const {
        if (!table_.rho.empty()) return table_;
        std::vector<std::pair<long, long>> fracs;
        for (long q = 1; q <= s_.q_max; ++q)
            for (long p = -(long)std::ceil(s_.rho_max * q); p <= (long)std::ceil(s_.rho_max * q); ++p)
                if (std::gcd(std::abs(p), q) == 1 || p == 0) {
                    if (p == 0 && q != 1) continue;
                    if (std::abs(double(p) / q) <= s_.rho_max + 1e-12) fracs.emplace_back(p, q);
                }
        std::sort(fracs.begin(), fracs.end(), [](auto a, auto b) {
            return double(a.first) / a.second < double(b.first) / b.second;
        });
        table_.rho.resize(fracs.size());
        table_.value.resize(fracs.size());
        parallel_for(fracs.size(), [&](std::size_t i) {
            table_.rho[i] = double(fracs[i].first) / fracs[i].second;
            table_.value[i] = beta(fracs[i].first, fracs[i].second);
        });
        return table_;
    }

    /// alpha(lambda) = max_rho (lambda rho - beta(rho)), with a parabolic
    /// refinement around the grid argmax (exact for quadratic beta).
    double alpha(double lambda) const {
        const BetaTable& t = beta_table();
        if (t.rho.empty()) throw NotApplicable("twist oracle: empty rotation grid");
        std::size_t best = 0;
        double g_best = -1e300;
        for (std::size_t i = 0; i < t.rho.size(); ++i) {
            double g = lambda * t.rho[i] - t.value[i];
            if (g > g_best) { g_best = g; best = i; }
        }
        if (best < 2 || best + 2 >= t.rho.size()) return g_best;
        auto val = [&](std::size_t i) { return lambda * t.rho[i] - t.value[i]; };
        double x0 = t.rho[best - 1], x1 = t.rho[best], x2 = t.rho[best + 1];
        double y0 = val(best - 1), y1 = g_best, y2 = val(best + 1);
        double d1 = (y1 - y0) / (x1 - x0), d2 = (y2 - y1) / (x2 - x1);
        // beta has a kink wherever alpha is flat; refining a parabola across
        // a kink wildly over-shoots, so require the slope jump at the argmax
        // to be consistent with the neighbouring curvature
        double d0 = (y0 - val(best - 2)) / (x0 - t.rho[best - 2]);
        double d3 = (val(best + 2) - y2) / (t.rho[best + 2] - x2);
        double jump = std::abs(d1 - d2);
        double side = std::max(std::abs(d0 - d1), std::abs(d2 - d3));
        if (jump > 3.0 * side + 1e-9) return g_best;
        double curv = (d2 - d1) / (x2 - x0);
        if (curv >= -1e-12) return g_best;  // flat: trust the grid
        double xs = 0.5 * (x0 + x1) - 0.5 * d1 / curv;
        if (xs <= x0 || xs >= x2) return g_best;
        double ys = y0 + d1 * (xs - x0) + curv * (xs - x0) * (xs - x1);  // Newton form
        return std::max(g_best, ys);
    }

    double tau() const { return tau_; }

private:
    void check_convexity() const {
        Rng rng(23);
        for (int s = 0; s < 96; ++s) {
            double q = rng.uniform();
            double p = rng.uniform(-s_.rho_max - 1.5, s_.rho_max + 1.5);
            const double fd = 1e-5;
            double hpp = (h_.grad_p({q}, {p + fd}, 0.0)[0] - h_.grad_p({q}, {p - fd}, 0.0)[0]) / (2 * fd);
            if (hpp < 1e-8)
                throw NotApplicable("twist oracle: model is not strictly convex in p near p=" +
                                    std::to_string(p));
        }
    }

    double bisect_legendre(double q, double v) const {
        double lo = -1.0, hi = 1.0;
        while (h_.grad_p({q}, {lo}, 0.0)[0] > v) lo *= 2;
        while (h_.grad_p({q}, {hi}, 0.0)[0] < v) hi *= 2;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (h_.grad_p({q}, {mid}, 0.0)[0] < v) lo = mid; else hi = mid;
            if (hi - lo < 1e-13 * (1.0 + std::abs(hi))) break;
        }
        return 0.5 * (lo + hi);
    }

    double edge_action(double qa, double qb, double& warm) const {
        auto [L, pstar] = legendre(0.5 * (qa + qb), (qb - qa) / tau_, warm);
        warm = pstar;
        return tau_ * L;
    }

    double total_action(const Vec& q, double wind, Vec& warm) const {
        const long s = long(q.size());
        double total = 0.0;
        for (long i = 0; i < s; ++i) {
            double qa = q[i];
            double qb = (i + 1 < s) ? q[i + 1] : q[0] + wind;
            total += edge_action(qa, qb, warm[i]);
        }
        return total;
    }

    /// d/dqi of the two adjacent edge actions (envelope theorem gives
    /// d/dv L = p*, d/dq L = -dH/dq at the maximizing momentum).
    double local_grad(double q_prev, double qi, double q_next, double& w1, double& w2) const {
        auto [l1, p1] = legendre(0.5 * (q_prev + qi), (qi - q_prev) / tau_, w1);
        auto [l2, p2] = legendre(0.5 * (qi + q_next), (q_next - qi) / tau_, w2);
        (void)l1; (void)l2;
        w1 = p1;
        w2 = p2;
        double vq1 = -h_.grad_q({0.5 * (q_prev + qi)}, {p1}, 0.0)[0];
        double vq2 = -h_.grad_q({0.5 * (qi + q_next)}, {p2}, 0.0)[0];
        return p1 - p2 + 0.5 * tau_ * (vq1 + vq2);
    }

    /// One Gauss-Seidel update of q[i]; returns |move|.
    double relax_coordinate(Vec& q, double wind, long i, Vec& warm) const {
        const long s = long(q.size());
        double q_prev = (i > 0) ? q[i - 1] : q[s - 1] - wind;
        double q_next = (i + 1 < s) ? q[i + 1] : q[0] + wind;
        long e_in = (i > 0) ? i - 1 : s - 1;
        double qi = q[i];
        double w1 = warm[e_in], w2 = warm[i];
        double g0 = local_grad(q_prev, qi, q_next, w1, w2);
        if (std::abs(g0) < 1e-12) return 0.0;
        // secant iteration on the local gradient (convex in qi up to O(tau))
        double x0 = qi, x1 = qi - std::clamp(g0 * 0.5 * tau_, -0.2, 0.2);
        double g1 = local_grad(q_prev, x1, q_next, w1, w2);
        for (int it = 0; it < 10 && std::abs(g1) > 1e-12; ++it) {
            double denom = g1 - g0;
            double x2 = (std::abs(denom) > 1e-300) ? x1 - g1 * (x1 - x0) / denom
                                                   : x1 - std::clamp(g1 * tau_, -0.1, 0.1);
            x2 = std::clamp(x2, qi - 0.45, qi + 0.45);
            x0 = x1; g0 = g1;
            x1 = x2;
            g1 = local_grad(q_prev, x1, q_next, w1, w2);
        }
        if (std::abs(g1) <= std::abs(g0)) {
            warm[e_in] = w1;
            warm[i] = w2;
            double moved = std::abs(x1 - q[i]);
            q[i] = x1;
            return moved;
        }
        return 0.0;
    }

    HamiltonianModel h_;
    TwistOracleSettings s_;
    double tau_;
    mutable BetaTable table_;
};

/// One-shot oracle evaluation (builds the beta table on first use per call).
inline double oracle_twist_alpha(const HamiltonianModel& h, double lambda,
                                 TwistOracleSettings s = {}) {
    TwistOracle oracle(h, s);
    return oracle.alpha(lambda);
}

}  // namespace symhom
