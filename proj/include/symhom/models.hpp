#pragma once

// Hamiltonian models on T*T^n: evaluation with exact partials, the fiber
// shift K(q,p) = H(q, p - c) for a constant 1-form class c, perturbed
// families H + sum(lambda_i K_i), symplectic time integration, and the
// geometric-boundedness probe.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "symhom/core.hpp"
#include "symhom/linalg.hpp"

namespace symhom {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Point of T*T^n. `q` is the torus representative in [0,1)^n, `q_lift` a
/// chosen lift in R^n (kept so rotation numbers need no unwinding), `p` the
/// fiber coordinate.
struct CotangentPoint {
    Vec q;       // in [0,1)^n
    Vec q_lift;  // q = q_lift mod 1
    Vec p;

    CotangentPoint() = default;
    CotangentPoint(Vec q_lift_, Vec p_)
        : q(wrap_unit(q_lift_)), q_lift(std::move(q_lift_)), p(std::move(p_)) {
        if (q.size() != p.size()) throw InvalidInput("CotangentPoint: dim mismatch");
    }

    std::size_t dim() const { return p.size(); }

    bool lift_consistent(double tol = 1e-12) const {
        for (std::size_t i = 0; i < q.size(); ++i) {
            double d = std::abs(wrap_unit(q_lift[i]) - q[i]);
            d = std::min(d, 1.0 - d);
            if (d > tol) return false;
        }
        return true;
    }
};

enum class FiberGrowth { Quadratic, Superlinear, PolynomialDegreeD, CompactlySupported };

/// A Hamiltonian with exact first partials. Closures take (q, p, t) with q
/// in R^n (models are 1-periodic in q); time-dependent models are 1-periodic
/// in t and must reduce t internally so periodicity is exact in floats.
struct HamiltonianModel {
    using EvalFn = std::function<double(const Vec& q, const Vec& p, double t)>;
    using GradFn = std::function<Vec(const Vec& q, const Vec& p, double t)>;

    std::size_t dim = 1;
    EvalFn eval;
    GradFn grad_q;
    GradFn grad_p;
    bool time_dependent = false;
    FiberGrowth fiber_growth = FiberGrowth::Quadratic;
    std::string name;

    double operator()(const Vec& q, const Vec& p, double t = 0.0) const { return eval(q, p, t); }
};

/// Constant-coefficient cohomology class c = sum c_i dq_i on T^n.
struct OneFormClass {
    Vec lambda;

    OneFormClass() = default;
    explicit OneFormClass(Vec l) : lambda(std::move(l)) {
        for (double x : lambda)
            if (!std::isfinite(x)) throw InvalidInput("OneFormClass: non-finite entry");
    }
    explicit OneFormClass(double l) : lambda{l} {}

    std::size_t dim() const { return lambda.size(); }
    double operator[](std::size_t i) const { return lambda[i]; }
};

/// H + sum_i lambda_i K_i with the directions fixed and lambda varying.
struct PerturbedFamily {
    HamiltonianModel base;
    std::vector<HamiltonianModel> directions;

    std::size_t parameters() const { return directions.size(); }
};

// ---------------------------------------------------------------------------
// Model validation (finite-difference contract for the partials)
// ---------------------------------------------------------------------------

inline double model_grad_check(const HamiltonianModel& h, Rng& rng, int samples = 64,
                               double box = 3.0) {
    double worst = 0.0;
    const double fd = 1e-5;
    for (int s = 0; s < samples; ++s) {
        Vec q = rng.uniform_vec(h.dim, 0.0, 1.0);
        Vec p = rng.uniform_vec(h.dim, -box, box);
        double t = h.time_dependent ? rng.uniform() : 0.0;
        Vec gq = h.grad_q(q, p, t), gp = h.grad_p(q, p, t);
        double scale = 1.0;
        for (std::size_t i = 0; i < h.dim; ++i) {
            scale = std::max({scale, std::abs(gq[i]), std::abs(gp[i])});
        }
        for (std::size_t i = 0; i < h.dim; ++i) {
            Vec qp = q, qm = q;
            qp[i] += fd; qm[i] -= fd;
            double fdq = (h.eval(qp, p, t) - h.eval(qm, p, t)) / (2 * fd);
            Vec pp = p, pm = p;
            pp[i] += fd; pm[i] -= fd;
            double fdp = (h.eval(q, pp, t) - h.eval(q, pm, t)) / (2 * fd);
            worst = std::max(worst, std::abs(fdq - gq[i]) / scale);
            worst = std::max(worst, std::abs(fdp - gp[i]) / scale);
        }
    }
    return worst;
}

inline void validate_model(const HamiltonianModel& h, std::uint64_t seed = 7,
                           double tol = 1e-6) {
    Rng rng(seed);
    double err = model_grad_check(h, rng);
    if (err > tol)
        throw InvalidInput("model '" + h.name + "': partials disagree with finite differences (err " +
                           std::to_string(err) + ")");
    if (h.time_dependent) {
        Rng r2(seed + 1);
        for (int s = 0; s < 8; ++s) {
            Vec q = r2.uniform_vec(h.dim, 0.0, 1.0);
            Vec p = r2.uniform_vec(h.dim, -2.0, 2.0);
            // dyadic t so that t+1 is exactly representable
            double t = double(r2.next_u64() % 1024) / 1024.0;
            if (h.eval(q, p, t) != h.eval(q, p, t + 1.0))
                throw InvalidInput("model '" + h.name + "': not exactly 1-periodic in t");
        }
    }
}

// ---------------------------------------------------------------------------
// Operations on models
// ---------------------------------------------------------------------------

/// K(q,p,t) = H(q, p - c, t): the fiber shift by a constant 1-form class.
inline HamiltonianModel shift_by_form(const HamiltonianModel& h, const OneFormClass& c) {
    if (c.dim() != h.dim) throw InvalidInput("shift_by_form: dimension mismatch");
    HamiltonianModel k = h;
    Vec lam = c.lambda;
    k.name = h.name + "@shift";
    k.eval = [h, lam](const Vec& q, const Vec& p, double t) {
        Vec ps = p;
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i] -= lam[i];
        return h.eval(q, ps, t);
    };
    k.grad_q = [h, lam](const Vec& q, const Vec& p, double t) {
        Vec ps = p;
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i] -= lam[i];
        return h.grad_q(q, ps, t);
    };
    k.grad_p = [h, lam](const Vec& q, const Vec& p, double t) {
        Vec ps = p;
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i] -= lam[i];
        return h.grad_p(q, ps, t);
    };
    return k;
}

/// The family member H + sum lambda_i K_i as a plain model.
inline HamiltonianModel perturbed_eval(const PerturbedFamily& f, const Vec& lambda) {
    if (lambda.size() != f.parameters())
        throw InvalidInput("perturbed_eval: lambda length mismatch");
    for (double x : lambda)
        if (!std::isfinite(x)) throw InvalidInput("perturbed_eval: non-finite lambda");
    HamiltonianModel out = f.base;
    out.name = f.base.name + "@family";
    auto dirs = f.directions;
    out.time_dependent = f.base.time_dependent;
    for (const auto& d : dirs) out.time_dependent = out.time_dependent || d.time_dependent;
    HamiltonianModel base = f.base;
    Vec lam = lambda;
    out.eval = [base, dirs, lam](const Vec& q, const Vec& p, double t) {
        double v = base.eval(q, p, t);
        for (std::size_t i = 0; i < dirs.size(); ++i) v += lam[i] * dirs[i].eval(q, p, t);
        return v;
    };
    out.grad_q = [base, dirs, lam](const Vec& q, const Vec& p, double t) {
        Vec g = base.grad_q(q, p, t);
        for (std::size_t i = 0; i < dirs.size(); ++i) axpy(lam[i], dirs[i].grad_q(q, p, t), g);
        return g;
    };
    out.grad_p = [base, dirs, lam](const Vec& q, const Vec& p, double t) {
        Vec g = base.grad_p(q, p, t);
        for (std::size_t i = 0; i < dirs.size(); ++i) axpy(lam[i], dirs[i].grad_p(q, p, t), g);
        return g;
    };
    return out;
}

/// X_H = (dH/dp, -dH/dq) at (z, t); first half is qdot, second half pdot.
inline std::pair<Vec, Vec> hamiltonian_vector_field(const HamiltonianModel& h,
                                                    const CotangentPoint& z, double t = 0.0) {
    return {h.grad_p(z.q_lift, z.p, t), -1.0 * h.grad_q(z.q_lift, z.p, t)};
}

// ---------------------------------------------------------------------------
// Symplectic integration
// ---------------------------------------------------------------------------

enum class Scheme { ImplicitMidpoint, SymplecticEuler };

struct Trajectory {
    std::vector<CotangentPoint> points;  // including both endpoints
    std::vector<double> times;
    double tau = 0.0;

    const CotangentPoint& back() const { return points.back(); }
};

namespace detail {

/// One implicit-midpoint step; fixed-point iteration with a Newton fallback.
inline CotangentPoint midpoint_step(const HamiltonianModel& h, const CotangentPoint& z,
                                    double t, double tau, long step_index) {
    const std::size_t n = z.dim();
    Vec q1 = z.q_lift, p1 = z.p;
    double tm = t + 0.5 * tau;
    auto residual = [&](const Vec& q, const Vec& p, Vec& rq, Vec& rp) {
        Vec qm(n), pm(n);
        for (std::size_t i = 0; i < n; ++i) {
            qm[i] = 0.5 * (z.q_lift[i] + q[i]);
            pm[i] = 0.5 * (z.p[i] + p[i]);
        }
        Vec gp = h.grad_p(qm, pm, tm), gq = h.grad_q(qm, pm, tm);
        rq.resize(n); rp.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            rq[i] = q[i] - z.q_lift[i] - tau * gp[i];
            rp[i] = p[i] - z.p[i] + tau * gq[i];
        }
    };
    Vec rq, rp;
    double err = 1e300;
    for (int it = 0; it < 100; ++it) {
        residual(q1, p1, rq, rp);
        err = std::max(norm_inf(rq), norm_inf(rp));
        if (err < 1e-13 * (1.0 + norm_inf(z.p))) break;
        for (std::size_t i = 0; i < n; ++i) { q1[i] -= rq[i]; p1[i] -= rp[i]; }
        if (it == 99)
            throw IntegrationFailure("implicit midpoint did not converge", step_index);
    }
    return CotangentPoint(std::move(q1), std::move(p1));
}

/// One symplectic-Euler step matching the discrete action convention:
/// p' = p - tau dH/dq(q, p'), q' = q + tau dH/dp(q, p').
inline CotangentPoint symplectic_euler_step(const HamiltonianModel& h, const CotangentPoint& z,
                                            double t, double tau, long step_index) {
    const std::size_t n = z.dim();
    Vec p1 = z.p;
    for (int it = 0;; ++it) {
        Vec gq = h.grad_q(z.q_lift, p1, t);
        Vec r(n);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = p1[i] - z.p[i] + tau * gq[i];
            err = std::max(err, std::abs(r[i]));
        }
        if (err < 1e-14 * (1.0 + norm_inf(z.p))) break;
        if (it >= 100) throw IntegrationFailure("symplectic Euler p-solve stalled", step_index);
        // damped fixed point; the step map is a contraction for tau small
        for (std::size_t i = 0; i < n; ++i) p1[i] -= r[i];
    }
    Vec gp = h.grad_p(z.q_lift, p1, t);
    Vec q1 = z.q_lift;
    axpy(tau, gp, q1);
    return CotangentPoint(std::move(q1), std::move(p1));
}

}  // namespace detail

/// Integrate the flow of H over t_span with fixed step tau. The lift of q is
/// continuous across period boundaries.
inline Trajectory integrate_flow(const HamiltonianModel& h, const CotangentPoint& z0,
                                 double t0, double t1, double tau,
                                 Scheme scheme = Scheme::ImplicitMidpoint) {
    if (!(tau > 0)) throw InvalidInput("integrate_flow: tau must be positive");
    if (!std::isfinite(t0) || !std::isfinite(t1) || t1 < t0)
        throw InvalidInput("integrate_flow: bad t_span");
    Trajectory tr;
    tr.tau = tau;
    long steps = std::lround((t1 - t0) / tau);
    if (steps < 0) steps = 0;
    tr.points.reserve(steps + 1);
    tr.times.reserve(steps + 1);
    tr.points.push_back(z0);
    tr.times.push_back(t0);
    CotangentPoint z = z0;
    for (long s = 0; s < steps; ++s) {
        double t = t0 + s * tau;
        z = scheme == Scheme::ImplicitMidpoint ? detail::midpoint_step(h, z, t, tau, s)
                                               : detail::symplectic_euler_step(h, z, t, tau, s);
        tr.points.push_back(z);
        tr.times.push_back(t + tau);
    }
    return tr;
}

/// Flow map endpoint only.
inline CotangentPoint flow_map(const HamiltonianModel& h, const CotangentPoint& z0, double t0,
                               double t1, double tau, Scheme scheme = Scheme::ImplicitMidpoint) {
    if (!(tau > 0)) throw InvalidInput("flow_map: tau must be positive");
    long steps = std::lround((t1 - t0) / tau);
    CotangentPoint z = z0;
    for (long s = 0; s < steps; ++s) {
        double t = t0 + s * tau;
        z = scheme == Scheme::ImplicitMidpoint ? detail::midpoint_step(h, z, t, tau, s)
                                               : detail::symplectic_euler_step(h, z, t, tau, s);
    }
    return z;
}

/// Flow map in either time direction (implicit midpoint handles a negative
/// step); used by the suspension reduction to pull atoms back to time 0.
inline CotangentPoint flow_map_signed(const HamiltonianModel& h, const CotangentPoint& z0,
                                      double t_from, double t_to, double tau_mag) {
    if (!(tau_mag > 0)) throw InvalidInput("flow_map_signed: tau must be positive");
    long steps = std::lround(std::abs(t_to - t_from) / tau_mag);
    if (steps == 0 && std::abs(t_to - t_from) > 1e-15) steps = 1;
    double tau = steps ? (t_to - t_from) / double(steps) : 0.0;
    CotangentPoint z = z0;
    for (long s = 0; s < steps; ++s)
        z = detail::midpoint_step(h, z, t_from + s * tau, tau, s);
    return z;
}

// ---------------------------------------------------------------------------
// Geometric boundedness probe
// ---------------------------------------------------------------------------

/// Horizon/sample surrogate for "every graph of a closed 1-form evolves in a
/// compact domain": integrates a sample of graph(lambda) points over [0, T]
/// and reports the largest |p| excursion against `bound`. The policy is a
/// pragmatic stand-in for the qualitative definition and is flagged as such
/// in reports.
struct BoundednessReport {
    double max_excursion = 0.0;     // max |p(t) - p(0)|_inf over samples
    double max_abs_p = 0.0;
    bool bounded = true;
    double horizon = 0.0;
    int samples = 0;
    std::string policy = "horizon-sample-surrogate";
};

inline BoundednessReport check_geometrically_bounded(const HamiltonianModel& h,
                                                     const std::vector<Vec>& lambdas, double T,
                                                     double bound, int q_samples = 8,
                                                     double tau = 1e-2) {
    if (!(T > 0) || q_samples <= 0) throw InvalidInput("check_geometrically_bounded: bad plan");
    BoundednessReport rep;
    rep.horizon = T;
    for (const Vec& lam : lambdas) {
        check_dim(lam, h.dim, "check_geometrically_bounded lambda");
        for (int s = 0; s < q_samples; ++s) {
            Vec q(h.dim);
            for (std::size_t i = 0; i < h.dim; ++i)
                q[i] = (s + 0.5 * (i + 1) / double(h.dim)) / double(q_samples);
            CotangentPoint z0(q, lam);
            auto tr = integrate_flow(h, z0, 0.0, T, tau);
            for (const auto& z : tr.points) {
                double exc = norm_inf(z.p - lam);
                rep.max_excursion = std::max(rep.max_excursion, exc);
                rep.max_abs_p = std::max(rep.max_abs_p, norm_inf(z.p));
            }
            ++rep.samples;
        }
    }
    rep.bounded = rep.max_excursion <= bound;
    return rep;
}

// ---------------------------------------------------------------------------
// Model zoo
// ---------------------------------------------------------------------------

namespace models {

/// h(p) = sum_j c_j p^j on T*T^1.
inline HamiltonianModel integrable(Vec h_poly_coeffs) {
    HamiltonianModel m;
    m.dim = 1;
    m.name = "integrable";
    Vec c = std::move(h_poly_coeffs);
    m.fiber_growth = c.size() > 3 ? FiberGrowth::PolynomialDegreeD : FiberGrowth::Quadratic;
    m.eval = [c](const Vec&, const Vec& p, double) {
        double v = 0.0, pw = 1.0;
        for (double cj : c) { v += cj * pw; pw *= p[0]; }
        return v;
    };
    m.grad_q = [](const Vec&, const Vec&, double) { return Vec{0.0}; };
    m.grad_p = [c](const Vec&, const Vec& p, double) {
        double v = 0.0, pw = 1.0;  // pw = p^{j-1}
        for (std::size_t j = 1; j < c.size(); ++j) {
            v += double(j) * c[j] * pw;
            pw *= p[0];
        }
        return Vec{v};
    };
    return m;
}

/// h = a1 p1^2/2 + a2 p2^2/2 on T*T^2.
inline HamiltonianModel integrable2d(double a1, double a2) {
    HamiltonianModel m;
    m.dim = 2;
    m.name = "integrable2d";
    m.eval = [a1, a2](const Vec&, const Vec& p, double) {
        return 0.5 * (a1 * p[0] * p[0] + a2 * p[1] * p[1]);
    };
    m.grad_q = [](const Vec&, const Vec&, double) { return Vec{0.0, 0.0}; };
    m.grad_p = [a1, a2](const Vec&, const Vec& p, double) { return Vec{a1 * p[0], a2 * p[1]}; };
    return m;
}

/// p^2/2 + amplitude cos(2 pi q).
inline HamiltonianModel pendulum(double amplitude = 1.0) {
    HamiltonianModel m;
    m.dim = 1;
    m.name = "pendulum";
    m.eval = [amplitude](const Vec& q, const Vec& p, double) {
        return 0.5 * p[0] * p[0] + amplitude * std::cos(kTwoPi * q[0]);
    };
    m.grad_q = [amplitude](const Vec& q, const Vec&, double) {
        return Vec{-amplitude * kTwoPi * std::sin(kTwoPi * q[0])};
    };
    m.grad_p = [](const Vec&, const Vec& p, double) { return Vec{p[0]}; };
    return m;
}

/// (p^2-1)^2/4 + epsilon cos(2 pi q): non-convex in p.
inline HamiltonianModel doublewell_p(double epsilon = 0.0) {
    HamiltonianModel m;
    m.dim = 1;
    m.name = "doublewell_p";
    m.fiber_growth = FiberGrowth::PolynomialDegreeD;
    m.eval = [epsilon](const Vec& q, const Vec& p, double) {
        double w = p[0] * p[0] - 1.0;
        return 0.25 * w * w + epsilon * std::cos(kTwoPi * q[0]);
    };
    m.grad_q = [epsilon](const Vec& q, const Vec&, double) {
        return Vec{-epsilon * kTwoPi * std::sin(kTwoPi * q[0])};
    };
    m.grad_p = [](const Vec&, const Vec& p, double) {
        return Vec{p[0] * (p[0] * p[0] - 1.0)};
    };
    return m;
}

/// p^2/2 + amplitude (1 + cos(2 pi t)) cos(2 pi q): 1-periodic kicking.
inline HamiltonianModel kicked(double amplitude = 0.1) {
    HamiltonianModel m;
    m.dim = 1;
    m.name = "kicked";
    m.time_dependent = true;
    auto kick = [](double t) {
        double s = t - std::floor(t);  // exact 1-periodicity in floats
        return 1.0 + std::cos(kTwoPi * s);
    };
    m.eval = [amplitude, kick](const Vec& q, const Vec& p, double t) {
        return 0.5 * p[0] * p[0] + amplitude * kick(t) * std::cos(kTwoPi * q[0]);
    };
    m.grad_q = [amplitude, kick](const Vec& q, const Vec&, double t) {
        return Vec{-amplitude * kick(t) * kTwoPi * std::sin(kTwoPi * q[0])};
    };
    m.grad_p = [](const Vec&, const Vec& p, double) { return Vec{p[0]}; };
    return m;
}

/// C^2 bump profile (1-x^2)^3 on |x|<1, else 0.
inline double bump_profile(double x) {
    double w = 1.0 - x * x;
    return w > 0 ? w * w * w : 0.0;
}
inline double bump_profile_d(double x) {
    double w = 1.0 - x * x;
    return w > 0 ? -6.0 * x * w * w : 0.0;
}

/// amp * bump((q-q0)/rq on the torus) * bump((p-p0)/rp): compactly supported
/// in a ball of T*T^1.
inline HamiltonianModel bump(double q0, double p0, double rq, double rp, double amp) {
    HamiltonianModel m;
    m.dim = 1;
    m.name = "bump";
    m.fiber_growth = FiberGrowth::CompactlySupported;
    auto qarg = [q0, rq](double q) {
        double d = wrap_unit(q - q0);
        if (d > 0.5) d -= 1.0;  // signed torus distance
        return d / rq;
    };
    m.eval = [=](const Vec& q, const Vec& p, double) {
        return amp * bump_profile(qarg(q[0])) * bump_profile((p[0] - p0) / rp);
    };
    m.grad_q = [=](const Vec& q, const Vec& p, double) {
        return Vec{amp * bump_profile_d(qarg(q[0])) / rq * bump_profile((p[0] - p0) / rp)};
    };
    m.grad_p = [=](const Vec& q, const Vec& p, double) {
        return Vec{amp * bump_profile(qarg(q[0])) * bump_profile_d((p[0] - p0) / rp) / rp};
    };
    return m;
}

/// Tabulated H(q, p) on a regular grid with local cubic (Catmull-Rom)
/// interpolation: periodic in q, clamped in p. Partials are the exact
/// derivatives of the interpolant.
class TabulatedModel {
public:
    TabulatedModel(std::vector<Vec> values, double p_lo, double p_hi)
        : v_(std::move(values)), p_lo_(p_lo), p_hi_(p_hi) {
        nq_ = v_.size();
        np_ = nq_ ? v_[0].size() : 0;
        if (nq_ < 4 || np_ < 4) throw InvalidInput("TabulatedModel: need at least a 4x4 grid");
    }

    double eval(double q, double p) const { return interp(q, p, 0, 0); }
    double dq(double q, double p) const { return interp(q, p, 1, 0); }
    double dp(double q, double p) const { return interp(q, p, 0, 1); }

    HamiltonianModel model() const {
        auto self = std::make_shared<TabulatedModel>(*this);
        HamiltonianModel m;
        m.dim = 1;
        m.name = "tabulated";
        m.eval = [self](const Vec& q, const Vec& p, double) { return self->eval(q[0], p[0]); };
        m.grad_q = [self](const Vec& q, const Vec& p, double) { return Vec{self->dq(q[0], p[0])}; };
        m.grad_p = [self](const Vec& q, const Vec& p, double) { return Vec{self->dp(q[0], p[0])}; };
        return m;
    }

private:
    static void weights(double u, int d, double w[4]) {
        if (d == 0) {
            w[0] = 0.5 * (-u + 2 * u * u - u * u * u);
            w[1] = 0.5 * (2 - 5 * u * u + 3 * u * u * u);
            w[2] = 0.5 * (u + 4 * u * u - 3 * u * u * u);
            w[3] = 0.5 * (-u * u + u * u * u);
        } else {
            w[0] = 0.5 * (-1 + 4 * u - 3 * u * u);
            w[1] = 0.5 * (-10 * u + 9 * u * u);
            w[2] = 0.5 * (1 + 8 * u - 9 * u * u);
            w[3] = 0.5 * (-2 * u + 3 * u * u);
        }
    }

    double interp(double q, double p, int dq_order, int dp_order) const {
        double qu = wrap_unit(q) * nq_;
        long iq = long(std::floor(qu));
        double uq = qu - iq;
        double hp = (p_hi_ - p_lo_) / (np_ - 1);
        double pu = (std::clamp(p, p_lo_, p_hi_) - p_lo_) / hp;
        long ip = std::min<long>(long(std::floor(pu)), np_ - 2);
        double up = pu - ip;
        double wq[4], wp[4];
        weights(uq, dq_order, wq);
        weights(up, dp_order, wp);
        double s = 0.0;
        for (int a = -1; a <= 2; ++a) {
            long qi = ((iq + a) % long(nq_) + long(nq_)) % long(nq_);
            for (int b = -1; b <= 2; ++b) {
                long pi = std::clamp<long>(ip + b, 0, long(np_) - 1);
                s += wq[a + 1] * wp[b + 1] * v_[qi][pi];
            }
        }
        double jac = 1.0;
        if (dq_order) jac *= nq_;
        if (dp_order) jac *= 1.0 / hp;
        return s * jac;
    }

    std::vector<Vec> v_;
    std::size_t nq_ = 0, np_ = 0;
    double p_lo_, p_hi_;
};

}  // namespace models

/// Registry keyed by name; parameters as a flat map (config-file surface).
inline HamiltonianModel make_model(const std::string& name,
                                   const std::map<std::string, double>& params) {
    auto get = [&](const std::string& key, double dflt) {
        auto it = params.find(key);
        return it == params.end() ? dflt : it->second;
    };
    if (name == "integrable") {
        Vec coeffs;
        for (int j = 0;; ++j) {
            auto it = params.find("c" + std::to_string(j));
            if (it == params.end()) break;
            coeffs.push_back(it->second);
        }
        if (coeffs.empty()) coeffs = {0.0, 0.0, 0.5};  // p^2/2
        return models::integrable(coeffs);
    }
    if (name == "integrable2d") return models::integrable2d(get("a1", 1.0), get("a2", 1.0));
    if (name == "pendulum") return models::pendulum(get("amplitude", 1.0));
    if (name == "doublewell_p") return models::doublewell_p(get("epsilon", 0.0));
    if (name == "kicked") return models::kicked(get("amplitude", 0.1));
    if (name == "bump")
        return models::bump(get("q0", 0.5), get("p0", 0.0), get("rq", 0.2), get("rp", 0.5),
                            get("amp", 0.1));
    throw InvalidInput("unknown model '" + name + "'");
}

}  // namespace symhom
