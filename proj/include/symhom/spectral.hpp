#pragma once

// Action selectors of the discrete generating functions, the normalized
// values f_k(c) = l(W_{k,c}) / k, and the homogenized alpha curve.
//
// Orientation: the raw chord problem of the shifted model evaluates, on
// integrable fibers, to k h(-c). A single linear fixture (h = p + p^2/2,
// whose alpha is asymmetric) decides once whether the class c must be fed to
// the machinery as +c or -c; the resulting tag is stamped on every output.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "symhom/core.hpp"
#include "symhom/genfun.hpp"
#include "symhom/models.hpp"
#include "symhom/persistence.hpp"

namespace symhom {

// ---------------------------------------------------------------------------
// Orientation calibration
// ---------------------------------------------------------------------------

struct Orientation {
    int sign = -1;
    std::string tag() const { return sign < 0 ? "flip" : "identity"; }
};

namespace detail {

inline double unique_level(const DiscreteAction& w, const MultistartSpec& ms) {
    auto pts = find_critical_points(w, ms);
    if (pts.empty()) throw NoCriticalPoint("no chord found");
    return pts.front().value;
}

}  // namespace detail

/// Runs the asymmetric linear fixture h = p + p^2/2 and pins the sign with
/// which a cohomology class enters the discrete action. Deterministic; the
/// result is cached for the process lifetime.
inline Orientation calibrate_orientation() {
    auto fixture = models::integrable({0.0, 1.0, 0.5});
    const double target = 1.0 + 0.5;  // alpha(1) of the fixture
    const int k = 2;
    double best_err = 1e300;
    int best_sign = 0;
    for (int sign : {-1, +1}) {
        auto w = build_discrete_action(fixture, OneFormClass(sign * 1.0), k, 8);
        double f = detail::unique_level(w, {32, 1, 0.0, 1.0}) / k;
        double err = std::abs(f - target);
        if (err < best_err) { best_err = err; best_sign = sign; }
    }
    if (best_err > 1e-3)
        throw Error("calibration", "linear fixture matches neither orientation");
    return Orientation{best_sign};
}

inline const Orientation& calibrated_orientation() {
    static Orientation o = calibrate_orientation();
    return o;
}

// ---------------------------------------------------------------------------
// Spectral values
// ---------------------------------------------------------------------------

struct SpectralValue {
    double value = 0.0;          // selected critical value of W (not divided by k)
    CriticalPoint certificate;   // critical point achieving it
    std::string method;          // min | minimax-persistence | continuation
    double error_bar = 0.0;
};

namespace detail {

inline bool fiber_convex(const HamiltonianModel& h, double p_box, std::uint64_t seed = 29) {
    Rng rng(seed);
    const double fd = 1e-4;
    for (int s = 0; s < 64; ++s) {
        Vec q = rng.uniform_vec(h.dim, 0.0, 1.0);
        double t = h.time_dependent ? rng.uniform() : 0.0;
        for (std::size_t c = 0; c < h.dim; ++c) {
            Vec p = rng.uniform_vec(h.dim, -p_box, p_box);
            Vec pp = p, pm = p;
            pp[c] += fd; pm[c] -= fd;
            double hpp = (h.grad_p(q, pp, t)[c] - h.grad_p(q, pm, t)[c]) / (2 * fd);
            if (hpp < -1e-7) return false;
        }
    }
    return true;
}

/// Max |H1 - H2| over the chord-relevant window.
inline double max_model_difference(const HamiltonianModel& a, const HamiltonianModel& b,
                                   double p_box) {
    double worst = 0.0;
    const int gq = 48, gp = 48, gt = (a.time_dependent || b.time_dependent) ? 8 : 1;
    for (int it = 0; it < gt; ++it) {
        double t = double(it) / gt;
        for (int iq = 0; iq < gq; ++iq)
            for (int ip = 0; ip <= gp; ++ip) {
                Vec q(a.dim, double(iq) / gq), p(a.dim, -p_box + 2 * p_box * double(ip) / gp);
                worst = std::max(worst, std::abs(a.eval(q, p, t) - b.eval(q, p, t)));
            }
    }
    return worst;
}

inline DiscreteAction make_action_fixed_n(const HamiltonianModel& h, const OneFormClass& lam,
                                          int k, int n_steps) {
    DiscreteAction w;
    w.H = h;
    w.K = shift_by_form(h, lam);
    w.lambda = lam;
    w.k = k;
    w.n = h.dim;
    w.N = n_steps;
    w.tau = 1.0 / n_steps;
    w.m = long(k) * n_steps;
    return w;
}

}  // namespace detail

/// Tonelli-side selector: on fiber-convex models the homological selector of
/// the fundamental class is the largest critical value (the chord minimizing
/// the dual Lagrangian action). Caller asserts convexity; a sampled probe
/// guards against gross misuse.
inline SpectralValue spectral_invariant_min(const DiscreteAction& w, MultistartSpec ms = {}) {
    if (!detail::fiber_convex(w.K, 1.5 + norm_inf(w.lambda.lambda)))
        throw NotApplicable("min backend requires fiber convexity on the explored region");
    auto pts = find_critical_points(w, ms);
    if (pts.empty()) throw NoCriticalPoint("min backend found no critical point");
    SpectralValue sv;
    sv.certificate = pts.front();
    sv.value = sv.certificate.value;
    sv.method = "min";
    sv.error_bar = 1e-8 * (1.0 + std::abs(sv.value));
    return sv;
}

// ---------------------------------------------------------------------------
// Grid persistence backend
// ---------------------------------------------------------------------------

struct MinimaxGridSpec {
    int cells = 24;          // per axis
    double window = 3.0;     // initial fiber half-width
    int max_expansions = 4;
};

/// Homological selector on a cubical window. Feasible only for tiny problems
/// (total variable dimension <= 4); the variables are rotated pairwise so the
/// transport form is diagonal with one negative and one positive axis per
/// step.
inline SpectralValue spectral_invariant_minimax(const DiscreteAction& w,
                                                const MinimaxGridSpec& spec = {}) {
    const std::size_t dim = w.n_vars();
    if (dim > 4)
        throw FeasibilityError("grid persistence infeasible beyond dimension 4; "
                               "use the continuation backend");
    if (w.n != 1) throw FeasibilityError("grid persistence implemented for base dimension 1");

    // diagonalize each (p_i, u_i) transport block; sigma from the averaged
    // fiber curvature at the chord window center
    double sigma = 0.0;
    {
        const int g = 16;
        const double fd = 1e-4;
        for (int i = 0; i < g; ++i) {
            Vec q{double(i) / g};
            sigma += (w.K.grad_p(q, {fd}, 0.0)[0] - w.K.grad_p(q, {-fd}, 0.0)[0]) / (2 * fd);
        }
        sigma /= g;
    }
    const double c = 0.5 * w.tau * sigma;
    const double disc = std::sqrt(c * c + 1.0);
    const double mu_minus = 0.5 * (c - disc), mu_plus = 0.5 * (c + disc);
    // unit eigenvectors of [[2c, -1], [-1, 0]] / 2 in (p, u) coordinates
    auto evec = [&](double mu) {
        double vx = 1.0, vy = 2.0 * (c - mu);
        double nn = std::sqrt(vx * vx + vy * vy);
        return std::pair<double, double>(vx / nn, vy / nn);
    };
    auto [em_p, em_u] = evec(mu_minus);
    auto [ep_p, ep_u] = evec(mu_plus);

    auto eval_split = [&](const Vec& x) {
        // x = (q0, a_1, b_1, ..., a_m, b_m)
        Vec z(w.n_vars(), 0.0);
        z[w.q_off(0)] = x[0];
        double q = x[0];
        for (long i = 0; i < w.m; ++i) {
            double a = x[1 + 2 * i], b = x[2 + 2 * i];
            double p = a * em_p + b * ep_p;
            double u = a * em_u + b * ep_u;
            q += u;
            z[w.p_off(i + 1)] = p;
            z[w.q_off(i + 1)] = q;
        }
        return w.value(z);
    };

    double window = spec.window;
    MinimaxResult mr;
    for (int expansion = 0;; ++expansion) {
        std::vector<MinimaxAxis> axes;
        axes.push_back({0.0, 1.0, spec.cells, true, 0});
        for (long i = 0; i < w.m; ++i) {
            axes.push_back({-window, window, spec.cells, false, -1});
            axes.push_back({-window, window, spec.cells, false, +1});
        }
        try {
            mr = minimax_level(eval_split, axes);
            break;
        } catch (const WindowExhaustion&) {
            if (expansion >= spec.max_expansions) throw;
            window *= 1.6;
        }
    }

    // snap to the nearest polished critical value
    auto pts = find_critical_points(w, {64, 3, 0.0, 1.0});
    if (pts.empty()) throw NoCriticalPoint("grid persistence: no critical point to certify");
    const CriticalPoint* best = &pts.front();
    for (const auto& cp : pts)
        if (std::abs(cp.value - mr.level) < std::abs(best->value - mr.level)) best = &cp;
    double slack = mr.error_bar + 1e-6 * (1.0 + std::abs(mr.level));
    if (std::abs(best->value - mr.level) > std::max(slack, 0.75 * mr.error_bar + 0.05))
        throw SelectorInconsistency("grid level " + std::to_string(mr.level) +
                                    " has no nearby critical value");
    SpectralValue sv;
    sv.certificate = *best;
    sv.value = best->value;
    sv.method = "minimax-persistence";
    sv.error_bar = mr.error_bar + std::abs(best->value - mr.level);
    return sv;
}

// ---------------------------------------------------------------------------
// Continuation backend
// ---------------------------------------------------------------------------

/// When two branches fall inside one bracket the default is to raise
/// an ambiguity; Nearest resolves to the closest branch and is only used by
/// callers that record the policy in their report.
enum class AmbiguityPolicy { Error, Nearest };

/// Tracks the selected critical value along the linear homotopy
/// H_s = (1-s) H_ref + s H_target at fixed class, k and step count, using the
/// selector's Lipschitz bound in the Hamiltonian to bracket the branch. Two
/// in-bracket branches raise an ambiguity listing both values.
inline SpectralValue spectral_invariant_continuation(const HamiltonianModel& h_ref,
                                                     const HamiltonianModel& h_target,
                                                     const OneFormClass& lam_internal, int k,
                                                     int base_n, int steps,
                                                     MultistartSpec ms = {},
                                                     AmbiguityPolicy policy = AmbiguityPolicy::Error) {
    if (steps < 1) throw InvalidInput("continuation: steps must be >= 1");
    const double p_box = 2.0 + norm_inf(lam_internal.lambda);
    const double diff = detail::max_model_difference(h_ref, h_target, p_box);

    // fixed substep count across the homotopy (the C1-smallness requirement
    // of the stiffest member applies to every member of a linear mix)
    int n_eff = base_n;
    for (const HamiltonianModel* h : {&h_ref, &h_target}) {
        auto probe = build_discrete_action(*h, lam_internal, 1, base_n);
        n_eff = std::max(n_eff, probe.N);
    }

    auto mix = [&](double s) {
        HamiltonianModel m = h_target;
        HamiltonianModel a = h_ref, b = h_target;
        m.name = "homotopy";
        m.time_dependent = a.time_dependent || b.time_dependent;
        m.eval = [a, b, s](const Vec& q, const Vec& p, double t) {
            return (1.0 - s) * a.eval(q, p, t) + s * b.eval(q, p, t);
        };
        m.grad_q = [a, b, s](const Vec& q, const Vec& p, double t) {
            Vec g = a.grad_q(q, p, t);
            Vec g2 = b.grad_q(q, p, t);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = (1.0 - s) * g[i] + s * g2[i];
            return g;
        };
        m.grad_p = [a, b, s](const Vec& q, const Vec& p, double t) {
            Vec g = a.grad_p(q, p, t);
            Vec g2 = b.grad_p(q, p, t);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = (1.0 - s) * g[i] + s * g2[i];
            return g;
        };
        return m;
    };

    // reference selector: the unique critical level when the reference is
    // level-degenerate (integrable), otherwise the convex extremal value
    auto w0 = detail::make_action_fixed_n(h_ref, lam_internal, k, n_eff);
    auto pts0 = find_critical_points(w0, ms);
    if (pts0.empty()) throw NoCriticalPoint("continuation: reference has no chord");
    double v_prev;
    double vscale = 1.0 + std::abs(pts0.front().value);
    bool unique0 = (pts0.front().value - pts0.back().value) < 1e-7 * vscale;
    if (unique0) v_prev = pts0.front().value;
    else if (detail::fiber_convex(w0.K, p_box)) v_prev = pts0.front().value;
    else throw NotApplicable("continuation: reference selector undetermined");

    // a linear mix of fiber-convex models is fiber-convex, and there the
    // homological selector reduces to the extremal critical value; inside the
    // bracket that rule resolves splittings of degenerate circles without
    // guessing
    const bool convex_homotopy = detail::fiber_convex(w0.K, p_box) &&
                                 detail::fiber_convex(shift_by_form(h_target, lam_internal), p_box);

    SpectralValue sv;
    sv.method = "continuation";
    sv.certificate = pts0.front();
    sv.error_bar = 0.0;
    double max_spread = 0.0;
    MultistartSpec step_ms = ms;
    for (int j = 1; j <= steps; ++j) {
        double s = double(j) / steps;
        auto w = detail::make_action_fixed_n(mix(s), lam_internal, k, n_eff);
        auto pts = find_critical_points(w, step_ms);
        double delta = double(k) * diff / steps;
        double slack = 1e-7 * (1.0 + std::abs(v_prev)) + 1e-9;
        std::vector<const CriticalPoint*> cands;
        for (const auto& cp : pts)
            if (std::abs(cp.value - v_prev) <= delta + slack) {
                bool clustered = false;
                for (auto* c : cands)
                    if (std::abs(c->value - cp.value) < 1e-7 * (1.0 + std::abs(cp.value)))
                        clustered = true;
                if (!clustered) cands.push_back(&cp);
            }
        if (cands.empty())
            throw NoCriticalPoint("continuation lost the tracked branch at s=" + std::to_string(s));
        const CriticalPoint* chosen = cands[0];
        if (cands.size() > 1) {
            double lo = 1e300, hi = -1e300;
            for (auto* c : cands) {
                lo = std::min(lo, c->value);
                hi = std::max(hi, c->value);
            }
            if (convex_homotopy) {
                // extremal rule: for fiber-convex members the selector is the
                // largest critical value
                for (auto* c : cands)
                    if (c->value > chosen->value) chosen = c;
            } else if (hi - lo <= 2.0 * (delta + slack)) {
                // unresolved cluster (typically a split degenerate circle):
                // any member is admissible; carry the spread in the bar
                for (auto* c : cands)
                    if (std::abs(c->value - v_prev) < std::abs(chosen->value - v_prev)) chosen = c;
                max_spread = std::max(max_spread, hi - lo);
            } else if (policy == AmbiguityPolicy::Error) {
                std::vector<double> branches;
                for (auto* c : cands) branches.push_back(c->value);
                throw AmbiguityError("continuation bifurcation at s=" + std::to_string(s) +
                                     "; refine steps", branches);
            } else {
                for (auto* c : cands)
                    if (std::abs(c->value - v_prev) < std::abs(chosen->value - v_prev)) chosen = c;
            }
        }
        v_prev = chosen->value;
        sv.certificate = *chosen;
        sv.error_bar += delta;
    }
    sv.value = v_prev;
    sv.error_bar += 0.5 * max_spread;
    return sv;
}

// ---------------------------------------------------------------------------
// f_k and the alpha curve
// ---------------------------------------------------------------------------

enum class Backend { Auto, Min, MinimaxPersistence, Continuation };

inline std::string backend_name(Backend b) {
    switch (b) {
        case Backend::Auto: return "auto";
        case Backend::Min: return "min";
        case Backend::MinimaxPersistence: return "persistence";
        case Backend::Continuation: return "continuation";
    }
    return "?";
}

/// q- (and t-) averaged fiber profile of a model, tabulated on a p-grid with
/// local cubic interpolation: the integrable reference the continuation
/// backend starts from. Base dimension 1.
inline HamiltonianModel q_averaged_model(const HamiltonianModel& h, double p_box = 8.0,
                                         int q_grid = 48, int p_grid = 512) {
    if (h.dim != 1) throw FeasibilityError("q_averaged_model: base dimension 1 only");
    int tg = h.time_dependent ? 8 : 1;
    auto table = std::make_shared<Vec>(p_grid + 1);
    const double hp = 2.0 * p_box / p_grid;
    for (int j = 0; j <= p_grid; ++j) {
        double p = -p_box + j * hp;
        double acc = 0.0;
        for (int it = 0; it < tg; ++it)
            for (int g = 0; g < q_grid; ++g)
                acc += h.eval({(g + 0.5) / q_grid}, {p}, (it + 0.5) / tg);
        (*table)[j] = acc / double(tg * q_grid);
    }
    auto interp = [table, p_box, hp, p_grid](double p, int deriv) {
        double u = (std::clamp(p, -p_box + hp, p_box - 2 * hp) + p_box) / hp;
        long j = std::clamp<long>(long(std::floor(u)), 1, p_grid - 2);
        double x = u - j;
        const Vec& v = *table;
        double w[4];
        if (deriv == 0) {
            w[0] = 0.5 * (-x + 2 * x * x - x * x * x);
            w[1] = 0.5 * (2 - 5 * x * x + 3 * x * x * x);
            w[2] = 0.5 * (x + 4 * x * x - 3 * x * x * x);
            w[3] = 0.5 * (-x * x + x * x * x);
        } else {
            w[0] = 0.5 * (-1 + 4 * x - 3 * x * x);
            w[1] = 0.5 * (-10 * x + 9 * x * x);
            w[2] = 0.5 * (1 + 8 * x - 9 * x * x);
            w[3] = 0.5 * (-2 * x + 3 * x * x);
        }
        double s = w[0] * v[j - 1] + w[1] * v[j] + w[2] * v[j + 1] + w[3] * v[j + 2];
        return deriv ? s / hp : s;
    };
    HamiltonianModel m;
    m.dim = 1;
    m.name = h.name + "@qavg";
    m.fiber_growth = h.fiber_growth;
    m.time_dependent = false;
    m.eval = [interp](const Vec&, const Vec& p, double) { return interp(p[0], 0); };
    m.grad_q = [](const Vec&, const Vec&, double) { return Vec{0.0}; };
    m.grad_p = [interp](const Vec&, const Vec& p, double) { return Vec{interp(p[0], 1)}; };
    return m;
}

struct FkOptions {
    Backend backend = Backend::Auto;
    int N = 16;
    MultistartSpec multistart{64, 1, 0.0, 1.0};
    int continuation_steps = 0;     // 0: automatic from the homotopy size
    int orientation_override = 0;   // 0: use the calibrated orientation
    MinimaxGridSpec grid{};
    AmbiguityPolicy ambiguity = AmbiguityPolicy::Error;
};

struct FkResult {
    DiscreteAction W;       // built at the internal (oriented) class
    SpectralValue sv;
    double fk = 0.0;        // sv.value / k
    Vec lambda_internal;
};

inline FkResult compute_fk_full(const HamiltonianModel& h, const Vec& lambda_reported, int k,
                                const FkOptions& opts = {}) {
    int sign = opts.orientation_override ? opts.orientation_override
                                         : calibrated_orientation().sign;
    Vec lam_int = double(sign) * lambda_reported;
    OneFormClass cls(lam_int);
    FkResult res;
    res.lambda_internal = lam_int;

    // the shooting residual oscillates about 2 k |rotation| times around the
    // circle, so the scan density must grow with k and the class size
    FkOptions scaled = opts;
    int winding = 1 + int(std::ceil(norm_inf(lambda_reported)));
    scaled.multistart.count = std::max(opts.multistart.count, 32 + 12 * k * winding);

    Backend backend = opts.backend;
    if (backend == Backend::Auto)
        backend = detail::fiber_convex(h, 1.5 + norm_inf(lambda_reported)) ? Backend::Min
                                                                           : Backend::Continuation;
    switch (backend) {
        case Backend::Min: {
            res.W = build_discrete_action(h, cls, k, opts.N);
            res.sv = spectral_invariant_min(res.W, scaled.multistart);
            break;
        }
        case Backend::MinimaxPersistence: {
            res.W = build_discrete_action(h, cls, k, opts.N);
            res.sv = spectral_invariant_minimax(res.W, opts.grid);
            break;
        }
        case Backend::Continuation:
        default: {
            auto ref = q_averaged_model(h);
            double diff = detail::max_model_difference(ref, h, 2.0 + norm_inf(lam_int));
            int steps = opts.continuation_steps;
            if (steps <= 0) steps = std::max(4, int(std::ceil(double(k) * diff / 0.2)));
            int attempts = 0;
            for (;;) {
                try {
                    res.sv = spectral_invariant_continuation(ref, h, cls, k, opts.N, steps,
                                                             scaled.multistart, opts.ambiguity);
                    break;
                } catch (const AmbiguityError&) {
                    if (++attempts > 3) throw;
                    steps *= 2;
                }
            }
            res.W = build_discrete_action(h, cls, k, opts.N);
            break;
        }
    }
    res.fk = res.sv.value / double(k);
    return res;
}

inline double compute_fk(const HamiltonianModel& h, const Vec& lambda_reported, int k,
                         const FkOptions& opts = {}) {
    return compute_fk_full(h, lambda_reported, k, opts).fk;
}

struct AlphaCurve {
    Vec lambdas;
    std::vector<int> k_schedule;
    std::vector<Vec> per_k;     // per_k[j][i] = f_{k_j}(lambda_i)
    Vec alpha;
    Vec err;
    double lipschitz_constant = 0.0;
    std::string convention;
    std::string backend;
    std::vector<std::string> warnings;
};

struct HomogenizeOptions {
    std::vector<int> k_schedule = {1, 2, 4, 8, 16};
    FkOptions fk{};
};

/// Fills f_k over the grid and extrapolates the k -> infinity limit: when
/// the stabilization gaps shrink geometrically the tail is summed as
/// alpha = f_kmax + (f_kmax - f_kmax/2), otherwise plain f_kmax with a
/// warning. Error estimate = last gap + backend error bar.
inline AlphaCurve homogenize(const HamiltonianModel& h, const Vec& lambda_grid,
                             const HomogenizeOptions& opts = {}) {
    if (opts.k_schedule.empty()) throw InvalidInput("homogenize: empty k schedule");
    for (std::size_t j = 1; j < opts.k_schedule.size(); ++j)
        if (opts.k_schedule[j] <= opts.k_schedule[j - 1])
            throw InvalidInput("homogenize: k schedule must increase");
    AlphaCurve curve;
    curve.lambdas = lambda_grid;
    curve.k_schedule = opts.k_schedule;
    curve.per_k.assign(opts.k_schedule.size(), Vec(lambda_grid.size(), 0.0));
    curve.alpha.assign(lambda_grid.size(), 0.0);
    curve.err.assign(lambda_grid.size(), 0.0);
    curve.convention = (opts.fk.orientation_override
                            ? Orientation{opts.fk.orientation_override}
                            : calibrated_orientation())
                           .tag();
    curve.backend = backend_name(opts.fk.backend);
    std::vector<std::string> warn(lambda_grid.size());

    parallel_for(lambda_grid.size(), [&](std::size_t i) {
        double backend_bar = 0.0;
        for (std::size_t j = 0; j < opts.k_schedule.size(); ++j) {
            auto r = compute_fk_full(h, {lambda_grid[i]}, opts.k_schedule[j], opts.fk);
            curve.per_k[j][i] = r.fk;
            backend_bar = r.sv.error_bar / opts.k_schedule[j];
        }
        std::size_t last = opts.k_schedule.size() - 1;
        double a = curve.per_k[last][i];
        double gap = 0.0, prev_gap = 0.0;
        if (last >= 1) gap = curve.per_k[last][i] - curve.per_k[last - 1][i];
        if (last >= 2) prev_gap = curve.per_k[last - 1][i] - curve.per_k[last - 2][i];
        bool geometric = last >= 2 && std::abs(gap) <= 0.75 * std::abs(prev_gap) &&
                         std::abs(prev_gap) > 1e-12;
        if (geometric) a += gap;
        // monotone stabilization check
        for (std::size_t j = 2; j <= last; ++j) {
            double g1 = std::abs(curve.per_k[j][i] - curve.per_k[j - 1][i]);
            double g0 = std::abs(curve.per_k[j - 1][i] - curve.per_k[j - 2][i]);
            if (g1 > g0 + 1e-9) warn[i] = "non-monotone stabilization";
        }
        curve.alpha[i] = a;
        curve.err[i] = std::abs(gap) + backend_bar;
    });
    for (std::size_t i = 0; i < warn.size(); ++i)
        if (!warn[i].empty())
            curve.warnings.push_back("lambda=" + std::to_string(lambda_grid[i]) + ": " + warn[i]);

    for (std::size_t j = 0; j < curve.per_k.size(); ++j)
        for (std::size_t i = 0; i + 1 < lambda_grid.size(); ++i) {
            double dl = lambda_grid[i + 1] - lambda_grid[i];
            if (dl > 0)
                curve.lipschitz_constant =
                    std::max(curve.lipschitz_constant,
                             std::abs(curve.per_k[j][i + 1] - curve.per_k[j][i]) / dl);
        }
    return curve;
}

// ---------------------------------------------------------------------------
// Property suite (iterate homogeneity, Lipschitz in H, displaceable decay)
// ---------------------------------------------------------------------------

struct MvzReport {
    double homogeneity_gap = 0.0;       // |l(W_2k) - 2 l(W_k)|
    double fk_value = 0.0;
    double oh_max_margin = -1e300;      // max over pairs of |df| - max|G| (<= tol passes)
    int oh_pairs = 0;
    std::vector<double> displaceable_fk;  // |f_k| of the bump fixture over doubling k
    double displaceable_bound = 0.0;      // 2 max|H| / k at the last k
    bool displaceable_decays = false;
};

inline MvzReport property_suite_mvz(const HamiltonianModel& h, double lambda, int k,
                                    int n_pairs = 8, std::uint64_t seed = 101,
                                    const FkOptions& base_opts = {}) {
    MvzReport rep;
    FkOptions opts = base_opts;

    auto fk1 = compute_fk_full(h, {lambda}, k, opts);
    auto fk2 = compute_fk_full(h, {lambda}, 2 * k, opts);
    rep.fk_value = fk1.fk;
    rep.homogeneity_gap = std::abs(fk2.sv.value - 2.0 * fk1.sv.value);

    // Lipschitz in the Hamiltonian: |f_k(H + G) - f_k(H)| <= max |G|
    Rng rng(seed);
    for (int s = 0; s < n_pairs; ++s) {
        double a = rng.uniform(-0.05, 0.05), b = rng.uniform(-0.05, 0.05);
        HamiltonianModel hp = h;
        hp.name = h.name + "+trig";
        HamiltonianModel src = h;
        hp.eval = [src, a, b](const Vec& q, const Vec& p, double t) {
            return src.eval(q, p, t) + a * std::cos(kTwoPi * q[0]) + b * std::sin(kTwoPi * q[0]);
        };
        hp.grad_q = [src, a, b](const Vec& q, const Vec& p, double t) {
            Vec g = src.grad_q(q, p, t);
            g[0] += kTwoPi * (-a * std::sin(kTwoPi * q[0]) + b * std::cos(kTwoPi * q[0]));
            return g;
        };
        double g_max = std::sqrt(a * a + b * b);
        double fk_p = compute_fk(hp, {lambda}, k, opts);
        rep.oh_max_margin = std::max(rep.oh_max_margin, std::abs(fk_p - fk1.fk) - g_max);
        ++rep.oh_pairs;
    }

    // displaceable support: a small bump away from the zero section must
    // homogenize to zero at rate 2 max|H| / k. The constant chords outside
    // the support keep the trivial branch alive at every homotopy step;
    // bifurcations are resolved to the nearest branch and the policy is
    // recorded here.
    auto bump = models::bump(0.5, 3.0, 0.1, 0.1, 0.05);
    const double bmax = 0.05;
    HamiltonianModel zero;
    zero.dim = 1;
    zero.name = "zero";
    zero.eval = [](const Vec&, const Vec&, double) { return 0.0; };
    zero.grad_q = [](const Vec&, const Vec&, double) { return Vec{0.0}; };
    zero.grad_p = [](const Vec&, const Vec&, double) { return Vec{0.0}; };
    int sign = opts.orientation_override ? opts.orientation_override
                                         : calibrated_orientation().sign;
    OneFormClass cls(sign * 3.0);
    std::vector<int> ks = {k, 2 * k, 4 * k};
    for (int kk : ks) {
        auto sv = spectral_invariant_continuation(zero, bump, cls, kk, opts.N, 8,
                                                  opts.multistart, AmbiguityPolicy::Nearest);
        rep.displaceable_fk.push_back(std::abs(sv.value) / double(kk));
    }
    rep.displaceable_bound = 2.0 * bmax / double(ks.back());
    rep.displaceable_decays = true;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        double bound = 2.0 * bmax / double(ks[j]);
        if (rep.displaceable_fk[j] > 1.25 * bound + 1e-9) rep.displaceable_decays = false;
    }
    return rep;
}

}  // namespace symhom
