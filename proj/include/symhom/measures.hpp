#pragma once

// Hamiltonian chords with endpoints on the graph of a class, the empirical
// measures they carry, measure statistics (rotation vector, action,
// invariance and closedness residuals against a fixed observable battery),
// adiabatic limits, and the suspension/reduction correspondence between
// time-periodic and time-one-map invariant measures.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "symhom/core.hpp"
#include "symhom/genfun.hpp"
#include "symhom/models.hpp"
#include "symhom/spectral.hpp"
#include "symhom/subdiff.hpp"

namespace symhom {

// ---------------------------------------------------------------------------
// Observable battery (versioned; the weak-convergence surrogate)
// ---------------------------------------------------------------------------

struct Observable {
    std::string name;
    std::function<double(const Vec& q, const Vec& p)> eval;
    std::function<Vec(const Vec& q, const Vec& p)> grad_q;
    std::function<Vec(const Vec& q, const Vec& p)> grad_p;
    bool base_only = false;  // factors through the projection to the torus
};

namespace battery_detail {

// quintic smoothstep cutoff: 1 on |x| <= p0, 0 beyond p1, C^2 in between
inline double cut(double x, double p0, double p1) {
    double a = std::abs(x);
    if (a <= p0) return 1.0;
    if (a >= p1) return 0.0;
    double t = (a - p0) / (p1 - p0);
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}
inline double cut_d(double x, double p0, double p1) {
    double a = std::abs(x);
    if (a <= p0 || a >= p1) return 0.0;
    double t = (a - p0) / (p1 - p0);
    double d = -(30.0 * t * t - 60.0 * t * t * t + 30.0 * t * t * t * t) / (p1 - p0);
    return x >= 0 ? d : -d;
}

}  // namespace battery_detail

/// battery-v1: {cos 2 pi q_i, sin 2 pi q_i, p_i, p_i^2, p_i cos 2 pi q_i,
/// p_i sin 2 pi q_i} times a C^2 fiber cutoff (identity on |p| <= 6).
inline std::vector<Observable> battery_v1(std::size_t n, double p0 = 6.0, double p1 = 8.0) {
    using battery_detail::cut;
    using battery_detail::cut_d;
    std::vector<Observable> out;
    auto chi = [n, p0, p1](const Vec& p) {
        double c = 1.0;
        for (std::size_t i = 0; i < n; ++i) c *= cut(p[i], p0, p1);
        return c;
    };
    auto chi_d = [n, p0, p1, chi](const Vec& p, std::size_t i) {
        double c = cut_d(p[i], p0, p1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) c *= cut(p[j], p0, p1);
        return c;
    };
    for (std::size_t i = 0; i < n; ++i) {
        auto add = [&](const std::string& name, auto base, auto base_dq, auto base_dp) {
            Observable ob;
            ob.name = name + "_" + std::to_string(i);
            ob.eval = [=](const Vec& q, const Vec& p) { return base(q, p) * chi(p); };
            ob.grad_q = [=](const Vec& q, const Vec& p) {
                Vec g(q.size(), 0.0);
                g[i] = base_dq(q, p) * chi(p);
                return g;
            };
            ob.grad_p = [=](const Vec& q, const Vec& p) {
                Vec g(n, 0.0);
                for (std::size_t c = 0; c < n; ++c) g[c] = base(q, p) * chi_d(p, c);
                g[i] += base_dp(q, p) * chi(p);
                return g;
            };
            out.push_back(std::move(ob));
        };
        add("cosq", [i](const Vec& q, const Vec&) { return std::cos(kTwoPi * q[i]); },
            [i](const Vec& q, const Vec&) { return -kTwoPi * std::sin(kTwoPi * q[i]); },
            [](const Vec&, const Vec&) { return 0.0; });
        add("sinq", [i](const Vec& q, const Vec&) { return std::sin(kTwoPi * q[i]); },
            [i](const Vec& q, const Vec&) { return kTwoPi * std::cos(kTwoPi * q[i]); },
            [](const Vec&, const Vec&) { return 0.0; });
        add("p", [i](const Vec&, const Vec& p) { return p[i]; },
            [](const Vec&, const Vec&) { return 0.0; },
            [](const Vec&, const Vec&) { return 1.0; });
        add("p2", [i](const Vec&, const Vec& p) { return p[i] * p[i]; },
            [](const Vec&, const Vec&) { return 0.0; },
            [i](const Vec&, const Vec& p) { return 2.0 * p[i]; });
        add("pcosq", [i](const Vec& q, const Vec& p) { return p[i] * std::cos(kTwoPi * q[i]); },
            [i](const Vec& q, const Vec& p) { return -kTwoPi * p[i] * std::sin(kTwoPi * q[i]); },
            [i](const Vec& q, const Vec&) { return std::cos(kTwoPi * q[i]); });
        add("psinq", [i](const Vec& q, const Vec& p) { return p[i] * std::sin(kTwoPi * q[i]); },
            [i](const Vec& q, const Vec& p) { return kTwoPi * p[i] * std::cos(kTwoPi * q[i]); },
            [i](const Vec& q, const Vec&) { return std::sin(kTwoPi * q[i]); });
    }
    return out;
}

/// Base observables for the closedness test (C^2 functions of q only).
inline std::vector<Observable> base_battery(std::size_t n) {
    std::vector<Observable> out;
    for (std::size_t i = 0; i < n; ++i) {
        Observable c;
        c.name = "cosq_" + std::to_string(i);
        c.base_only = true;
        c.eval = [i](const Vec& q, const Vec&) { return std::cos(kTwoPi * q[i]); };
        c.grad_q = [i, n](const Vec& q, const Vec&) {
            Vec g(n, 0.0);
            g[i] = -kTwoPi * std::sin(kTwoPi * q[i]);
            return g;
        };
        c.grad_p = [n](const Vec&, const Vec&) { return Vec(n, 0.0); };
        out.push_back(c);
        Observable s = c;
        s.name = "sinq_" + std::to_string(i);
        s.eval = [i](const Vec& q, const Vec&) { return std::sin(kTwoPi * q[i]); };
        s.grad_q = [i, n](const Vec& q, const Vec&) {
            Vec g(n, 0.0);
            g[i] = kTwoPi * std::cos(kTwoPi * q[i]);
            return g;
        };
        out.push_back(std::move(s));
    }
    return out;
}

inline constexpr const char* kBatteryId = "battery-v1";

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

struct Atom {
    CotangentPoint z;
    double s = -1.0;  // time-circle coordinate; < 0 when absent
    double weight = 0.0;
};

struct EmpiricalMeasure {
    std::vector<Atom> atoms;

    bool has_time() const { return !atoms.empty() && atoms.front().s >= 0.0; }

    double total_weight() const {
        double w = 0.0;
        for (const auto& a : atoms) w += a.weight;
        return w;
    }

    void validate() const {
        for (const auto& a : atoms)
            if (!(a.weight > 0)) throw InvalidInput("measure: weights must be positive");
        if (std::abs(total_weight() - 1.0) > 1e-12)
            throw InvalidInput("measure: weights must sum to 1");
    }

    double integrate(const std::function<double(const Atom&)>& f) const {
        double acc = 0.0;
        for (const auto& a : atoms) acc += a.weight * f(a);
        return acc;
    }
};

struct MeasureStats {
    Vec rho;
    double action = 0.0;
    double invariance_residual = 0.0;
    double closedness_residual = 0.0;
    std::string test_battery_id = kBatteryId;
};

// ---------------------------------------------------------------------------
// Chords
// ---------------------------------------------------------------------------

struct Chord {
    std::vector<CotangentPoint> samples;  // i = 0..m, fiber-translated to H-orbits
    Vec times;                            // t_i = i tau
    OneFormClass lambda;                  // reported class
    int k = 1;
    double tau = 0.0;
    double action = 0.0;       // int(-theta + H dt): the level-set action
    Vec displacement;          // lifted q_m - q_0
    double w_value = 0.0;      // selected critical value of W (diagnostic)
};

struct ExtractOptions {
    int N = 16;
    MultistartSpec multistart{64, 1, 0.0, 1.0};
    int orientation_override = 0;
};

/// Chords of H with endpoints on graph(lambda) whose action sits at the
/// selected level: critical chords of the internal-class action, fiber
/// translated back. Every output satisfies the level equation within delta.
inline std::vector<Chord> extract_chords(const HamiltonianModel& h, const Vec& lambda_reported,
                                         int k, double f_value, double delta,
                                         const ExtractOptions& opts = {}) {
    int sign = opts.orientation_override ? opts.orientation_override
                                         : calibrated_orientation().sign;
    Vec lam_int = double(sign) * lambda_reported;
    auto w = build_discrete_action(h, OneFormClass(lam_int), k, opts.N);
    MultistartSpec ms = opts.multistart;
    int winding = 1 + int(std::ceil(norm_inf(lambda_reported)));
    ms.count = std::max(ms.count, 32 + 12 * k * winding);
    auto cls = critical_level_set(w, lambda_reported, f_value, delta, ms);

    std::vector<Chord> out;
    for (const auto& cp : cls.points) {
        Chord c;
        c.lambda = OneFormClass(lambda_reported);
        c.k = k;
        c.tau = w.tau;
        c.w_value = cp.value;
        c.displacement = cp.displacement;
        c.samples.reserve(w.m + 1);
        c.times.reserve(w.m + 1);
        for (long i = 0; i <= w.m; ++i) {
            Vec q = w.q_at(cp.vars, i);
            Vec p = (i == 0) ? zeros(w.n) : w.p_at(cp.vars, i);
            for (std::size_t d = 0; d < w.n; ++d) p[d] -= lam_int[d];
            c.samples.emplace_back(std::move(q), std::move(p));
            c.times.push_back(w.time_at(i));
        }
        c.action = cp.value - dot(lambda_reported, cp.displacement);
        // membership in the chord set: action = -int pi* lambda + k f within delta
        double membership = c.action -
                            (-dot(lambda_reported, c.displacement) + double(k) * f_value);
        if (std::abs(membership) > delta + 1e-9)
            throw SelectorInconsistency("extracted chord violates the level equation");
        out.push_back(std::move(c));
    }
    return out;
}

/// Measure of a degenerate critical family: when the whole circle of starts
/// is critical (q-independent selectors), the family measure averages chords
/// from equispaced starts; the first-harmonic boundary terms then cancel
/// exactly. Returns an empty measure when the family is not flat.
inline EmpiricalMeasure degenerate_family_measure(const HamiltonianModel& h,
                                                  const Vec& lambda_reported, int k, int n_fan,
                                                  int N = 16, int orientation_override = 0) {
    int sign = orientation_override ? orientation_override : calibrated_orientation().sign;
    auto w = build_discrete_action(h, OneFormClass(double(sign) * lambda_reported), k, N);
    EmpiricalMeasure out;
    Vec lam_int = double(sign) * lambda_reported;
    for (int j = 0; j < n_fan; ++j) {
        Vec q0(w.n, (j + 0.5) / double(n_fan));
        if (norm_inf(w.shoot_residual(q0)) > 1e-9) return {};
        Vec z = w.orbit_from(q0);
        for (long i = 0; i < w.m; ++i) {
            Atom a;
            Vec q = w.q_at(z, i);
            Vec p = (i == 0) ? zeros(w.n) : w.p_at(z, i);
            for (std::size_t d = 0; d < w.n; ++d) p[d] -= lam_int[d];
            a.z = CotangentPoint(std::move(q), std::move(p));
            a.weight = 1.0 / double(n_fan * w.m);
            out.atoms.push_back(std::move(a));
        }
    }
    return out;
}

/// Endpoint check helper: both chord ends on graph(lambda).
inline double chord_endpoint_defect(const Chord& c) {
    double d = 0.0;
    for (std::size_t i = 0; i < c.lambda.dim(); ++i) {
        d = std::max(d, std::abs(c.samples.front().p[i] - c.lambda[i]));
        d = std::max(d, std::abs(c.samples.back().p[i] - c.lambda[i]));
    }
    return d;
}

/// Push-forward of Lebesgue measure on [0, k] divided by k: uniform weights
/// on the left-endpoint samples. Time-dependent models record the circle
/// coordinate of each sample.
inline EmpiricalMeasure chord_measure(const Chord& c, bool with_time = false) {
    EmpiricalMeasure m;
    const std::size_t count = c.samples.size() - 1;  // left endpoints
    m.atoms.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Atom a;
        a.z = c.samples[i];
        a.weight = 1.0 / double(count);
        if (with_time) a.s = c.times[i] - std::floor(c.times[i]);
        m.atoms.push_back(std::move(a));
    }
    return m;
}

/// Convex combination of measures; statistics are linear in the measure.
inline EmpiricalMeasure barycenter(const std::vector<EmpiricalMeasure>& ms, const Vec& r) {
    if (ms.size() != r.size() || ms.empty()) throw InvalidInput("barycenter: size mismatch");
    double sum = 0.0;
    for (double w : r) {
        if (w < -1e-15) throw InvalidInput("barycenter: weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("barycenter: weights must sum to 1");
    EmpiricalMeasure out;
    for (std::size_t j = 0; j < ms.size(); ++j) {
        if (r[j] == 0.0) continue;
        for (const auto& a : ms[j].atoms) {
            Atom b = a;
            b.weight *= r[j];
            out.atoms.push_back(std::move(b));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// rho_i = int dH/dp_i dm for autonomous H.
inline Vec rotation_vector(const EmpiricalMeasure& m, const HamiltonianModel& h) {
    Vec rho(h.dim, 0.0);
    for (const auto& a : m.atoms) {
        Vec gp = h.grad_p(a.z.q_lift, a.z.p, 0.0);
        axpy(a.weight, gp, rho);
    }
    return rho;
}

/// A(m) = int (H - p . dH/dp) dm for autonomous H.
inline double action_of_measure(const EmpiricalMeasure& m, const HamiltonianModel& h) {
    double acc = 0.0;
    for (const auto& a : m.atoms) {
        Vec gp = h.grad_p(a.z.q_lift, a.z.p, 0.0);
        acc += a.weight * (h.eval(a.z.q_lift, a.z.p, 0.0) - dot(a.z.p, gp));
    }
    return acc;
}

/// max over the battery of |int dF(X_H) dm|.
inline double invariance_residual(const EmpiricalMeasure& m, const HamiltonianModel& h,
                                  const std::vector<Observable>& battery) {
    double worst = 0.0;
    for (const auto& f : battery) {
        double acc = 0.0;
        for (const auto& a : m.atoms) {
            double t = a.s >= 0 ? a.s : 0.0;
            Vec hp = h.grad_p(a.z.q_lift, a.z.p, t);
            Vec hq = h.grad_q(a.z.q_lift, a.z.p, t);
            Vec fq = f.grad_q(a.z.q_lift, a.z.p);
            Vec fp = f.grad_p(a.z.q_lift, a.z.p);
            acc += a.weight * (dot(fq, hp) - dot(fp, hq));
        }
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

/// Same bracket restricted to observables pulled back from the base.
inline double closedness_residual(const EmpiricalMeasure& m, const HamiltonianModel& h) {
    double worst = 0.0;
    for (const auto& f : base_battery(h.dim)) {
        double acc = 0.0;
        for (const auto& a : m.atoms) {
            double t = a.s >= 0 ? a.s : 0.0;
            Vec hp = h.grad_p(a.z.q_lift, a.z.p, t);
            Vec fq = f.grad_q(a.z.q_lift, a.z.p);
            acc += a.weight * dot(fq, hp);
        }
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

/// Push-forward invariance surrogate: battery moments before and after the
/// time-T map.
inline double push_forward_defect(const EmpiricalMeasure& m, const HamiltonianModel& h, double T,
                                  const std::vector<Observable>& battery, double tau = 1e-2) {
    std::vector<CotangentPoint> moved;
    moved.reserve(m.atoms.size());
    for (const auto& a : m.atoms) {
        double t0 = a.s >= 0 ? a.s : 0.0;
        moved.push_back(flow_map(h, a.z, t0, t0 + T, tau));
    }
    double worst = 0.0;
    for (const auto& f : battery) {
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < m.atoms.size(); ++i) {
            before += m.atoms[i].weight * f.eval(m.atoms[i].z.q_lift, m.atoms[i].z.p);
            after += m.atoms[i].weight * f.eval(moved[i].q_lift, moved[i].p);
        }
        worst = std::max(worst, std::abs(after - before));
    }
    return worst;
}

inline MeasureStats measure_stats(const EmpiricalMeasure& m, const HamiltonianModel& h,
                                  const std::vector<Observable>& battery) {
    MeasureStats st;
    st.rho = rotation_vector(m, h);
    st.action = action_of_measure(m, h);
    st.invariance_residual = invariance_residual(m, h, battery);
    st.closedness_residual = closedness_residual(m, h);
    return st;
}

/// Battery-moment distance (the bounded-Lipschitz surrogate for weak
/// convergence; versioned through kBatteryId).
inline double battery_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                               const std::vector<Observable>& battery) {
    double worst = 0.0;
    for (const auto& f : battery) {
        double ia = 0.0, ib = 0.0;
        for (const auto& at : a.atoms) ia += at.weight * f.eval(at.z.q_lift, at.z.p);
        for (const auto& at : b.atoms) ib += at.weight * f.eval(at.z.q_lift, at.z.p);
        worst = std::max(worst, std::abs(ia - ib));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Nonautonomous statistics (time-periodic H, measures for the time-1 map)
// ---------------------------------------------------------------------------

/// rho(m)[dq_i] = int (q_i(phi^1 x) - q_i(x))_lift dm: per-atom time-1
/// trajectory integration.
inline Vec rotation_vector_nonaut(const EmpiricalMeasure& m, const HamiltonianModel& h,
                                  double tau = 1.0 / 64) {
    Vec rho(h.dim, 0.0);
    for (const auto& a : m.atoms) {
        auto z1 = flow_map(h, a.z, 0.0, 1.0, tau);
        for (std::size_t i = 0; i < h.dim; ++i)
            rho[i] += a.weight * (z1.q_lift[i] - a.z.q_lift[i]);
    }
    return rho;
}

/// A(m) = int_0^1 int [H_t - <p, dH/dp>](phi^t x) dm dt, quadrature at the
/// integrator step.
inline double action_nonaut(const EmpiricalMeasure& m, const HamiltonianModel& h,
                            double tau = 1.0 / 64) {
    double acc = 0.0;
    for (const auto& a : m.atoms) {
        auto tr = integrate_flow(h, a.z, 0.0, 1.0, tau);
        double per_atom = 0.0;
        for (std::size_t j = 0; j + 1 < tr.points.size(); ++j) {
            const auto& z = tr.points[j];
            double t = tr.times[j];
            Vec gp = h.grad_p(z.q_lift, z.p, t);
            per_atom += tau * (h.eval(z.q_lift, z.p, t) - dot(z.p, gp));
        }
        acc += a.weight * per_atom;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Adiabatic limit
// ---------------------------------------------------------------------------

struct AdiabaticReport {
    EmpiricalMeasure last;
    std::vector<double> ks;
    std::vector<double> cauchy;          // battery distance between consecutive nu_k
    double final_residual = 0.0;         // invariance residual against the limit flow
    bool cauchy_warning = false;
    double max_abs_p = 0.0;
};

/// nu_k = time averages of the orbits of x_k under the flow at lambda_k; the
/// report carries the Cauchy table instead of silently extracting
/// subsequences. Escape beyond p_bound raises an error.
inline AdiabaticReport adiabatic_limit(
    const std::function<HamiltonianModel(const Vec&)>& family, const std::vector<Vec>& lambda_seq,
    const std::vector<CotangentPoint>& x_seq, const std::vector<int>& k_seq,
    const HamiltonianModel& limit_model, const std::vector<Observable>& battery,
    double tau = 1.0 / 32, double p_bound = 12.0) {
    if (lambda_seq.size() != x_seq.size() || x_seq.size() != k_seq.size() || x_seq.empty())
        throw InvalidInput("adiabatic_limit: sequence lengths disagree");
    AdiabaticReport rep;
    std::vector<EmpiricalMeasure> nus(k_seq.size());
    parallel_for(k_seq.size(), [&](std::size_t j) {
        auto h = family(lambda_seq[j]);
        auto tr = integrate_flow(h, x_seq[j], 0.0, double(k_seq[j]), tau);
        EmpiricalMeasure nu;
        std::size_t count = tr.points.size() - 1;
        nu.atoms.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            nu.atoms.push_back({tr.points[i], -1.0, 1.0 / double(count)});
        nus[j] = std::move(nu);
    });
    for (const auto& nu : nus)
        for (const auto& a : nu.atoms) rep.max_abs_p = std::max(rep.max_abs_p, norm_inf(a.z.p));
    if (rep.max_abs_p > p_bound)
        throw EscapeDetected("adiabatic orbit left the compact window (|p| = " +
                             std::to_string(rep.max_abs_p) + ")");
    for (std::size_t j = 0; j < k_seq.size(); ++j) rep.ks.push_back(double(k_seq[j]));
    for (std::size_t j = 0; j + 1 < nus.size(); ++j)
        rep.cauchy.push_back(battery_distance(nus[j], nus[j + 1], battery));
    if (rep.cauchy.size() >= 2 &&
        rep.cauchy.back() > 1.5 * std::max(rep.cauchy.front(), 1e-9))
        rep.cauchy_warning = true;
    rep.last = std::move(nus.back());
    rep.final_residual = invariance_residual(rep.last, limit_model, battery);
    return rep;
}

// ---------------------------------------------------------------------------
// Suspension reduction (measures on T*M x S^1 -> time-1-map measures on T*M)
// ---------------------------------------------------------------------------

struct ReducedMeasure {
    EmpiricalMeasure m;             // atoms pulled back to time 0
    double marginal_defect = 0.0;   // deviation of the s-marginal from uniform
    double identity_defect = 0.0;   // defect of int G dnu = int int G(phi_s x, s) dm ds
    bool marginal_warning = false;  // the input was visibly not suspension-invariant
};

/// Pulls each atom (x, s) back along the flow to time 0 and drops the circle
/// coordinate; the defining identity is then re-verified on the battery by
/// re-flowing the reduced atoms.
inline ReducedMeasure suspend_and_reduce(const EmpiricalMeasure& nu, const HamiltonianModel& h,
                                         const std::vector<Observable>& battery,
                                         double tau = 1.0 / 64, double marginal_tol = 0.1) {
    if (!nu.has_time()) throw InvalidInput("suspend_and_reduce: measure carries no circle factor");
    ReducedMeasure out;
    out.m.atoms.reserve(nu.atoms.size());
    for (const auto& a : nu.atoms) {
        Atom b;
        b.z = flow_map_signed(h, a.z, a.s, 0.0, tau);
        b.weight = a.weight;
        b.s = -1.0;
        out.m.atoms.push_back(std::move(b));
    }

    // s-marginal should be uniform when nu is invariant under the suspension
    const int bins = 8;
    Vec hist(bins, 0.0);
    for (const auto& a : nu.atoms) hist[std::min(bins - 1, int(a.s * bins))] += a.weight;
    for (double hbin : hist) out.marginal_defect = std::max(out.marginal_defect,
                                                            std::abs(hbin - 1.0 / bins) * bins);
    out.marginal_warning = out.marginal_defect > marginal_tol;

    // verify int G dnu = int_0^1 int G(phi_s(x), s) dm ds on the battery,
    // reusing the atoms' own s-values as the quadrature in s
    double worst = 0.0;
    for (const auto& f : battery) {
        double lhs = 0.0;
        for (const auto& a : nu.atoms) lhs += a.weight * f.eval(a.z.q_lift, a.z.p);
        double rhs = 0.0;
        for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
            // phi_s applied back to the reduced atom returns to the original
            const auto& s = nu.atoms[i].s;
            auto zs = flow_map_signed(h, out.m.atoms[i].z, 0.0, s, tau);
            rhs += out.m.atoms[i].weight * f.eval(zs.q_lift, zs.p);
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    out.identity_defect = worst;
    return out;
}

/// Suspension of a time-0 measure: atoms distributed along the flow with a
/// uniform circle coordinate (the inverse construction, for round trips).
inline EmpiricalMeasure suspend_measure(const EmpiricalMeasure& m, const HamiltonianModel& h,
                                        int s_steps = 16, double tau = 1.0 / 64) {
    EmpiricalMeasure nu;
    nu.atoms.reserve(m.atoms.size() * s_steps);
    for (const auto& a : m.atoms) {
        CotangentPoint z = a.z;
        for (int j = 0; j < s_steps; ++j) {
            double s0 = double(j) / s_steps;
            Atom b;
            b.z = z;
            b.s = s0;
            b.weight = a.weight / s_steps;
            nu.atoms.push_back(b);
            z = flow_map(h, z, s0, s0 + 1.0 / s_steps, tau);
        }
    }
    return nu;
}

}  // namespace symhom
