#pragma once

// Clarke and limsup subdifferential estimation for functions known only
// through grid samples (the normalized selectors f_k, the homogenized alpha,
// the perturbation energy E), plus the level-set inclusion test tying the
// subdifferential to chord displacement data.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "symhom/core.hpp"
#include "symhom/genfun.hpp"
#include "symhom/linalg.hpp"

namespace symhom {

// ---------------------------------------------------------------------------
// Sampled functions
// ---------------------------------------------------------------------------

/// Tensor-grid samples in one or two variables.
struct SampledGrid {
    std::vector<Vec> axes;  // sorted coordinates per dimension (size 1 or 2)
    Vec values;             // row-major over the axes

    std::size_t dim() const { return axes.size(); }

    double value(std::size_t i, std::size_t j = 0) const {
        return dim() == 1 ? values[i] : values[i * axes[1].size() + j];
    }

    static SampledGrid line(Vec xs, Vec ys) {
        SampledGrid g;
        g.axes = {std::move(xs)};
        g.values = std::move(ys);
        return g;
    }
};

struct GradientSample {
    Vec at;        // sample location
    Vec gradient;  // central-difference estimate
    double radius; // annulus it was collected from
};

struct LimsupWitness {
    int k = 0;
    Vec lambda;
    Vec eta;
};

struct SubdiffEstimate {
    Vec at;
    std::vector<Vec> polytope;          // hull vertices; 1-d: {lo}, {hi}
    std::vector<GradientSample> samples;
    Vec radii;
    std::string method;                 // clarke-fd | limsup-sequence
    std::vector<LimsupWitness> witnesses;
    bool divergence_warning = false;

    double lo() const { return polytope.front()[0]; }
    double hi() const { return polytope.back()[0]; }

    bool contains(const Vec& eta, double margin) const {
        if (at.size() == 1) return eta[0] >= lo() - margin && eta[0] <= hi() + margin;
        std::vector<std::array<double, 2>> hull;
        for (const auto& v : polytope) hull.push_back({v[0], v[1]});
        return hull_distance_2d(convex_hull_2d(hull), eta[0], eta[1]) <= margin;
    }
};

namespace detail {

/// 1-d cluster split at gaps exceeding 5x the median gap.
inline std::vector<double> cluster_representatives(Vec slopes) {
    std::sort(slopes.begin(), slopes.end());
    if (slopes.size() <= 1) return slopes;
    Vec gaps;
    for (std::size_t i = 0; i + 1 < slopes.size(); ++i) gaps.push_back(slopes[i + 1] - slopes[i]);
    Vec sg = gaps;
    std::sort(sg.begin(), sg.end());
    double median = sg[sg.size() / 2];
    double cut = 5.0 * std::max(median, 1e-12);
    std::vector<double> reps;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 <= gaps.size(); ++i) {
        if (gaps[i] > cut) {
            double acc = 0.0;
            for (std::size_t j = start; j <= i; ++j) acc += slopes[j];
            reps.push_back(acc / double(i - start + 1));
            start = i + 1;
        }
    }
    double acc = 0.0;
    for (std::size_t j = start; j < slopes.size(); ++j) acc += slopes[j];
    reps.push_back(acc / double(slopes.size() - start));
    return reps;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Clarke estimate
// ---------------------------------------------------------------------------

/// Central-difference gradients collected in shrinking annuli around
/// lambda0; 1-d clusters are split at slope gaps, higher dimensions keep the
/// conservative hull of every sample.
inline SubdiffEstimate clarke_subdiff(const SampledGrid& f, const Vec& lambda0, Vec radii) {
    if (f.dim() != lambda0.size()) throw InvalidInput("clarke_subdiff: dimension mismatch");
    if (radii.empty()) throw InvalidInput("clarke_subdiff: need at least one radius");
    std::sort(radii.begin(), radii.end(), std::greater<double>());
    SubdiffEstimate est;
    est.at = lambda0;
    est.radii = radii;
    est.method = "clarke-fd";

    const std::size_t need = 2 * lambda0.size() + 1;
    if (f.dim() == 1) {
        const Vec& xs = f.axes[0];
        double r_min = radii.back();
        std::size_t inside = 0;
        for (double x : xs)
            if (std::abs(x - lambda0[0]) <= r_min) ++inside;
        if (inside < need)
            throw InvalidInput("clarke_subdiff: smallest radius holds " + std::to_string(inside) +
                               " samples, needs " + std::to_string(need) +
                               "; sample more densely");
        for (double r : radii) {
            for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
                if (std::abs(xs[i] - lambda0[0]) > r) continue;
                double slope = (f.value(i + 1) - f.value(i - 1)) / (xs[i + 1] - xs[i - 1]);
                est.samples.push_back({{xs[i]}, {slope}, r});
            }
        }
        // cluster the tightest ring that still carries enough samples, so
        // the representatives approximate limiting gradients rather than
        // annulus averages
        Vec slopes;
        for (std::size_t j = radii.size(); j-- > 0;) {
            slopes.clear();
            for (const auto& s : est.samples)
                if (s.radius <= radii[j] + 1e-15) slopes.push_back(s.gradient[0]);
            if (slopes.size() >= 7) break;
        }
        auto reps = detail::cluster_representatives(slopes);
        est.polytope = {{reps.front()}, {reps.back()}};
    } else {
        const Vec& xs = f.axes[0];
        const Vec& ys = f.axes[1];
        double r_min = radii.back();
        std::size_t inside = 0;
        for (double x : xs)
            for (double y : ys)
                if (std::hypot(x - lambda0[0], y - lambda0[1]) <= r_min) ++inside;
        if (inside < need)
            throw InvalidInput("clarke_subdiff: sample the 2-d grid more densely");
        for (double r : radii)
            for (std::size_t i = 1; i + 1 < xs.size(); ++i)
                for (std::size_t j = 1; j + 1 < ys.size(); ++j) {
                    if (std::hypot(xs[i] - lambda0[0], ys[j] - lambda0[1]) > r) continue;
                    double gx = (f.value(i + 1, j) - f.value(i - 1, j)) / (xs[i + 1] - xs[i - 1]);
                    double gy = (f.value(i, j + 1) - f.value(i, j - 1)) / (ys[j + 1] - ys[j - 1]);
                    est.samples.push_back({{xs[i], ys[j]}, {gx, gy}, r});
                }
        std::vector<std::array<double, 2>> pts;
        for (const auto& s : est.samples)
            if (s.radius == radii.back()) pts.push_back({s.gradient[0], s.gradient[1]});
        auto hull = convex_hull_2d(pts);
        for (const auto& v : hull) est.polytope.push_back({v[0], v[1]});
        if (est.polytope.empty()) throw InvalidInput("clarke_subdiff: no interior samples");
    }
    return est;
}

// ---------------------------------------------------------------------------
// limsup estimate over a k-family
// ---------------------------------------------------------------------------

/// Accumulation estimate of the subdifferentials of a sampled family
/// f_k -> f near lambda0, with the witness sequence (k, lambda_k, eta_k) the
/// construction of invariant measures consumes.
inline SubdiffEstimate limsup_subdiff(const std::vector<int>& ks,
                                      const std::vector<SampledGrid>& fks, const Vec& lambda0,
                                      Vec radii = {}) {
    if (ks.size() != fks.size() || ks.size() < 3)
        throw InvalidInput("limsup_subdiff: need at least 3 members of the family");
    SubdiffEstimate est;
    est.at = lambda0;
    est.method = "limsup-sequence";

    std::vector<SubdiffEstimate> per_k;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        Vec r = radii;
        if (r.empty()) {
            const Vec& xs = fks[j].axes[0];
            double spacing = xs.size() > 1 ? (xs.back() - xs.front()) / double(xs.size() - 1) : 0.1;
            double r0 = std::max(4.1 * spacing, 0.4 / double(ks[j]));
            r = {2.0 * r0, r0};
        }
        per_k.push_back(clarke_subdiff(fks[j], lambda0, r));
        est.radii.push_back(per_k.back().radii.back());
    }

    // accumulation set estimate: hull over the tail of the family
    std::size_t tail = ks.size() >= 5 ? ks.size() - 3 : ks.size() - 2;
    double lo = 1e300, hi = -1e300;
    for (std::size_t j = tail; j < per_k.size(); ++j) {
        lo = std::min(lo, per_k[j].lo());
        hi = std::max(hi, per_k[j].hi());
        for (const auto& s : per_k[j].samples) est.samples.push_back(s);
    }
    est.polytope = {{lo}, {hi}};

    // diameters growing along the family indicate a non-convergent witness
    double d_first = per_k.front().hi() - per_k.front().lo();
    double d_last = per_k.back().hi() - per_k.back().lo();
    est.divergence_warning = d_last > 2.0 * d_first + 0.25;

    // witness sequences for both extremes
    for (double target : {lo, hi}) {
        for (std::size_t j = 0; j < per_k.size(); ++j) {
            const GradientSample* best = nullptr;
            for (const auto& s : per_k[j].samples)
                if (!best || std::abs(s.gradient[0] - target) < std::abs(best->gradient[0] - target))
                    best = &s;
            if (best) est.witnesses.push_back({ks[j], best->at, best->gradient});
        }
    }
    return est;
}

// ---------------------------------------------------------------------------
// Critical level sets and the inclusion test
// ---------------------------------------------------------------------------

struct CriticalLevelSet {
    Vec lambda0;
    double level = 0.0;   // k f_k(lambda0)
    double delta = 0.0;
    std::vector<CriticalPoint> points;
};

/// Members of the critical set at the selected level: every reported point is
/// critical and within delta of k f_value. The spectral certificate must be a
/// member, otherwise the selector and the level set disagree.
inline CriticalLevelSet critical_level_set(const DiscreteAction& w, const Vec& lambda0,
                                           double f_value, double delta,
                                           const MultistartSpec& ms = {}) {
    CriticalLevelSet out;
    out.lambda0 = lambda0;
    out.level = f_value * w.k;
    out.delta = delta;
    for (auto& cp : find_critical_points(w, ms))
        if (std::abs(cp.value - out.level) <= delta) out.points.push_back(std::move(cp));
    if (out.points.empty())
        throw SelectorInconsistency("critical_level_set: no chord at level " +
                                    std::to_string(out.level) + " within " + std::to_string(delta));
    return out;
}

struct InclusionReport {
    bool pass = false;
    double margin = 0.0;
    double worst_violation = 0.0;  // how far the estimate pokes out of the hull
    double hull_lo = 0.0, hull_hi = 0.0;
    double est_lo = 0.0, est_hi = 0.0;
};

/// Checks that the Clarke estimate of f_k at lambda0 lies inside the convex
/// hull of the normalized chord displacements over the level set, inflated by
/// `margin`.
inline InclusionReport inclusion_check(const DiscreteAction& w, const Vec& lambda0,
                                       const SubdiffEstimate& sd, const CriticalLevelSet& cls,
                                       double margin) {
    (void)lambda0;
    InclusionReport rep;
    rep.margin = margin;
    if (sd.at.size() != 1) throw FeasibilityError("inclusion_check: 1-d classes only");
    double lo = 1e300, hi = -1e300;
    for (const auto& cp : cls.points) {
        double d = cp.lambda_partial[0] / double(w.k);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    rep.hull_lo = lo;
    rep.hull_hi = hi;
    rep.est_lo = sd.lo();
    rep.est_hi = sd.hi();
    rep.worst_violation = std::max(0.0, std::max(lo - sd.lo(), sd.hi() - hi));
    rep.pass = sd.lo() >= lo - margin && sd.hi() <= hi + margin;
    return rep;
}

/// Mean-value scan: finds a grid point between a and b whose Clarke estimate
/// contains the difference quotient (inflated by `tol`).
struct MeanValuePoint {
    bool found = false;
    double lambda3 = 0.0;
    double quotient = 0.0;
};

inline MeanValuePoint mean_value_scan(const SampledGrid& f, double a, double b, double tol) {
    if (f.dim() != 1 || !(b > a)) throw InvalidInput("mean_value_scan: need 1-d samples, b > a");
    const Vec& xs = f.axes[0];
    auto value_at = [&](double x) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (std::abs(xs[i] - x) < std::abs(xs[best] - x)) best = i;
        return f.value(best);
    };
    MeanValuePoint out;
    out.quotient = (value_at(b) - value_at(a)) / (b - a);
    double spacing = (xs.back() - xs.front()) / double(xs.size() - 1);
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        if (xs[i] < a || xs[i] > b) continue;
        SubdiffEstimate sd = clarke_subdiff(f, {xs[i]}, {3.5 * spacing, 1.6 * spacing});
        if (out.quotient >= sd.lo() - tol && out.quotient <= sd.hi() + tol) {
            out.found = true;
            out.lambda3 = xs[i];
            return out;
        }
    }
    return out;
}

}  // namespace symhom
