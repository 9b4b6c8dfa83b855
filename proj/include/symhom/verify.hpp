#pragma once

// End-to-end pipelines that run the main statements as numerical
// experiments: pick a subgradient of the homogenized curve, realize it as an
// invariant measure through chords at witness classes, and compare rotation
// vector and action against the predicted identities. Each pipeline returns
// a falsifiable report with explicit tolerances.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "symhom/core.hpp"
#include "symhom/measures.hpp"
#include "symhom/models.hpp"
#include "symhom/oracle.hpp"
#include "symhom/spectral.hpp"
#include "symhom/subdiff.hpp"

namespace symhom {

// Budget scale factors for |rho - eta| and the action identity. Calibrated on
// the linear integrable fixture (where the identities are exact up to the
// scheme error) and frozen; the floor keeps the budget meaningful on models
// where the fixture-measured error degenerates to zero.
inline constexpr double kBudgetC1 = 2.5;
inline constexpr double kBudgetC2 = 2.5;

inline double tol_rho(double tau, int k_max) { return kBudgetC1 * (tau + 1.0 / k_max); }
inline double tol_action(double tau, int k_max, double spectral_bar) {
    return kBudgetC2 * (tau + 1.0 / k_max) + spectral_bar;
}

struct TheoremReport {
    std::string theorem_id;
    std::map<std::string, double> inputs;
    std::map<std::string, double> predicted;
    std::map<std::string, double> measured;
    std::map<std::string, double> tolerances;
    bool pass = false;
    bool skipped = false;
    std::string skip_reason;
    std::vector<std::string> notes;
    EmpiricalMeasure measure;
    MeasureStats stats;
    std::vector<double> residual_by_k;  // invariance residuals along the k schedule

    void gate(const std::string& name, double got, double want, double tol) {
        predicted[name] = want;
        measured[name] = got;
        tolerances[name] = tol;
    }
    void finalize() {
        pass = !skipped;
        for (const auto& [name, tol] : tolerances)
            if (std::abs(measured.at(name) - predicted.at(name)) > tol) pass = false;
    }
};

struct VerifyConfig {
    std::vector<int> k_schedule = {4, 8, 16};
    int N = 16;
    double window = 0.45;       // half-width of the class window probed around lambda
    int grid_points = 19;       // odd, so lambda sits on the grid
    double eta_override = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 1;
    double horizon = 12.0;      // boundedness probe
    double p_bound = 14.0;
    double level_delta = 0.0;   // 0: automatic
};

namespace verify_detail {

struct CurveData {
    AlphaCurve curve;
    std::size_t center = 0;  // index of lambda in the grid
};

inline CurveData window_curve(const HamiltonianModel& h, double lambda, const VerifyConfig& cfg) {
    CurveData cd;
    Vec grid;
    int half = cfg.grid_points / 2;
    for (int j = -half; j <= half; ++j)
        grid.push_back(lambda + cfg.window * double(j) / double(half));
    cd.center = std::size_t(half);
    HomogenizeOptions opts;
    opts.k_schedule = cfg.k_schedule;
    opts.fk.N = cfg.N;
    opts.fk.multistart.seed = cfg.seed;
    cd.curve = homogenize(h, grid, opts);
    return cd;
}

inline SampledGrid fk_grid(const AlphaCurve& curve, std::size_t j) {
    return SampledGrid::line(curve.lambdas, curve.per_k[j]);
}

/// Grid sample (lambda, slope) of f_k nearest the requested slope eta.
struct Witness {
    double lambda = 0.0;
    double slope = 0.0;
    double f_value = 0.0;
    std::size_t index = 0;
};

inline Witness witness_for(const AlphaCurve& curve, std::size_t kj, double eta) {
    const Vec& xs = curve.lambdas;
    const Vec& ys = curve.per_k[kj];
    Witness best;
    double best_err = 1e300;
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        double slope = (ys[i + 1] - ys[i - 1]) / (xs[i + 1] - xs[i - 1]);
        double err = std::abs(slope - eta);
        if (err < best_err) {
            best_err = err;
            best = {xs[i], slope, ys[i], i};
        }
    }
    return best;
}

/// Chord at the witness class whose normalized displacement best matches eta.
inline Chord select_chord(const HamiltonianModel& h, const Witness& w, int k,
                          const VerifyConfig& cfg) {
    ExtractOptions eo;
    eo.N = cfg.N;
    eo.multistart.seed = cfg.seed;
    double delta = cfg.level_delta > 0 ? cfg.level_delta : std::max(1e-6, 2e-4 * k);
    auto chords = extract_chords(h, {w.lambda}, k, w.f_value, delta, eo);
    std::size_t best = 0;
    for (std::size_t i = 1; i < chords.size(); ++i)
        if (std::abs(chords[i].displacement[0] / k - w.slope) <
            std::abs(chords[best].displacement[0] / k - w.slope))
            best = i;
    return chords[best];
}

/// Measure of the selected chord; degenerate critical circles are averaged
/// over equispaced starts so the boundary terms cancel.
inline EmpiricalMeasure select_measure(const HamiltonianModel& h, const Witness& w, int k,
                                       const VerifyConfig& cfg, Chord* chord_out = nullptr) {
    Chord c = select_chord(h, w, k, cfg);
    if (chord_out) *chord_out = c;
    auto fan = degenerate_family_measure(h, {w.lambda}, k, 16, cfg.N);
    if (!fan.atoms.empty()) return fan;
    return chord_measure(c);
}

}  // namespace verify_detail

// ---------------------------------------------------------------------------
// Main theorem (autonomous)
// ---------------------------------------------------------------------------

/// For eta in the subdifferential of the homogenized curve at lambda, builds
/// an invariant measure with rho(m) = eta and A(m) = alpha(lambda) - eta
/// lambda, within the frozen budget.
inline TheoremReport verify_main_theorem(const HamiltonianModel& h, double lambda,
                                         const VerifyConfig& cfg = {}) {
    TheoremReport rep;
    rep.theorem_id = "main_thm";
    rep.inputs["lambda"] = lambda;
    rep.inputs["k_max"] = cfg.k_schedule.back();

    auto bounded = check_geometrically_bounded(h, {{lambda}}, cfg.horizon, cfg.p_bound, 4, 2e-2);
    rep.notes.push_back("boundedness probe (" + bounded.policy +
                        "): max excursion " + std::to_string(bounded.max_excursion));
    if (!bounded.bounded) throw EscapeDetected("verify_main_theorem: flow left the probe window");

    auto cd = verify_detail::window_curve(h, lambda, cfg);
    double alpha = cd.curve.alpha[cd.center];

    // limsup estimate of the subdifferential of the f_k family at lambda
    std::vector<SampledGrid> fks;
    for (std::size_t j = 0; j < cfg.k_schedule.size(); ++j)
        fks.push_back(verify_detail::fk_grid(cd.curve, j));
    auto sd = limsup_subdiff(cfg.k_schedule, fks, {lambda});
    double eta = std::isnan(cfg.eta_override) ? 0.5 * (sd.lo() + sd.hi()) : cfg.eta_override;
    rep.inputs["eta"] = eta;
    if (sd.divergence_warning) rep.notes.push_back("limsup witnesses show growing diameter");

    // the witness class is fixed at the largest k so the chord family (and
    // with it the boundary terms of the residual) is stable across the
    // residual-decay table
    auto battery = battery_v1(h.dim);
    std::size_t last_j = cfg.k_schedule.size() - 1;
    auto w_star = verify_detail::witness_for(cd.curve, last_j, eta);
    Chord last_chord;
    for (std::size_t j = 0; j < cfg.k_schedule.size(); ++j) {
        int k = cfg.k_schedule[j];
        verify_detail::Witness wj = w_star;
        wj.f_value = cd.curve.per_k[j][w_star.index];
        const Vec& xs = cd.curve.lambdas;
        const Vec& ys = cd.curve.per_k[j];
        if (w_star.index > 0 && w_star.index + 1 < xs.size())
            wj.slope = (ys[w_star.index + 1] - ys[w_star.index - 1]) /
                       (xs[w_star.index + 1] - xs[w_star.index - 1]);
        auto m = verify_detail::select_measure(h, wj, k, cfg,
                                               j + 1 == cfg.k_schedule.size() ? &last_chord
                                                                              : nullptr);
        rep.residual_by_k.push_back(invariance_residual(m, h, battery));
        if (j + 1 == cfg.k_schedule.size()) rep.measure = std::move(m);
    }
    rep.stats = measure_stats(rep.measure, h, battery);

    int k_max = cfg.k_schedule.back();
    double tau = last_chord.tau;
    double bar = cd.curve.err[cd.center];
    rep.gate("rho", rep.stats.rho[0], eta, tol_rho(tau, k_max));
    rep.gate("action", rep.stats.action, alpha - eta * lambda, tol_action(tau, k_max, bar));
    rep.gate("invariance", rep.stats.invariance_residual, 0.0, 8.0 / k_max);
    rep.finalize();
    return rep;
}

// ---------------------------------------------------------------------------
// Clarke corollary: barycentric realization at corners
// ---------------------------------------------------------------------------

inline TheoremReport verify_clarke_corollary(const HamiltonianModel& h, double lambda,
                                             const VerifyConfig& cfg_in = {}) {
    TheoremReport rep;
    rep.theorem_id = "maincor";
    rep.inputs["lambda"] = lambda;

    // corners live at grid scale: resolving one-sided slope clusters needs a
    // denser, narrower window than the generic pipelines use
    VerifyConfig cfg = cfg_in;
    cfg.window = std::min(cfg.window, 0.24);
    cfg.grid_points = std::max(cfg.grid_points, 25);

    auto cd = verify_detail::window_curve(h, lambda, cfg);
    double alpha = cd.curve.alpha[cd.center];
    std::vector<SampledGrid> fks;
    for (std::size_t j = 0; j < cfg.k_schedule.size(); ++j)
        fks.push_back(verify_detail::fk_grid(cd.curve, j));
    auto sd = limsup_subdiff(cfg.k_schedule, fks, {lambda});

    rep.inputs["clarke_lo"] = sd.lo();
    rep.inputs["clarke_hi"] = sd.hi();

    // corner detection: the slope samples leave an interior gap between the
    // one-sided clusters; a smooth point fills its interval quasi-densely
    Vec slopes;
    for (const auto& smp : sd.samples) slopes.push_back(smp.gradient[0]);
    std::sort(slopes.begin(), slopes.end());
    double s_lo = sd.lo(), s_hi = sd.hi();
    double gap_lo = s_lo, gap_hi = s_hi, max_gap = 0.0;
    for (std::size_t i = 0; i + 1 < slopes.size(); ++i)
        if (slopes[i + 1] - slopes[i] > max_gap) {
            max_gap = slopes[i + 1] - slopes[i];
            gap_lo = slopes[i];
            gap_hi = slopes[i + 1];
        }
    rep.inputs["slope_gap"] = max_gap;
    if (max_gap < 0.25) {
        rep.skipped = true;
        rep.skip_reason = "smooth point: slope samples leave no interior gap to exercise";
        return rep;
    }

    // realize a subgradient strictly inside the gap (so outside the limsup
    // sample set) as a barycenter of the two bounding measures
    double eta = 0.5 * (gap_lo + gap_hi);
    s_lo = gap_lo;
    s_hi = gap_hi;
    int k = cfg.k_schedule.back();
    std::size_t kj = cfg.k_schedule.size() - 1;
    auto w_lo = verify_detail::witness_for(cd.curve, kj, s_lo);
    auto w_hi = verify_detail::witness_for(cd.curve, kj, s_hi);
    Chord c_lo = verify_detail::select_chord(h, w_lo, k, cfg);
    Chord c_hi = verify_detail::select_chord(h, w_hi, k, cfg);
    double d_lo = c_lo.displacement[0] / k, d_hi = c_hi.displacement[0] / k;
    if (std::abs(d_hi - d_lo) < 1e-9) {
        rep.skipped = true;
        rep.skip_reason = "extreme measures coincide";
        return rep;
    }
    double r = std::clamp((eta - d_lo) / (d_hi - d_lo), 0.0, 1.0);
    rep.inputs["barycenter_r"] = r;
    rep.measure = barycenter({chord_measure(c_lo), chord_measure(c_hi)}, {1.0 - r, r});
    auto battery = battery_v1(h.dim);
    rep.stats = measure_stats(rep.measure, h, battery);

    double tau = c_hi.tau;
    double bar = cd.curve.err[cd.center];
    rep.gate("rho", rep.stats.rho[0], eta, tol_rho(tau, k));
    rep.gate("action", rep.stats.action, alpha - eta * lambda, tol_action(tau, k, bar) +
             std::abs(w_hi.lambda - lambda) + std::abs(w_lo.lambda - lambda));
    rep.finalize();
    return rep;
}

// ---------------------------------------------------------------------------
// Rotation gap and its KAM corollary
// ---------------------------------------------------------------------------

inline TheoremReport rotation_gap_certificate(const HamiltonianModel& h, double lambda1,
                                              double lambda2, double gap,
                                              const VerifyConfig& cfg = {}) {
    if (!(lambda2 > lambda1)) throw InvalidInput("rotation_gap: lambda2 must exceed lambda1");
    TheoremReport rep;
    rep.theorem_id = "rotation_gap";
    rep.inputs["lambda1"] = lambda1;
    rep.inputs["lambda2"] = lambda2;
    rep.inputs["gap"] = gap;

    // alpha along the whole segment
    Vec grid;
    int pts = std::max(cfg.grid_points, 25);
    for (int i = 0; i < pts; ++i)
        grid.push_back(lambda1 + (lambda2 - lambda1) * double(i) / double(pts - 1));
    HomogenizeOptions opts;
    opts.k_schedule = cfg.k_schedule;
    opts.fk.N = cfg.N;
    opts.fk.multistart.seed = cfg.seed;
    auto curve = homogenize(h, grid, opts);
    double measured_gap = curve.alpha.back() - curve.alpha.front();
    rep.inputs["alpha_gap"] = measured_gap;
    if (measured_gap < gap) {
        rep.skipped = true;
        rep.skip_reason = "alpha(lambda2) - alpha(lambda1) below the requested gap";
        return rep;
    }

    // mean value point with Clarke slope at least gap / (lambda2 - lambda1)
    auto sampled = SampledGrid::line(curve.lambdas, curve.alpha);
    auto mv = mean_value_scan(sampled, lambda1, lambda2, 0.1);
    if (!mv.found) {
        rep.skipped = true;
        rep.skip_reason = "no grid point carries the mean-value slope";
        return rep;
    }
    rep.inputs["lambda3"] = mv.lambda3;
    double slope_needed = gap / (lambda2 - lambda1);

    VerifyConfig sub = cfg;
    sub.eta_override = mv.quotient;
    auto inner = verify_main_theorem(h, mv.lambda3, sub);
    rep.measure = inner.measure;
    rep.stats = inner.stats;
    rep.notes.push_back("measure built at lambda3 = " + std::to_string(mv.lambda3));

    double pairing = rep.stats.rho[0] * (lambda2 - lambda1);
    double tol = tol_rho(1.0 / cfg.N, cfg.k_schedule.back()) * (lambda2 - lambda1) + 0.1;
    rep.gate("eta_pairing", std::min(inner.inputs["eta"] * (lambda2 - lambda1), gap), gap, tol);
    rep.gate("rho_pairing", std::min(pairing, gap), gap, tol);
    rep.notes.push_back("required slope " + std::to_string(slope_needed) + ", used " +
                        std::to_string(mv.quotient));
    rep.finalize();
    return rep;
}

/// Persistence of large rotation vectors under a C0-small perturbation of an
/// integrable model: the stated hypothesis h(a1) - h(a2) > 3 eps certifies an
/// alpha-gap of at least eps through the selector's C0-Lipschitz bound.
inline TheoremReport kam_gap(const HamiltonianModel& h_integrable, const HamiltonianModel& k_pert,
                             double eps, double a1, double a2, const VerifyConfig& cfg = {}) {
    TheoremReport rep;
    rep.theorem_id = "kam_gap";
    rep.inputs["eps"] = eps;
    rep.inputs["a1"] = a1;
    rep.inputs["a2"] = a2;

    double k_norm = 0.0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j <= 32; ++j)
            k_norm = std::max(k_norm, std::abs(k_pert.eval({double(i) / 64},
                                                           {-4.0 + 8.0 * j / 32.0}, 0.0)));
    rep.inputs["pert_norm"] = k_norm;
    if (k_norm > eps + 1e-12) {
        rep.skipped = true;
        rep.skip_reason = "perturbation exceeds eps in C0 norm";
        return rep;
    }
    double h1 = h_integrable.eval({0.0}, {a1}, 0.0), h2 = h_integrable.eval({0.0}, {a2}, 0.0);
    rep.inputs["h_gap"] = h1 - h2;
    if (!(h1 - h2 > 3.0 * eps)) {
        rep.skipped = true;
        rep.skip_reason = "hypothesis h(a1) - h(a2) > 3 eps fails";
        return rep;
    }

    PerturbedFamily fam;
    fam.base = h_integrable;
    fam.directions = {k_pert};
    auto model = perturbed_eval(fam, {1.0});

    // the selector moves at most eps under the perturbation, so the gap
    // certified without recomputing alpha is (h1 - h2) - 2 eps >= eps; the
    // sharper measured bound is recorded alongside
    double certified = (h1 - h2) - 2.0 * eps;
    rep.inputs["certified_gap"] = certified;

    double lo = std::min(a1, a2), hi = std::max(a1, a2);
    auto inner = rotation_gap_certificate(model, lo, hi, eps, cfg);
    if (inner.skipped) {
        rep.skipped = true;
        rep.skip_reason = "inner rotation-gap certificate: " + inner.skip_reason;
        return rep;
    }
    rep.measure = inner.measure;
    rep.stats = inner.stats;
    rep.notes = inner.notes;
    rep.notes.push_back("alpha-increasing direction pairing; the statement's sign convention "
                        "pairs rho with a2 - a1");
    rep.notes.push_back("sharper internal bound: measured alpha gap " +
                        std::to_string(inner.inputs.at("alpha_gap")) + " - 2 eps");
    double pairing = rep.stats.rho[0] * (hi - lo);
    rep.gate("rho_pairing", std::min(pairing, eps), eps,
             inner.tolerances.at("rho_pairing"));
    rep.finalize();
    return rep;
}

// ---------------------------------------------------------------------------
// Localization (perturbation by compactly supported directions)
// ---------------------------------------------------------------------------

/// E(lambda) = alpha of the perturbed family at class 0. Each subgradient
/// coordinate is realized as the average of the corresponding direction
/// against the constructed measure.
inline TheoremReport localize(const HamiltonianModel& h,
                              const std::vector<HamiltonianModel>& directions,
                              const VerifyConfig& cfg = {}, double box = 0.12,
                              int box_points = 9) {
    if (directions.empty() || directions.size() > 2)
        throw InvalidInput("localize: one or two directions");
    TheoremReport rep;
    rep.theorem_id = "local";
    PerturbedFamily fam;
    fam.base = h;
    fam.directions = directions;
    const std::size_t L = directions.size();
    const int k_last = cfg.k_schedule.back();

    // E on a 1-d box per direction through 0 (the mixed derivative is not
    // needed for the first-order statement)
    FkOptions fko;
    fko.N = cfg.N;
    fko.multistart.seed = cfg.seed;
    Vec eta(L, 0.0);
    Vec witness_lambda(L, 0.0);
    for (std::size_t d = 0; d < L; ++d) {
        Vec xs, e_vals;
        for (int j = 0; j < box_points; ++j) {
            double t = -box + 2.0 * box * double(j) / double(box_points - 1);
            Vec lam(L, 0.0);
            lam[d] = t;
            auto member = perturbed_eval(fam, lam);
            xs.push_back(t);
            e_vals.push_back(compute_fk(member, {0.0}, k_last, fko));
        }
        auto grid = SampledGrid::line(xs, e_vals);
        auto sd = clarke_subdiff(grid, {0.0}, {box * 0.9, box * 0.45});
        eta[d] = 0.5 * (sd.lo() + sd.hi());
        // witness: the sample nearest 0 realizes the subgradient here (E is
        // built from the k_last selector already)
        witness_lambda[d] = 0.0;
        rep.inputs["eta_" + std::to_string(d)] = eta[d];
    }

    // measure from the selected chord of the unperturbed member at class 0
    auto member0 = perturbed_eval(fam, Vec(L, 0.0));
    double f0 = compute_fk(member0, {0.0}, k_last, fko);
    ExtractOptions eo;
    eo.N = cfg.N;
    eo.multistart.seed = cfg.seed;
    auto chords = extract_chords(member0, {0.0}, k_last, f0, std::max(1e-6, 2e-4 * k_last), eo);
    rep.measure = chord_measure(chords.front());
    auto battery = battery_v1(h.dim);
    rep.stats = measure_stats(rep.measure, h, battery);

    for (std::size_t d = 0; d < L; ++d) {
        double avg = 0.0;
        for (const auto& a : rep.measure.atoms)
            avg += a.weight * directions[d].eval(a.z.q_lift, a.z.p, 0.0);
        rep.gate("K_avg_" + std::to_string(d), avg, eta[d],
                 tol_rho(1.0 / cfg.N, k_last) + 2e-2);
    }
    rep.finalize();
    return rep;
}

// ---------------------------------------------------------------------------
// Nonautonomous theorem through the suspension trick
// ---------------------------------------------------------------------------

inline TheoremReport verify_nonautonomous(const HamiltonianModel& h, double lambda,
                                          const VerifyConfig& cfg = {}) {
    TheoremReport rep;
    rep.theorem_id = "nonautonomous";
    rep.inputs["lambda"] = lambda;

    auto cd = verify_detail::window_curve(h, lambda, cfg);
    double alpha = cd.curve.alpha[cd.center];
    std::vector<SampledGrid> fks;
    for (std::size_t j = 0; j < cfg.k_schedule.size(); ++j)
        fks.push_back(verify_detail::fk_grid(cd.curve, j));
    auto sd = limsup_subdiff(cfg.k_schedule, fks, {lambda});
    double eta = std::isnan(cfg.eta_override) ? 0.5 * (sd.lo() + sd.hi()) : cfg.eta_override;
    rep.inputs["eta"] = eta;

    int k = cfg.k_schedule.back();
    std::size_t kj = cfg.k_schedule.size() - 1;
    auto w = verify_detail::witness_for(cd.curve, kj, eta);
    Chord c = verify_detail::select_chord(h, w, k, cfg);
    auto nu = chord_measure(c, true);
    auto battery = battery_v1(h.dim);
    auto red = suspend_and_reduce(nu, h, battery, c.tau);
    rep.measure = red.m;
    rep.notes.push_back("suspension marginal defect " + std::to_string(red.marginal_defect));
    rep.notes.push_back("reduction identity defect " + std::to_string(red.identity_defect));

    rep.stats.rho = rotation_vector_nonaut(red.m, h, c.tau);
    rep.stats.action = action_nonaut(red.m, h, c.tau);
    rep.stats.invariance_residual = push_forward_defect(red.m, h, 1.0, battery, c.tau);
    rep.stats.closedness_residual = closedness_residual(red.m, h);

    double bar = cd.curve.err[cd.center];
    rep.gate("rho", rep.stats.rho[0], eta, tol_rho(c.tau, k));
    rep.gate("action", rep.stats.action, alpha - eta * lambda, tol_action(c.tau, k, bar));
    rep.gate("pushforward", rep.stats.invariance_residual, 0.0, 8.0 / k);
    rep.finalize();
    return rep;
}

}  // namespace symhom
