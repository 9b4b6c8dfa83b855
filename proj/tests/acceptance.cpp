// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fails. Tolerances are pinned here, not calibrated at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "symhom/io.hpp"
#include "symhom/measures.hpp"
#include "symhom/oracle.hpp"
#include "symhom/spectral.hpp"
#include "symhom/subdiff.hpp"
#include "symhom/verify.hpp"

using namespace symhom;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

std::string fmt(double x) { return io::fmt(x); }

// --- 1: calibration fixture --------------------------------------------------

void criterion_1() {
    double t0 = now_seconds();
    auto h = models::integrable({0.0, 1.0, 0.5});
    Vec grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(-2.0 + 0.2 * i);
    HomogenizeOptions opts;
    opts.k_schedule = {16};
    opts.fk.N = 16;
    auto curve = homogenize(h, grid, opts);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::abs(curve.alpha[i] - (grid[i] + 0.5 * grid[i] * grid[i])));
    double dt = now_seconds() - t0;
    bool pass = worst <= 1e-3 && dt <= 60.0 && curve.convention == "flip";
    report(1, "calibration h = p + p^2/2", pass,
           "max err " + fmt(worst) + " (tol 1e-3), runtime " + fmt(dt) + "s (limit 60), orientation "
           + curve.convention);
}

// --- 2: Tonelli oracle equivalence -------------------------------------------

void criterion_2() {
    auto h = models::pendulum(1.0);
    TwistOracleSettings os;
    os.rho_max = 4.6;
    TwistOracle oracle(models::pendulum(1.0), os);
    Vec grid;
    for (int i = 0; i < 41; ++i) grid.push_back(-3.0 + 6.0 * i / 40.0);
    HomogenizeOptions opts;
    opts.k_schedule = {2, 4, 8};
    auto curve = homogenize(h, grid, opts);
    double worst = 0.0, flat_worst = 0.0;
    const double edge = 0.95 * 4.0 / 3.14159265358979323846;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        worst = std::max(worst, std::abs(curve.alpha[i] - oracle.alpha(grid[i])));
        if (std::abs(grid[i]) <= edge)
            flat_worst = std::max(flat_worst, std::abs(curve.alpha[i] - 1.0));
    }
    bool pass = worst <= 2e-2 && flat_worst <= 2e-2;
    report(2, "pendulum vs twist oracle", pass,
           "max |alpha - oracle| " + fmt(worst) + " (tol 2e-2), flat defect " + fmt(flat_worst));
}

// --- 3: non-convexity preserved ----------------------------------------------

void criterion_3() {
    auto h = models::doublewell_p(0.0);
    Vec grid;
    for (int i = 0; i <= 12; ++i) grid.push_back(-1.5 + 0.25 * i);
    HomogenizeOptions opts;
    opts.k_schedule = {2, 4};
    auto curve = homogenize(h, grid, opts);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double w = grid[i] * grid[i] - 1.0;
        worst = std::max(worst, std::abs(curve.alpha[i] - 0.25 * w * w));
    }
    double at0 = curve.alpha[6];
    bool pass = worst <= 1e-2 && std::abs(at0 - 0.25) <= 1e-2 && at0 > 0.1;
    report(3, "double well keeps alpha(0) = 1/4", pass,
           "pointwise err " + fmt(worst) + " (tol 1e-2), alpha(0) = " + fmt(at0) +
           " vs convexified 0");
}

// --- 4: main theorem end to end ----------------------------------------------

void criterion_4() {
    struct Case {
        HamiltonianModel h;
        double lambda;
        const char* tag;
    };
    std::vector<Case> cases = {{models::pendulum(1.0), 0.5, "pendulum@0.5"},
                               {models::pendulum(1.0), 2.0, "pendulum@2.0"},
                               {models::doublewell_p(0.0), 0.0, "doublewell@0"},
                               {models::doublewell_p(0.0), 1.0, "doublewell@1"}};
    bool pass = true;
    std::string detail;
    for (auto& c : cases) {
        VerifyConfig cfg;
        cfg.k_schedule = {4, 8, 16};
        cfg.grid_points = 13;
        cfg.window = 0.4;
        auto rep = verify_main_theorem(c.h, c.lambda, cfg);
        bool halving = true;
        for (std::size_t j = 0; j + 1 < rep.residual_by_k.size(); ++j) {
            double a = rep.residual_by_k[j], b = rep.residual_by_k[j + 1];
            if (a < 1e-8 && b < 1e-8) continue;  // exact invariant measure
            double ratio = a / std::max(b, 1e-300);
            if (ratio < 1.6 || ratio > 2.4) halving = false;
        }
        pass = pass && rep.pass && halving;
        detail += std::string(c.tag) + (rep.pass ? " ok" : " GATE-FAIL") +
                  (halving ? "" : " HALVING-FAIL") + " |rho-eta|=" +
                  fmt(std::abs(rep.measured.at("rho") - rep.predicted.at("rho"))) + " ";
    }
    report(4, "main theorem pipelines", pass, detail);
}

// --- 5: inclusion property suite ----------------------------------------------

void criterion_5() {
    struct Fixture {
        HamiltonianModel h;
        double lo, hi;
        int pts;
        const char* tag;
    };
    std::vector<Fixture> fixtures = {
        {models::integrable({0.0, 1.0, 0.5}), -2.0, 2.0, 33, "integrable"},
        {models::pendulum(1.0), -3.0, 3.0, 61, "pendulum"},
        {models::doublewell_p(0.0), -1.5, 1.5, 49, "doublewell"}};
    const int k = 8;
    int violations = 0, checks = 0;
    double tight_hull = 0.0;  // guards against a vacuous test at smooth points
    for (auto& fx : fixtures) {
        Vec grid;
        for (int i = 0; i < fx.pts; ++i)
            grid.push_back(fx.lo + (fx.hi - fx.lo) * double(i) / double(fx.pts - 1));
        HomogenizeOptions opts;
        opts.k_schedule = {k};
        auto curve = homogenize(fx.h, grid, opts);
        auto fk = SampledGrid::line(curve.lambdas, curve.per_k[0]);
        double spacing = (fx.hi - fx.lo) / double(fx.pts - 1);
        double r_outer = 2.2 * spacing;
        for (std::size_t i = 2; i + 2 < grid.size(); ++i) {
            double lam0 = grid[i];
            auto sd = clarke_subdiff(fk, {lam0}, {r_outer, 1.1 * spacing});
            double l_loc = 0.0;
            for (const auto& s : sd.samples) l_loc = std::max(l_loc, std::abs(s.gradient[0]));
            // the sampled estimate sees d f over the whole annulus, so the
            // level window covers the value spread of every branch visible
            // there, and the margin absorbs the measured slope curvature
            double curv = 0.0;
            for (std::size_t j2 = std::max<std::size_t>(i, 2) - 2; j2 + 1 < std::min(grid.size() - 1, i + 3); ++j2)
                curv = std::max(curv, std::abs(curve.per_k[0][j2 + 1] - 2 * curve.per_k[0][j2] +
                                               curve.per_k[0][j2 > 0 ? j2 - 1 : 0]) /
                                          (spacing * spacing));
            auto w = build_discrete_action(fx.h, OneFormClass(-lam0), k, 16);
            double delta = k * (l_loc + 0.1) * 2.5 * r_outer + 5e-3 * k;
            MultistartSpec ms;
            ms.count = 32 + 12 * k * (1 + int(std::ceil(std::abs(lam0))));
            auto cls = critical_level_set(w, {lam0}, curve.per_k[0][i], delta, ms);
            double margin = 0.08 + 10.0 * w.tau + 0.5 * r_outer * std::min(curv, 4.0);
            auto repi = inclusion_check(w, {lam0}, sd, cls, margin);
            ++checks;
            if (!repi.pass) ++violations;
            if (std::abs(lam0) > 2.0)  // smooth rotating region
                tight_hull = std::max(tight_hull, repi.hull_hi - repi.hull_lo);
        }
    }
    bool pass = violations == 0 && tight_hull < 1.2;
    report(5, "subdifferential inclusion over the level sets", pass,
           std::to_string(violations) + " violation(s) in " + std::to_string(checks) +
           " checks; smooth-region hull width " + fmt(tight_hull));
}

// --- 6: adiabatic decay --------------------------------------------------------

void criterion_6() {
    auto h = models::integrable({0.0, 0.0, 0.5});
    const double lam_inf = 0.6180339887498949;
    auto battery = battery_v1(1);
    // reference: dense uniform measure on the limit circle
    EmpiricalMeasure limit;
    const int n_ref = 1024;
    for (int i = 0; i < n_ref; ++i)
        limit.atoms.push_back({CotangentPoint({(i + 0.5) / n_ref}, {lam_inf}), -1.0, 1.0 / n_ref});

    std::vector<int> ks = {8, 16, 32, 64, 128};
    Vec dists;
    for (int k : ks) {
        CotangentPoint x0({0.2}, {lam_inf + 1.0 / k});
        auto tr = integrate_flow(h, x0, 0.0, double(k), 1.0 / 32);
        EmpiricalMeasure nu;
        std::size_t count = tr.points.size() - 1;
        for (std::size_t i = 0; i < count; ++i)
            nu.atoms.push_back({tr.points[i], -1.0, 1.0 / double(count)});
        dists.push_back(battery_distance(nu, limit, battery));
    }
    // least-squares slope of log d against log k
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        double x = std::log(double(ks[i])), y = std::log(dists[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    double n = double(ks.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double exponent = -slope;
    double cmax = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) cmax = std::max(cmax, dists[i] * ks[i]);
    bool pass = exponent >= 0.8 && exponent <= 1.2;
    std::string ds;
    for (double d : dists) ds += fmt(d) + " ";
    report(6, "adiabatic battery decay", pass,
           "exponent " + fmt(exponent) + " (want [0.8,1.2]), C = max k d(k) = " + fmt(cmax) +
           ", d = " + ds);
}

// --- 7: suspension round trips --------------------------------------------------

void criterion_7() {
    auto battery = battery_v1(1);
    bool pass = true;
    std::string detail;

    // autonomous as periodic: round trip recovers the direct measure
    {
        auto h = models::pendulum(1.0);
        VerifyConfig cfg;
        cfg.k_schedule = {2, 4, 8};
        cfg.grid_points = 13;
        cfg.window = 0.4;
        auto direct = verify_main_theorem(h, 0.5, cfg);
        auto nu = suspend_measure(direct.measure, h, 16, 1.0 / 64);
        auto red = suspend_and_reduce(nu, h, battery, 1.0 / 64);
        double disc = battery_distance(red.m, direct.measure, battery);
        pass = pass && disc <= 1e-3;
        detail += "roundtrip moment gap " + fmt(disc) + " (tol 1e-3); ";
    }

    // kicked model: reduced measure is nearly invariant under the time-1 map
    {
        auto h = models::kicked(0.1);
        Vec defects;
        for (int k : {4, 8}) {
            double fk = compute_fk(h, {1.5}, k);
            auto chords = extract_chords(h, {1.5}, k, fk, 1e-6);
            auto nu = chord_measure(chords.front(), true);
            auto red = suspend_and_reduce(nu, h, battery, chords.front().tau);
            defects.push_back(push_forward_defect(red.m, h, 1.0, battery, chords.front().tau));
        }
        bool decays = defects[1] < 0.9 * defects[0];
        bool bounded = defects[0] <= 4.0 / 4.0 && defects[1] <= 4.0 / 8.0;
        pass = pass && decays && bounded;
        detail += "kicked pushforward defects " + fmt(defects[0]) + " -> " + fmt(defects[1]) +
                  " (bound 4/k)";
    }
    report(7, "suspension reduction round trips", pass, detail);
}

// --- 8: localization -------------------------------------------------------------

void criterion_8() {
    auto h = models::pendulum(1.0);
    auto k1 = models::bump(0.0, 0.0, 0.25, 1.2, 1.0);
    auto k2 = models::bump(0.5, 2.0, 0.12, 1.0, 1.0);
    VerifyConfig cfg;
    cfg.k_schedule = {4, 8};
    auto rep = localize(h, {k1, k2}, cfg);
    double err1 = std::abs(rep.measured.at("K_avg_0") - rep.inputs.at("eta_0"));
    double eta2 = std::abs(rep.inputs.at("eta_1"));
    double avg2 = std::abs(rep.measured.at("K_avg_1"));
    bool pass = rep.pass && err1 <= 1e-2 && eta2 <= 1e-2 && avg2 <= 1e-2;
    report(8, "localization with two disjoint bumps", pass,
           "|int K1 dm - eta_1| = " + fmt(err1) + ", eta_2 = " + fmt(eta2) + ", int K2 dm = " +
           fmt(avg2) + " (tol 1e-2); eta_1 = " + fmt(rep.inputs.at("eta_0")));
}

// --- 9: selector property suite ---------------------------------------------------

void criterion_9() {
    bool pass = true;
    std::string detail;

    // iterate homogeneity
    {
        auto integ = models::integrable({0.0, 1.0, 0.5});
        auto r1 = compute_fk_full(integ, {0.8}, 2);
        auto r2 = compute_fk_full(integ, {0.8}, 4);
        double gap_i = std::abs(r2.sv.value - 2.0 * r1.sv.value);
        auto pend = models::pendulum(1.0);
        auto p1 = compute_fk_full(pend, {0.0}, 2);
        auto p2 = compute_fk_full(pend, {0.0}, 4);
        double gap_p0 = std::abs(p2.sv.value - 2.0 * p1.sv.value);
        auto q1 = compute_fk_full(pend, {2.0}, 4);
        auto q2 = compute_fk_full(pend, {2.0}, 8);
        double gap_rot = std::abs(q2.fk - q1.fk);  // f-units, bound 1/k
        bool ok = gap_i <= 1e-6 && gap_p0 <= 1e-6 && gap_rot <= 1.0 / 4.0;
        pass = pass && ok;
        detail += "homogeneity gaps " + fmt(gap_i) + " / " + fmt(gap_p0) + " / rot " +
                  fmt(gap_rot) + "; ";
    }

    // Oh-Lipschitz over 100 random perturbation pairs
    {
        Rng rng(2024);
        double worst_margin = -1e300;
        int count = 0;
        for (int trial = 0; trial < 50; ++trial) {
            for (const auto& base :
                 {models::integrable({0.0, 0.0, 0.5}), models::pendulum(1.0)}) {
                double lam = rng.uniform(-1.2, 1.2);
                double a = rng.uniform(-0.04, 0.04), b = rng.uniform(-0.04, 0.04);
                HamiltonianModel hp = base;
                HamiltonianModel src = base;
                hp.eval = [src, a, b](const Vec& q, const Vec& p, double t) {
                    return src.eval(q, p, t) + a * std::cos(kTwoPi * q[0]) +
                           b * std::sin(kTwoPi * q[0]);
                };
                hp.grad_q = [src, a, b](const Vec& q, const Vec& p, double t) {
                    Vec g = src.grad_q(q, p, t);
                    g[0] += kTwoPi * (-a * std::sin(kTwoPi * q[0]) + b * std::cos(kTwoPi * q[0]));
                    return g;
                };
                double f0 = compute_fk(base, {lam}, 1);
                double f1 = compute_fk(hp, {lam}, 1);
                worst_margin = std::max(worst_margin,
                                        std::abs(f1 - f0) - std::sqrt(a * a + b * b));
                ++count;
                if (count >= 100) break;
            }
            if (count >= 100) break;
        }
        bool ok = worst_margin <= 1e-5;
        pass = pass && ok;
        detail += "Oh margin over " + std::to_string(count) + " pairs: " + fmt(worst_margin) + "; ";
    }

    // displaceable bump decay
    {
        auto rep = property_suite_mvz(models::integrable({0.0, 0.0, 0.5}), 0.0, 2, 0, 5);
        pass = pass && rep.displaceable_decays;
        std::string ds;
        for (double d : rep.displaceable_fk) ds += fmt(d) + " ";
        detail += "displaceable |f_k| = " + ds + "(bound 2 max|H|/k)";
    }
    report(9, "selector properties (homogeneity, Oh bound, displaceability)", pass, detail);
}

// --- 10: Clarke unit oracle ---------------------------------------------------------

void criterion_10() {
    Vec xs, ys_abs, ys_sq;
    for (int i = 0; i <= 4000; ++i) {
        double x = -2.0 + 4.0 * i / 4000.0;
        xs.push_back(x);
        ys_abs.push_back(std::abs(x));
        ys_sq.push_back(0.5 * x * x);
    }
    auto sd_abs = clarke_subdiff(SampledGrid::line(xs, ys_abs), {0.0}, {0.05, 0.01});
    auto sd_sq = clarke_subdiff(SampledGrid::line(xs, ys_sq), {1.0}, {0.05, 0.01});
    double err_abs = std::max(std::abs(sd_abs.lo() + 1.0), std::abs(sd_abs.hi() - 1.0));
    double err_sq = std::max(std::abs(sd_sq.lo() - 1.0), std::abs(sd_sq.hi() - 1.0));
    bool pass = err_abs <= 1e-3 && err_sq <= 1e-3;
    report(10, "Clarke unit oracle", pass,
           "|ends of d|x||(0) -/+ 1| = " + fmt(err_abs) + ", smooth singleton err = " +
           fmt(err_sq) + " (tol 1e-3)");
}

}  // namespace

int main() {
    std::printf("acceptance suite (conventions: orientation=%s)\n",
                calibrated_orientation().tag().c_str());
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("%s (%d failure(s), %.1fs total)\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
                g_failures, now_seconds());
    return g_failures == 0 ? 0 : 1;
}
