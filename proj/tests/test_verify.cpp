#include "doctest.h"

#include <cmath>

#include "symhom/verify.hpp"

using namespace symhom;

namespace {
VerifyConfig small_cfg() {
    VerifyConfig cfg;
    cfg.k_schedule = {2, 4, 8};
    cfg.grid_points = 13;
    cfg.window = 0.4;
    return cfg;
}
}  // namespace

TEST_CASE("main theorem on the double well at lambda 0") {
    auto h = models::doublewell_p(0.0);
    auto rep = verify_main_theorem(h, 0.0, small_cfg());
    CHECK(rep.pass);
    // eta = h'(0) = 0, measure on {p = 0}, action = alpha(0) = 1/4
    CHECK(std::abs(rep.inputs.at("eta")) < 0.05);
    CHECK(rep.measured.at("action") == doctest::Approx(0.25).epsilon(0.05));
    for (const auto& a : rep.measure.atoms) CHECK(std::abs(a.z.p[0]) < 1e-6);
}

TEST_CASE("main theorem on the pendulum inside the flat part") {
    auto h = models::pendulum(1.0);
    auto rep = verify_main_theorem(h, 0.5, small_cfg());
    CHECK(rep.pass);
    CHECK(std::abs(rep.inputs.at("eta")) < 0.05);
    CHECK(rep.measured.at("action") == doctest::Approx(1.0).epsilon(0.05));
    // the measure concentrates at the hyperbolic fixed point
    double mass_near = 0.0;
    for (const auto& a : rep.measure.atoms)
        if (torus_dist(a.z.q, {0.0}) < 0.05 && std::abs(a.z.p[0]) < 0.1) mass_near += a.weight;
    CHECK(mass_near > 0.8);
}

TEST_CASE("main theorem on the rotating pendulum branch") {
    auto h = models::pendulum(1.0);
    static TwistOracle oracle(models::pendulum(1.0), [] {
        TwistOracleSettings s;
        s.rho_max = 4.0;
        return s;
    }());
    auto rep = verify_main_theorem(h, 2.0, small_cfg());
    CHECK(rep.pass);
    // eta tracks the oracle slope of alpha at 2
    double fd = 1e-3;
    double slope = (oracle.alpha(2.0 + fd) - oracle.alpha(2.0 - fd)) / (2 * fd);
    CHECK(rep.inputs.at("eta") == doctest::Approx(slope).epsilon(0.08));
    CHECK(rep.residual_by_k.size() == 3);
    CHECK(rep.residual_by_k[2] < rep.residual_by_k[0]);
}

TEST_CASE("clarke corollary at the pendulum corner, skip at smooth points") {
    auto h = models::pendulum(1.0);
    const double corner = 4.0 / 3.14159265358979323846;
    VerifyConfig cfg = small_cfg();
    auto rep = verify_clarke_corollary(h, corner, cfg);
    CHECK_FALSE(rep.skipped);
    CHECK(rep.pass);
    CHECK(rep.inputs.at("clarke_lo") < 0.25);
    CHECK(rep.inputs.at("clarke_hi") > 0.8);

    auto smooth = verify_clarke_corollary(h, 2.5, cfg);
    CHECK(smooth.skipped);
}

TEST_CASE("rotation gap certificate on free motion") {
    auto h = models::integrable({0.0, 0.0, 0.5});
    auto rep = rotation_gap_certificate(h, 0.0, 2.0, 2.0, small_cfg());
    CHECK_FALSE(rep.skipped);
    CHECK(rep.pass);
    CHECK(rep.stats.rho[0] >= 0.9);  // slope at lambda3 is at least 1

    auto flat = rotation_gap_certificate(models::pendulum(1.0), 0.0, 0.5, 0.5, small_cfg());
    CHECK(flat.skipped);  // flat segment: no alpha gap
}

TEST_CASE("kam gap certificate") {
    auto h = models::integrable({0.0, 0.0, 0.5});
    auto bump = models::bump(0.5, 0.5, 0.25, 0.6, 0.05);

    SUBCASE("certifies the stated gap") {
        auto rep = kam_gap(h, bump, 0.05, 1.0, 0.0, small_cfg());
        CHECK_FALSE(rep.skipped);
        CHECK(rep.pass);
        CHECK(rep.inputs.at("certified_gap") >= 0.05);
    }
    SUBCASE("gate rejects a too-small hypothesis gap") {
        auto rep = kam_gap(h, bump, 0.05, std::sqrt(2.0 * 0.10), 0.0, small_cfg());
        CHECK(rep.skipped);  // h(a1) - h(a2) = 0.10 = 2 eps < 3 eps
    }
    SUBCASE("eps = 0 reduces to the rotation gap") {
        HamiltonianModel zero;
        zero.dim = 1;
        zero.name = "zero";
        zero.eval = [](const Vec&, const Vec&, double) { return 0.0; };
        zero.grad_q = [](const Vec&, const Vec&, double) { return Vec{0.0}; };
        zero.grad_p = [](const Vec&, const Vec&, double) { return Vec{0.0}; };
        auto rep = kam_gap(h, zero, 0.0, 1.0, 0.0, small_cfg());
        // gap certificate with eps = 0 holds trivially when alpha increases
        CHECK_FALSE(rep.skipped);
    }
}

TEST_CASE("localization with one bump at the hyperbolic fixed point") {
    auto h = models::pendulum(1.0);
    auto k1 = models::bump(0.0, 0.0, 0.25, 1.2, 1.0);
    VerifyConfig cfg = small_cfg();
    auto rep = localize(h, {k1}, cfg);
    CHECK(rep.pass);
    // the selected measure is the Dirac at (0,0): eta_1 = K_1(0,0) = 1
    CHECK(rep.inputs.at("eta_0") == doctest::Approx(1.0).epsilon(0.05));
    CHECK(rep.measured.at("K_avg_0") == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("localization with a second disjoint bump reports a zero coordinate") {
    auto h = models::pendulum(1.0);
    auto k1 = models::bump(0.0, 0.0, 0.25, 1.2, 1.0);
    auto k2 = models::bump(0.5, 2.0, 0.12, 1.0, 1.0);  // away from the selected chord
    auto rep = localize(h, {k1, k2}, small_cfg());
    CHECK(rep.pass);
    CHECK(std::abs(rep.inputs.at("eta_1")) < 0.02);
    CHECK(std::abs(rep.measured.at("K_avg_1")) < 0.02);
}

TEST_CASE("nonautonomous pipeline is consistent with the autonomous one") {
    auto h = models::pendulum(1.0);  // autonomous model fed through the suspension
    VerifyConfig cfg = small_cfg();
    auto na = verify_nonautonomous(h, 0.5, cfg);
    CHECK(na.pass);
    auto direct = verify_main_theorem(h, 0.5, cfg);
    CHECK(std::abs(na.measured.at("rho") - direct.measured.at("rho")) < 0.05);
    CHECK(std::abs(na.measured.at("action") - direct.measured.at("action")) < 0.05);
}

TEST_CASE("nonautonomous pipeline on the kicked model") {
    auto h = models::kicked(0.1);
    VerifyConfig cfg = small_cfg();
    auto rep = verify_nonautonomous(h, 1.5, cfg);
    CHECK(rep.pass);
    CHECK(rep.measured.at("pushforward") <= rep.tolerances.at("pushforward"));
}
