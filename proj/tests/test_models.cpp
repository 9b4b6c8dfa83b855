#include "doctest.h"

#include <cmath>

#include "symhom/models.hpp"

using namespace symhom;

TEST_CASE("cotangent point keeps lift and representative consistent") {
    CotangentPoint z({1.75, -0.25}, {0.3, 0.4});
    CHECK(z.q[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(z.q[1] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(z.lift_consistent());
    CHECK_THROWS_AS(CotangentPoint({0.0}, {0.0, 0.0}), InvalidInput);
}

TEST_CASE("model zoo passes the gradient contract") {
    for (const auto& m : {models::pendulum(1.0), models::doublewell_p(0.05),
                          models::integrable({0.0, 1.0, 0.5}), models::kicked(0.1),
                          models::bump(0.5, 3.0, 0.1, 0.1, 0.2), models::integrable2d(1.0, 2.0)}) {
        CHECK_NOTHROW(validate_model(m));
    }
}

TEST_CASE("registry builds models from name and parameters") {
    auto m = make_model("pendulum", {{"amplitude", 0.7}});
    CHECK(m.eval({0.0}, {0.0}, 0.0) == doctest::Approx(0.7));
    CHECK_THROWS_AS(make_model("nonsense", {}), InvalidInput);
}

TEST_CASE("tabulated model approximates its source and satisfies the contract") {
    // sample the pendulum on a grid and rebuild it through the spline
    auto src = models::pendulum(1.0);
    std::size_t nq = 48, np = 48;
    std::vector<Vec> vals(nq, Vec(np));
    for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t j = 0; j < np; ++j) {
            double q = double(i) / nq;
            double p = -3.0 + 6.0 * double(j) / (np - 1);
            vals[i][j] = src.eval({q}, {p}, 0.0);
        }
    models::TabulatedModel tab(vals, -3.0, 3.0);
    auto m = tab.model();
    CHECK_NOTHROW(validate_model(m));
    CHECK(m.eval({0.3}, {1.1}, 0.0) == doctest::Approx(src.eval({0.3}, {1.1}, 0.0)).epsilon(1e-3));
}

TEST_CASE("shift_by_form substitutes the fiber variable") {
    auto h = models::integrable({0.0, 0.0, 0.5});  // p^2/2

    SUBCASE("zero shift is the identity") {
        auto k = shift_by_form(h, OneFormClass(0.0));
        CHECK(k.eval({0.2}, {1.3}, 0.0) == doctest::Approx(h.eval({0.2}, {1.3}, 0.0)));
    }
    SUBCASE("unit shift gives (p-1)^2/2") {
        auto k = shift_by_form(h, OneFormClass(1.0));
        CHECK(k.eval({0.0}, {0.0}, 0.0) == doctest::Approx(0.5));
        CHECK(k.eval({0.0}, {1.0}, 0.0) == doctest::Approx(0.0));
    }
    SUBCASE("double well shifted by 0.5 against direct substitution") {
        auto dw = models::doublewell_p(0.0);
        auto k = shift_by_form(dw, OneFormClass(0.5));
        Rng rng(3);
        for (int s = 0; s < 100; ++s) {
            double q = rng.uniform(), p = rng.uniform(-2.0, 2.0);
            double w = (p - 0.5) * (p - 0.5) - 1.0;
            CHECK(k.eval({q}, {p}, 0.0) == doctest::Approx(0.25 * w * w).epsilon(1e-12));
        }
    }
    SUBCASE("dimension mismatch rejected") {
        CHECK_THROWS_AS(shift_by_form(h, OneFormClass(Vec{1.0, 2.0})), InvalidInput);
    }
}

TEST_CASE("hamiltonian vector field") {
    auto free = models::integrable({0.0, 0.0, 0.5});
    auto [qd, pd] = hamiltonian_vector_field(free, CotangentPoint({0.1}, {2.0}));
    CHECK(qd[0] == doctest::Approx(2.0));
    CHECK(pd[0] == doctest::Approx(0.0));

    // H = cos(2 pi q) at q = 1/4: pdot = 2 pi sin(pi/2) = 2 pi
    HamiltonianModel cosq;
    cosq.dim = 1;
    cosq.name = "cosq";
    cosq.eval = [](const Vec& q, const Vec&, double) { return std::cos(kTwoPi * q[0]); };
    cosq.grad_q = [](const Vec& q, const Vec&, double) { return Vec{-kTwoPi * std::sin(kTwoPi * q[0])}; };
    cosq.grad_p = [](const Vec&, const Vec&, double) { return Vec{0.0}; };
    auto [qd2, pd2] = hamiltonian_vector_field(cosq, CotangentPoint({0.25}, {0.7}));
    CHECK(qd2[0] == doctest::Approx(0.0));
    CHECK(pd2[0] == doctest::Approx(kTwoPi));

    // pendulum at a generic point against finite differences of eval
    auto pend = models::pendulum(1.0);
    CotangentPoint z({0.1}, {0.3});
    auto [qd3, pd3] = hamiltonian_vector_field(pend, z);
    const double fd = 1e-6;
    double dq = (pend.eval({0.1 + fd}, {0.3}, 0) - pend.eval({0.1 - fd}, {0.3}, 0)) / (2 * fd);
    double dp = (pend.eval({0.1}, {0.3 + fd}, 0) - pend.eval({0.1}, {0.3 - fd}, 0)) / (2 * fd);
    CHECK(qd3[0] == doctest::Approx(dp).epsilon(1e-6));
    CHECK(pd3[0] == doctest::Approx(-dq).epsilon(1e-6));
}

TEST_CASE("free motion integrates exactly") {
    auto h = models::integrable({0.0, 0.0, 0.5});
    auto tr = integrate_flow(h, CotangentPoint({0.0}, {1.0}), 0.0, 1.0, 1.0 / 64);
    CHECK(tr.back().q_lift[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(tr.back().p[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr.back().q[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fixed point of the pendulum stays put") {
    auto h = models::pendulum(1.0);
    auto tr = integrate_flow(h, CotangentPoint({0.0}, {0.0}), 0.0, 5.0, 1e-2);
    CHECK(std::abs(tr.back().q_lift[0]) < 1e-12);
    CHECK(std::abs(tr.back().p[0]) < 1e-12);
}

TEST_CASE("pendulum rotation period matches the quadrature oracle") {
    // E = 1.5 orbit of p^2/2 + cos(2 pi q); period T(E) = int_0^1 dq / sqrt(2(E - cos 2 pi q))
    const double E = 1.5;
    auto h = models::pendulum(1.0);
    long nq = 20000;  // composite midpoint; integrand smooth and periodic
    double period = 0.0;
    for (long i = 0; i < nq; ++i) {
        double q = (i + 0.5) / double(nq);
        period += 1.0 / std::sqrt(2.0 * (E - std::cos(kTwoPi * q)));
    }
    period /= double(nq);

    double p0 = std::sqrt(2.0 * (E - 1.0));
    auto tr = integrate_flow(h, CotangentPoint({0.0}, {p0}), 0.0, 3.0, 1e-4);
    // detect the first time q_lift crosses 1 (one full revolution)
    double t_cross = -1.0;
    for (std::size_t j = 1; j < tr.points.size(); ++j) {
        if (tr.points[j].q_lift[0] >= 1.0) {
            double a = tr.points[j - 1].q_lift[0], b = tr.points[j].q_lift[0];
            double frac = (1.0 - a) / (b - a);
            t_cross = tr.times[j - 1] + frac * (tr.times[j] - tr.times[j - 1]);
            break;
        }
    }
    REQUIRE(t_cross > 0);
    CHECK(t_cross == doctest::Approx(period).epsilon(1e-4));
}

TEST_CASE("autonomous energy drift is O(tau^2)") {
    auto h = models::pendulum(1.0);
    CotangentPoint z0({0.13}, {1.7});
    double e0 = h.eval(z0.q_lift, z0.p, 0.0);
    double drift1 = 0.0, drift2 = 0.0;
    for (double tau : {1e-2, 5e-3}) {
        auto tr = integrate_flow(h, z0, 0.0, 10.0, tau);
        double worst = 0.0;
        for (const auto& z : tr.points)
            worst = std::max(worst, std::abs(h.eval(z.q_lift, z.p, 0.0) - e0));
        (tau == 1e-2 ? drift1 : drift2) = worst;
    }
    CHECK(drift1 < 2e-3);
    CHECK(drift2 < 0.3 * drift1);  // roughly quarters when tau halves
}

TEST_CASE("flow symplecticity: time-1 map has unit Jacobian determinant") {
    auto h = models::pendulum(1.0);
    Rng rng(5);
    for (int s = 0; s < 4; ++s) {
        Vec q0 = {rng.uniform()}, p0 = {rng.uniform(-1.5, 1.5)};
        const double fd = 1e-6, tau = 1e-3;
        auto F = [&](double dq, double dp) {
            auto z = flow_map(h, CotangentPoint({q0[0] + dq}, {p0[0] + dp}), 0.0, 1.0, tau);
            return std::pair<double, double>(z.q_lift[0], z.p[0]);
        };
        auto [qpp, ppp] = F(fd, 0.0);
        auto [qpm, ppm] = F(-fd, 0.0);
        auto [qqp, pqp] = F(0.0, fd);
        auto [qqm, pqm] = F(0.0, -fd);
        double a = (qpp - qpm) / (2 * fd), b = (qqp - qqm) / (2 * fd);
        double c = (ppp - ppm) / (2 * fd), d = (pqp - pqm) / (2 * fd);
        CHECK(a * d - b * c == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("shift consistency: K-trajectories are fiber translates of H-trajectories") {
    auto h = models::pendulum(1.0);
    OneFormClass lam(0.8);
    auto k = shift_by_form(h, lam);
    // K-orbit from p = 0 corresponds to the H-orbit from p = -0.8 (P = p - lambda)
    auto trk = integrate_flow(k, CotangentPoint({0.21}, {0.0}), 0.0, 2.0, 1e-3);
    auto trh = integrate_flow(h, CotangentPoint({0.21}, {-0.8}), 0.0, 2.0, 1e-3);
    REQUIRE(trk.points.size() == trh.points.size());
    for (std::size_t j = 0; j < trk.points.size(); j += 100) {
        CHECK(trk.points[j].q_lift[0] == doctest::Approx(trh.points[j].q_lift[0]).epsilon(1e-8));
        CHECK(trk.points[j].p[0] - lam[0] == doctest::Approx(trh.points[j].p[0]).epsilon(1e-8));
    }
}

TEST_CASE("perturbed family evaluates linearly") {
    PerturbedFamily fam;
    fam.base = models::pendulum(1.0);
    fam.directions = {models::bump(0.0, 0.0, 0.2, 0.5, 1.0)};

    auto at0 = perturbed_eval(fam, {0.0});
    CHECK(at0.eval({0.3}, {0.2}, 0) == doctest::Approx(fam.base.eval({0.3}, {0.2}, 0)));

    auto at = perturbed_eval(fam, {0.1});
    Rng rng(9);
    for (int s = 0; s < 20; ++s) {
        Vec q = {rng.uniform()}, p = {rng.uniform(-1.0, 1.0)};
        double want = fam.base.eval(q, p, 0) + 0.1 * fam.directions[0].eval(q, p, 0);
        CHECK(at.eval(q, p, 0) == doctest::Approx(want).epsilon(1e-13));
    }
    CHECK_NOTHROW(validate_model(at));
    CHECK_THROWS_AS(perturbed_eval(fam, {0.1, 0.2}), InvalidInput);
}

TEST_CASE("geometric boundedness probe") {
    SUBCASE("free motion never leaves its fiber") {
        auto h = models::integrable({0.0, 0.0, 0.5});
        auto rep = check_geometrically_bounded(h, {{0.0}, {1.0}}, 5.0, 0.1, 4, 1e-2);
        CHECK(rep.bounded);
        CHECK(rep.max_excursion < 1e-12);
    }
    SUBCASE("pendulum excursion respects the energy-level bound") {
        auto h = models::pendulum(1.0);
        std::vector<Vec> lams;
        for (double l : {-2.0, -1.0, 0.0, 1.0, 2.0}) lams.push_back({l});
        auto rep = check_geometrically_bounded(h, lams, 20.0, 10.0, 6, 5e-3);
        CHECK(rep.bounded);
        // |p| <= sqrt(2(E+1)) with E <= 2^2/2 + 1 = 3 on the sampled graphs
        CHECK(rep.max_abs_p <= std::sqrt(2.0 * (3.0 + 1.0)) + 1e-6);
    }
    SUBCASE("strong kicking trips the detector") {
        auto h = models::kicked(2.5);
        auto rep = check_geometrically_bounded(h, {{0.0}}, 40.0, 1.0, 6, 2e-3);
        CHECK_FALSE(rep.bounded);
    }
}
