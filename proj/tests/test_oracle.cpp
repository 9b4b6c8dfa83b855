#include "doctest.h"

#include <cmath>

#include "symhom/oracle.hpp"

using namespace symhom;

TEST_CASE("legendre transform of a quadratic fiber") {
    TwistOracle oracle(models::integrable({0.0, 0.0, 0.5}));
    auto [L, p] = oracle.legendre(0.3, 1.7, 0.0);
    CHECK(L == doctest::Approx(1.7 * 1.7 / 2).epsilon(1e-8));
    CHECK(p == doctest::Approx(1.7).epsilon(1e-8));
}

TEST_CASE("free motion: alpha equals the Legendre identity") {
    TwistOracle oracle(models::integrable({0.0, 0.0, 0.5}));
    for (double lam : {-2.0, -1.1, -0.3, 0.0, 0.4, 1.0, 1.7, 2.0}) {
        CHECK(std::abs(oracle.alpha(lam) - 0.5 * lam * lam) < 1e-3);
    }
}

TEST_CASE("calibration fixture: h = p + p^2/2") {
    TwistOracle oracle(models::integrable({0.0, 1.0, 0.5}));
    for (double lam : {-2.0, -0.7, 0.0, 0.9, 2.0}) {
        double want = lam + 0.5 * lam * lam;
        CHECK(std::abs(oracle.alpha(lam) - want) < 1e-3);
    }
}

TEST_CASE("pendulum: flat part at the Mane level, separatrix width 4/pi") {
    // static so the beta table is built once across subcases
    static TwistOracle oracle(models::pendulum(1.0), [] {
        TwistOracleSettings s;
        s.rho_max = 4.5;
        return s;
    }());

    SUBCASE("beta at rotation zero is minus max V") {
        CHECK(oracle.beta(0, 1) == doctest::Approx(-1.0).epsilon(1e-6));
    }
    SUBCASE("alpha is flat at 1 inside |lambda| < 4/pi") {
        const double edge = 4.0 / 3.14159265358979323846;
        for (double lam : {0.0, 0.4, -0.8, 0.95 * edge, -0.95 * edge}) {
            CHECK(std::abs(oracle.alpha(lam) - 1.0) < 2e-2);
        }
    }
    SUBCASE("alpha grows past the separatrix and is symmetric") {
        CHECK(oracle.alpha(2.0) > 1.05);
        CHECK(oracle.alpha(3.0) > oracle.alpha(2.0));
        CHECK(oracle.alpha(2.0) == doctest::Approx(oracle.alpha(-2.0)).epsilon(1e-6));
    }
    SUBCASE("rotating branch matches the energy-level quadrature") {
        // On a rotating level E > 1 the minimal orbits give
        // beta(rho(E)) = A(E) rho(E) - E with A(E) = oint p dq, and the
        // Legendre-Fenchel dual pairs alpha(A(E)) = E.
        const double E = 2.0;
        long nq = 40000;
        double area = 0.0;
        for (long i = 0; i < nq; ++i) {
            double q = (i + 0.5) / double(nq);
            area += std::sqrt(2.0 * (E - std::cos(kTwoPi * q)));
        }
        area /= double(nq);
        CHECK(oracle.alpha(area) == doctest::Approx(E).epsilon(2e-2));
    }
}

TEST_CASE("non-convex model is rejected") {
    CHECK_THROWS_AS(TwistOracle(models::doublewell_p(0.0)), NotApplicable);
}
