#include "doctest.h"

#include <cmath>

#include "symhom/spectral.hpp"
#include "symhom/subdiff.hpp"

using namespace symhom;

namespace {

SampledGrid sample_line(double lo, double hi, int n, double (*fn)(double)) {
    Vec xs, ys;
    for (int i = 0; i <= n; ++i) {
        double x = lo + (hi - lo) * i / n;
        xs.push_back(x);
        ys.push_back(fn(x));
    }
    return SampledGrid::line(xs, ys);
}

}  // namespace

TEST_CASE("clarke estimate on classical examples") {
    SUBCASE("|x| at 0 gives [-1, 1]") {
        auto f = sample_line(-1.0, 1.0, 400, [](double x) { return std::abs(x); });
        auto sd = clarke_subdiff(f, {0.0}, {0.2, 0.05});
        CHECK(sd.lo() == doctest::Approx(-1.0).epsilon(1e-3));
        CHECK(sd.hi() == doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("smooth point is a singleton") {
        auto f = sample_line(0.0, 2.0, 400, [](double x) { return 0.5 * x * x; });
        auto sd = clarke_subdiff(f, {1.0}, {0.15, 0.04});
        CHECK(std::abs(sd.lo() - 1.0) < 1e-3);
        CHECK(std::abs(sd.hi() - 1.0) < 1e-3);
    }
    SUBCASE("min of two parabolas at the crossing") {
        auto f = sample_line(-0.2, 1.2, 700,
                             [](double x) { return std::min(x * x, (x - 1.0) * (x - 1.0)); });
        auto sd = clarke_subdiff(f, {0.5}, {0.12, 0.03});
        CHECK(sd.lo() == doctest::Approx(-1.0).epsilon(0.05));
        CHECK(sd.hi() == doctest::Approx(1.0).epsilon(0.05));
    }
    SUBCASE("insufficient density is rejected") {
        auto f = sample_line(-1.0, 1.0, 10, [](double x) { return x; });
        CHECK_THROWS_AS(clarke_subdiff(f, {0.0}, {0.01}), InvalidInput);
    }
    SUBCASE("scaling equivariance on sampled gradients") {
        auto f = sample_line(-1.0, 1.0, 300, [](double x) { return std::abs(x) + 0.3 * x; });
        auto sd1 = clarke_subdiff(f, {0.0}, {0.2, 0.06});
        SampledGrid g = f;
        for (double& v : g.values) v *= -2.5;
        auto sd2 = clarke_subdiff(g, {0.0}, {0.2, 0.06});
        CHECK(sd2.lo() == doctest::Approx(-2.5 * sd1.hi()).epsilon(1e-9));
        CHECK(sd2.hi() == doctest::Approx(-2.5 * sd1.lo()).epsilon(1e-9));
    }
}

TEST_CASE("two-dimensional hull estimate") {
    // f(x, y) = |x| + y^2/2: subdifferential at 0 is [-1,1] x {0}
    SampledGrid f;
    Vec ax;
    for (int i = 0; i <= 160; ++i) ax.push_back(-0.8 + 0.01 * i);
    f.axes = {ax, ax};
    f.values.resize(ax.size() * ax.size());
    for (std::size_t i = 0; i < ax.size(); ++i)
        for (std::size_t j = 0; j < ax.size(); ++j)
            f.values[i * ax.size() + j] = std::abs(ax[i]) + 0.5 * ax[j] * ax[j];
    auto sd = clarke_subdiff(f, {0.0, 0.0}, {0.15, 0.05});
    CHECK(sd.contains({0.0, 0.0}, 1e-6));
    CHECK(sd.contains({0.9, 0.0}, 0.12));
    CHECK_FALSE(sd.contains({0.0, 0.8}, 0.2));
}

TEST_CASE("limsup estimate of a family") {
    SUBCASE("constant smooth family collapses to the derivative") {
        std::vector<int> ks = {2, 4, 8, 16};
        std::vector<SampledGrid> fks;
        for (std::size_t j = 0; j < ks.size(); ++j)
            fks.push_back(sample_line(-1.0, 1.0, 300, [](double x) { return 0.5 * x * x; }));
        auto sd = limsup_subdiff(ks, fks, {0.4});
        CHECK(std::abs(sd.lo() - 0.4) < 0.02);
        CHECK(std::abs(sd.hi() - 0.4) < 0.02);
        CHECK_FALSE(sd.divergence_warning);
        CHECK(!sd.witnesses.empty());
    }
    SUBCASE("f_k = |x| + 1/k accumulates on [-1, 1] with witnesses") {
        std::vector<int> ks = {2, 4, 8};
        std::vector<SampledGrid> fks;
        for (int k : ks) {
            Vec xs, ys;
            for (int i = 0; i <= 400; ++i) {
                double x = -1.0 + 0.005 * i;
                xs.push_back(x);
                ys.push_back(std::abs(x) + 1.0 / k);
            }
            fks.push_back(SampledGrid::line(xs, ys));
        }
        auto sd = limsup_subdiff(ks, fks, {0.0});
        CHECK(sd.lo() == doctest::Approx(-1.0).epsilon(1e-2));
        CHECK(sd.hi() == doctest::Approx(1.0).epsilon(1e-2));
        // witnesses approach 0 with slopes near the extremes
        bool has_neg = false, has_pos = false;
        for (const auto& w : sd.witnesses) {
            if (w.eta[0] < -0.9) has_neg = true;
            if (w.eta[0] > 0.9) has_pos = true;
        }
        CHECK(has_neg);
        CHECK(has_pos);
    }
    SUBCASE("family size below 3 is rejected") {
        std::vector<int> ks = {2, 4};
        std::vector<SampledGrid> fks(2, sample_line(-1, 1, 100, [](double x) { return x; }));
        CHECK_THROWS_AS(limsup_subdiff(ks, fks, {0.0}), InvalidInput);
    }
}

TEST_CASE("critical level set") {
    SUBCASE("pendulum at class 0 keeps the top chord, drops the bottom one") {
        auto h = models::pendulum(1.0);
        auto w = build_discrete_action(h, OneFormClass(0.0), 1, 16);
        auto cls = critical_level_set(w, {0.0}, 1.0, 0.05, {64, 7, 0.0, 1.0});
        REQUIRE(!cls.points.empty());
        for (const auto& cp : cls.points) CHECK(std::abs(cp.value - 1.0) <= 0.05);
        // the min-V chord sits at level -1 and is excluded
        for (const auto& cp : cls.points) CHECK(cp.value > 0.0);
    }
    SUBCASE("integrable level set is the degenerate circle") {
        auto h = models::integrable({0.0, 0.0, 0.5});
        auto w = build_discrete_action(h, OneFormClass(0.6), 2, 8);
        auto cls = critical_level_set(w, {0.6}, 0.5 * 0.36, 1e-6, {32, 8, 0.0, 1.0});
        REQUIRE(cls.points.size() == 1);
        CHECK(cls.points[0].degenerate);
    }
    SUBCASE("wrong level raises selector inconsistency") {
        auto h = models::integrable({0.0, 0.0, 0.5});
        auto w = build_discrete_action(h, OneFormClass(0.0), 1, 8);
        CHECK_THROWS_AS(critical_level_set(w, {0.0}, 5.0, 1e-6, {32, 9, 0.0, 1.0}),
                        SelectorInconsistency);
    }
}

TEST_CASE("inclusion of the Clarke estimate in the displacement hull") {
    // integrable: both sides are the singleton {h'(lambda)} after calibration
    auto h = models::integrable({0.0, 0.0, 0.5});
    const int k = 2;
    Vec xs, ys;
    for (int i = 0; i <= 60; ++i) {
        double lam = -1.5 + 0.05 * i;
        xs.push_back(lam);
        ys.push_back(compute_fk(h, {lam}, k));
    }
    auto fk = SampledGrid::line(xs, ys);

    for (double lam0 : {-0.5, 0.0, 0.75}) {
        auto sd = clarke_subdiff(fk, {lam0}, {0.2, 0.11});
        auto w = build_discrete_action(h, OneFormClass(-lam0), k, 8);  // internal class
        auto cls = critical_level_set(w, {lam0}, 0.5 * lam0 * lam0, 1e-6, {32, 10, 0.0, 1.0});
        auto rep = inclusion_check(w, {lam0}, sd, cls, 0.02 + 10 * w.tau);
        CHECK(rep.pass);
        CHECK(std::abs(rep.hull_lo - lam0) < 1e-6);  // displacement / k = h'(lam0)
    }
}

TEST_CASE("mean value scan finds an intermediate subgradient") {
    auto f = sample_line(-2.0, 2.0, 400, [](double x) { return std::abs(x); });
    auto mv = mean_value_scan(f, -0.5, 1.5, 0.05);
    CHECK(mv.found);
    CHECK(mv.quotient == doctest::Approx(0.5).epsilon(0.05));
}
