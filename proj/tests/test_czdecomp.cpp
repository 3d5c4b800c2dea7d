#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"

using namespace dyad;
using fixtures::cube;
using fixtures::unitTree;

TEST_CASE("no stopping cubes above the sup") {
    auto t = unitTree(1, 3);
    RadonMeasure mu = RadonMeasure::uniform(t);
    StepFunction f = StepFunction::constant(t, 1.0);
    CZDecomposition d = czDecompose(f, mu, 2.0);
    CHECK(d.stoppingCubes.empty());
    CHECK(d.badParts.empty());
    for (std::uint64_t i = 0; i < f.size(); ++i) CHECK(d.good[i] == f[i]);
}

TEST_CASE("hand-computed decomposition of a quarter spike") {
    auto t = unitTree(1, 2);
    RadonMeasure mu = RadonMeasure::uniform(t);
    StepFunction f = 4.0 * StepFunction::indicator(t, cube(2, {0}));
    CZDecomposition d = czDecompose(f, mu, 2.0);

    REQUIRE(d.stoppingCubes.size() == 1);
    CHECK(d.stoppingCubes[0] == cube(2, {0}));  // <f> over [0,1/2) is 2 <= lambda < 4

    // g = 2 on [0, 1/2), 0 elsewhere; b = f 1_{[0,1/4)} - 2 1_{[0,1/2)}.
    CHECK(d.good[0] == Catch::Approx(2.0));
    CHECK(d.good[1] == Catch::Approx(2.0));
    CHECK(d.good[2] == Catch::Approx(0.0));
    CHECK(d.good[3] == Catch::Approx(0.0));
    REQUIRE(d.badParts.size() == 1);
    CHECK(d.badParts[0][0] == Catch::Approx(2.0));
    CHECK(d.badParts[0][1] == Catch::Approx(-2.0));
    CHECK(d.badParts[0][2] == Catch::Approx(0.0));

    CZReport rep = verifyCZ(d, mu);
    CHECK(rep.pass());
    // ||g||_2^2 = 2 and lambda ||f||_1 = 2: the energy ratio is exactly 1.
    CHECK(rep.goodEnergyRatio == Catch::Approx(1.0));
    CHECK(rep.stoppingMassRatio == Catch::Approx(0.5));
}

TEST_CASE("preconditions") {
    auto t = unitTree(1, 2);
    RadonMeasure mu = RadonMeasure::uniform(t);
    StepFunction f = StepFunction::constant(t, 1.0);
    CHECK_THROWS_AS(czDecompose(f, mu, 0.5), Error);  // below ||f||_1 / mu(root) = 1
    CHECK_THROWS_AS(czDecompose(f, mu, 1.0), Error);  // the threshold itself is excluded
    StepFunction neg = f;
    neg[0] = -1.0;
    CHECK_THROWS_AS(czDecompose(neg, mu, 2.0), Error);
}

TEST_CASE("randomized verification suite") {
    Rng rng(113);
    for (int k = 0; k < 1000; ++k) {
        Rng sub = rng.fork(k);
        auto t = unitTree(k % 4 == 0 ? 2 : 1, k % 4 == 0 ? 2 : 3 + static_cast<int>(k % 3));
        RadonMeasure mu = randomMeasure(t, sub, k % 9 == 0 ? 0.3 : 0.0);
        StepFunction f = randomNonnegativeStepFunction(t, sub, 1.0 + 9.0 * sub.uniform());
        double base = l1Norm(f, mu) / mu.total();
        double lambda = base * (1.0 + 9.0 * sub.uniform()) + 1e-12;
        CZDecomposition d = czDecompose(f, mu, lambda);
        CZReport rep = verifyCZ(d, mu);

        CHECK(rep.splitResidual <= 1e-12);
        CHECK(rep.goodEnergyRatio <= 6.0 + 1e-12);
        CHECK(rep.badL1Ratio <= 3.0 + 1e-12);
        CHECK(rep.stoppingMassRatio <= 1.0 + 1e-12);
        CHECK(rep.maxMeanZeroResidual <= 1e-12);
        CHECK(rep.disjoint);
        CHECK(rep.maximal);
        CHECK(rep.goodOffOmegaSup <= lambda * (1.0 + 1e-12));  // ||g 1_{Omega^c}||_inf <= lambda
        if (!d.stoppingCubes.empty()) {
            double mass = 0.0;
            for (const CubeId& q : d.stoppingCubes) mass += mu.mass(q);
            CHECK(mass < l1Norm(f, mu) / lambda);  // strict when nonempty
        }
    }
}

TEST_CASE("adversarial one-leaf spikes") {
    auto t = unitTree(1, 4);
    Rng rng(127);
    for (int k = 0; k < 50; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure mu = randomMeasure(t, sub);
        StepFunction f = StepFunction::zero(t);
        f[sub.below(t->leafCount())] = 100.0;
        double base = l1Norm(f, mu) / mu.total();
        CZDecomposition d = czDecompose(f, mu, base * 1.5 + 1e-12);
        CZReport rep = verifyCZ(d, mu);
        CHECK(rep.pass());
    }
}
