#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"

using namespace dyad;
using fixtures::cube;
using fixtures::unitTree;

TEST_CASE("multiplier basics") {
    auto t = unitTree(1, 3);
    RadonMeasure mu = RadonMeasure::uniform(t);
    Rng rng(7);
    StepFunction f = randomStepFunction(t, rng);

    CHECK(applyMultiplier(f, CoefficientField::constant(t, 0.0), mu).maxAbs() == 0.0);

    StepFunction id = applyMultiplier(f, CoefficientField::constant(t, 1.0), mu);
    double avg = integrate(f, mu) / mu.total();
    for (std::uint64_t i = 0; i < f.size(); ++i)
        CHECK(id[i] == Catch::Approx(f[i] - avg).margin(1e-12));

    // Linearity.
    StepFunction g = randomStepFunction(t, rng);
    CoefficientField eps = randomCoefficientField(t, rng);
    StepFunction sum = applyMultiplier(f + g, eps, mu);
    StepFunction parts = applyMultiplier(f, eps, mu) + applyMultiplier(g, eps, mu);
    for (std::uint64_t i = 0; i < f.size(); ++i)
        CHECK(sum[i] == Catch::Approx(parts[i]).margin(1e-12));
}

TEST_CASE("single active coefficient against the rank-one matrix oracle") {
    auto t = unitTree(1, 3);
    Rng rng(11);
    RadonMeasure mu = randomMeasure(t, rng);
    std::vector<double> coeffs(t->cubeCount(), 0.0);
    std::uint64_t active = 1 + rng.below(t->cubeCount() - 1);
    if (mu.massFlat(active) <= 0.0) active = 1;
    coeffs[active] = 1.0;
    CoefficientField eps(t, coeffs);

    Eigen::MatrixXd oracle = fixtures::oracleMultiplierMatrix(t, mu, eps);
    Eigen::MatrixXd lib = assembleMatrix(t, [&](const StepFunction& e) {
        return applyMultiplier(e, eps, mu);
    });
    CHECK((oracle - lib).cwiseAbs().maxCoeff() <= 1e-12);

    StepFunction f = randomStepFunction(t, rng);
    HaarFunction h = haarFunction(t, mu, t->cubeAt(active));
    double c = pairing(f, h.realization, mu);
    StepFunction Tf = applyMultiplier(f, eps, mu);
    for (std::uint64_t i = 0; i < f.size(); ++i)
        CHECK(Tf[i] == Catch::Approx(c * h.realization[i]).margin(1e-12));
}

TEST_CASE("full-matrix oracle on random fields") {
    auto t = unitTree(2, 2);
    Rng rng(13);
    for (int k = 0; k < 10; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure mu = randomMeasure(t, sub, k % 3 == 0 ? 0.2 : 0.0);
        CoefficientField eps = randomCoefficientField(t, sub);
        Eigen::MatrixXd oracle = fixtures::oracleMultiplierMatrix(t, mu, eps);
        Eigen::MatrixXd lib = assembleMatrix(t, [&](const StepFunction& e) {
            return applyMultiplier(e, eps, mu);
        });
        CHECK((oracle - lib).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("bilinear identity") {
    auto t = unitTree(1, 4);
    Rng rng(17);
    for (int k = 0; k < 50; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure mu = randomMeasure(t, sub);
        CoefficientField eps = randomCoefficientField(t, sub);
        StepFunction f = randomStepFunction(t, sub);
        StepFunction g = randomStepFunction(t, sub);
        double lhs = pairing(applyMultiplier(f, eps, mu), g, mu);
        double rhs = multiplierBilinearForm(f, g, eps, mu);
        CHECK(lhs == Catch::Approx(rhs).margin(1e-11));
    }
}

TEST_CASE("running sup field") {
    auto t = unitTree(1, 4);
    Rng rng(19);
    CoefficientField eps = randomCoefficientField(t, rng);
    for (std::uint64_t flat = 0; flat < t->cubeCount(); ++flat) {
        CubeId q = t->cubeAt(flat);
        if (t->isLeaf(q)) {
            CHECK(eps.tildeFlat(flat) == 0.0);  // no strict tree descendants
            continue;
        }
        // epsTilde is the max of |eps| over strict descendants.
        double expect = 0.0;
        for (std::uint64_t other = 0; other < t->cubeCount(); ++other) {
            CubeId r = t->cubeAt(other);
            if (t->isStrictAncestorOf(q, r)) expect = std::max(expect, std::fabs(eps.epsFlat(other)));
        }
        CHECK(eps.tildeFlat(flat) == Catch::Approx(expect));
        for (const CubeId& c : t->children(q)) CHECK(eps.tilde(c) <= eps.tildeFlat(flat) + 1e-15);
    }
}

TEST_CASE("maximal truncation: trivial and single-coefficient cases") {
    auto t = unitTree(1, 3);
    RadonMeasure mu = RadonMeasure::uniform(t);
    Rng rng(23);
    StepFunction f = randomStepFunction(t, rng);

    CHECK(applyTmax(f, CoefficientField::constant(t, 0.0), mu).maxAbs() == 0.0);

    std::vector<double> coeffs(t->cubeCount(), 0.0);
    std::uint64_t active = 3;  // a level-1 cube's child — any fixed non-root cube
    coeffs[active] = 1.0;
    CoefficientField eps(t, coeffs);
    StepFunction lib = applyTmax(f, eps, mu);
    StepFunction oracle = fixtures::oracleTmax(t, mu, eps, f);
    for (std::uint64_t i = 0; i < f.size(); ++i)
        CHECK(lib[i] == Catch::Approx(oracle[i]).margin(1e-12));
}

TEST_CASE("maximal truncation equals the exhaustive enumeration oracle") {
    auto t = unitTree(1, 3);
    Rng rng(29);
    for (int k = 0; k < 15; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure mu = randomMeasure(t, sub, k % 4 == 0 ? 0.2 : 0.0);
        CoefficientField eps = randomCoefficientField(t, sub);
        StepFunction f = randomStepFunction(t, sub);
        StepFunction lib = applyTmax(f, eps, mu);
        StepFunction oracle = fixtures::oracleTmax(t, mu, eps, f);
        for (std::uint64_t i = 0; i < f.size(); ++i)
            if (mu.leafMass(i) > 0.0)
                CHECK(lib[i] == Catch::Approx(oracle[i]).margin(1e-12));
    }

    auto t2 = unitTree(2, 2);
    for (int k = 0; k < 5; ++k) {
        Rng sub = rng.fork(100 + k);
        RadonMeasure mu = randomMeasure(t2, sub);
        CoefficientField eps = randomCoefficientField(t2, sub);
        StepFunction f = randomStepFunction(t2, sub);
        StepFunction lib = applyTmax(f, eps, mu);
        StepFunction oracle = fixtures::oracleTmax(t2, mu, eps, f);
        for (std::uint64_t i = 0; i < f.size(); ++i)
            if (mu.leafMass(i) > 0.0)
                CHECK(lib[i] == Catch::Approx(oracle[i]).margin(1e-12));
    }
}

TEST_CASE("pointwise chain |Tf| <= Tmax f <= M(Tf) on 500 random instances") {
    Rng rng(31);
    double worst = -1.0;
    for (int k = 0; k < 500; ++k) {
        Rng sub = rng.fork(k);
        auto t = unitTree(1, 3 + static_cast<int>(k % 3));
        RadonMeasure mu = randomMeasure(t, sub, k % 6 == 0 ? 0.2 : 0.0);
        CoefficientField eps = randomCoefficientField(t, sub);
        StepFunction f = randomStepFunction(t, sub);
        StepFunction Tf = applyMultiplier(f, eps, mu);
        StepFunction tmax = applyTmax(f, eps, mu);
        StepFunction mtf = maximalM(Tf, mu);
        for (std::uint64_t i = 0; i < f.size(); ++i) {
            if (mu.leafMass(i) <= 0.0) continue;
            worst = std::max(worst, std::fabs(Tf[i]) - tmax[i]);
            worst = std::max(worst, tmax[i] - mtf[i]);
        }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("weak-type estimation") {
    auto t = unitTree(1, 5);
    Rng rng(37);
    RadonMeasure mu = randomMeasure(t, rng);

    auto sampler = [&](int trial) {
        Rng sub = rng.fork(1000 + trial);
        return randomStepFunction(t, sub);
    };

    WeakTypeReport repM = weakTypeEstimate(
        [&](const StepFunction& f) { return maximalM(f, mu); }, mu, 100, sampler);
    CHECK(repM.maxConstant <= 1.0 + 1e-12);  // dyadic covering is sharp
    CHECK(repM.maxConstant > 0.0);

    CoefficientField ones = CoefficientField::constant(t, 1.0);
    WeakTypeReport repT = weakTypeEstimate(
        [&](const StepFunction& f) { return applyTmax(f, ones, mu); }, mu, 200, sampler,
        ones.tildeRoot());
    CHECK(std::isfinite(repT.maxConstant));
    CHECK(repT.maxConstant > 0.0);
    CHECK(repT.meanConstant <= repT.maxConstant);

    WeakTypeReport repZ = weakTypeEstimate(
        [&](const StepFunction& f) { return StepFunction::zero(f.tree()); }, mu, 10, sampler);
    CHECK(repZ.maxConstant == 0.0);
}
