#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"

using namespace dyad;
using fixtures::cube;
using fixtures::unitTree;

TEST_CASE("integration and averages") {
    auto t = unitTree(1, 2);
    RadonMeasure mu = RadonMeasure::uniform(t);

    StepFunction c3 = StepFunction::constant(t, 3.0);
    for (std::uint64_t flat = 0; flat < t->cubeCount(); ++flat)
        CHECK(average(c3, mu, t->cubeAt(flat)) == Catch::Approx(3.0));

    StepFunction half = StepFunction::indicator(t, cube(1, {0}));
    CHECK(average(half, mu, t->root()) == Catch::Approx(0.5));

    // Null-cube average must fail loudly.
    std::vector<double> masses{1.0, 1.0, 0.0, 0.0};
    RadonMeasure muz(t, masses);
    CHECK_THROWS_AS(average(half, muz, cube(1, {1})), Error);
}

TEST_CASE("norms match a direct-summation oracle") {
    auto t = unitTree(2, 2);
    Rng rng(17);
    for (int k = 0; k < 20; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure mu = randomMeasure(t, sub);
        StepFunction f = randomStepFunction(t, sub);
        Weight w = randomWeight(t, sub);
        double p = 3.0;
        double direct = 0.0;
        for (std::uint64_t i = 0; i < f.size(); ++i)
            direct += std::pow(std::fabs(f[i]), p) * w[i] * mu.leafMass(i);
        direct = std::pow(direct, 1.0 / p);
        double lib = lpNormWeighted(f, mu, w.fn(), p);
        CHECK(lib == Catch::Approx(direct).epsilon(1e-12));
    }
    CHECK_THROWS_AS(lpNorm(StepFunction::zero(t), RadonMeasure::uniform(t), 1.0), Error);
}

TEST_CASE("cube masses are additive bit-for-bit") {
    auto t = unitTree(2, 3);
    Rng rng(23);
    RadonMeasure mu = randomMeasure(t, rng);
    for (std::uint64_t flat = 0; flat < t->cubeCount(); ++flat) {
        CubeId q = t->cubeAt(flat);
        if (t->isLeaf(q)) continue;
        double s = 0.0;
        for (const CubeId& c : t->children(q)) s += mu.mass(c);
        CHECK(mu.mass(q) == s);  // exact: defined by this very sum
    }
}

TEST_CASE("dyadic maximal function") {
    auto t = unitTree(1, 2);
    RadonMeasure mu = RadonMeasure::uniform(t);

    StepFunction ones = StepFunction::constant(t, 1.0);
    StepFunction m1 = maximalM(ones, mu);
    for (std::uint64_t i = 0; i < m1.size(); ++i) CHECK(m1[i] == Catch::Approx(1.0));

    // f = 4 on [0, 1/4): ancestor averages give (4, 2, 1, 1).
    StepFunction f = 4.0 * StepFunction::indicator(t, cube(2, {0}));
    StepFunction mf = maximalM(f, mu);
    CHECK(mf[0] == Catch::Approx(4.0));
    CHECK(mf[1] == Catch::Approx(2.0));
    CHECK(mf[2] == Catch::Approx(1.0));
    CHECK(mf[3] == Catch::Approx(1.0));

    // Oracle: enumerate every ancestor average per leaf.
    auto t4 = unitTree(1, 4);
    Rng rng(31);
    for (int k = 0; k < 25; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure m = randomMeasure(t4, sub, 0.15);
        StepFunction g = randomStepFunction(t4, sub);
        StepFunction mg = maximalM(g, m);
        for (std::uint64_t leaf = 0; leaf < t4->leafCount(); ++leaf) {
            double best = 0.0;
            for (int level = 0; level <= t4->depth(); ++level) {
                CubeId q = t4->chainCube(leaf, level);
                if (m.mass(q) <= 0.0) continue;
                best = std::max(best, integrate(g.abs(), m, q) / m.mass(q));
            }
            CHECK(mg[leaf] == Catch::Approx(best).margin(1e-14));
        }
    }
}

TEST_CASE("weak (1,1) for M over random instances") {
    auto t = unitTree(1, 5);
    Rng rng(41);
    for (int k = 0; k < 500; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure mu = randomMeasure(t, sub, k % 7 == 0 ? 0.3 : 0.0);
        StepFunction f = randomStepFunction(t, sub);
        double c = weakLevelSup(maximalM(f, mu), mu);
        CHECK(c <= l1Norm(f, mu) * (1.0 + 1e-12));
    }
}

TEST_CASE("M is pointwise monotone") {
    auto t = unitTree(1, 4);
    Rng rng(43);
    RadonMeasure mu = randomMeasure(t, rng);
    StepFunction f = randomStepFunction(t, rng);
    StepFunction g = f;
    for (std::uint64_t i = 0; i < g.size(); ++i) g[i] = f[i] * (1.0 + rng.uniform());
    StepFunction mf = maximalM(f, mu), mg = maximalM(g, mu);
    for (std::uint64_t i = 0; i < f.size(); ++i) CHECK(mf[i] <= mg[i] + 1e-14);
}

TEST_CASE("auxiliary maximal function M_eps") {
    auto t = unitTree(1, 3);
    RadonMeasure mu = RadonMeasure::uniform(t);
    Rng rng(47);
    StepFunction f = randomStepFunction(t, rng);

    StepFunction viaOnes = maximalMeps(f, mu, CoefficientField::constant(t, 1.0));
    StepFunction mf = maximalM(f, mu);
    // With coefficients 1, M_eps is M restricted to non-leaf cubes.
    for (std::uint64_t leaf = 0; leaf < t->leafCount(); ++leaf) {
        double best = 0.0;
        for (int level = 0; level < t->depth(); ++level)
            best = std::max(best, average(f.abs(), mu, t->chainCube(leaf, level)));
        CHECK(viaOnes[leaf] == Catch::Approx(best).margin(1e-14));
        CHECK(viaOnes[leaf] <= mf[leaf] + 1e-14);
    }

    StepFunction zero = maximalMeps(f, mu, CoefficientField::constant(t, 0.0));
    CHECK(zero.maxAbs() == 0.0);

    // Triple-loop oracle over (leaf, ancestor, child).
    for (int k = 0; k < 20; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure m = randomMeasure(t, sub, 0.1);
        CoefficientField eps = randomCoefficientField(t, sub, 0.0, 1.0);
        StepFunction g = randomStepFunction(t, sub);
        StepFunction lib = maximalMeps(g, m, eps);
        for (std::uint64_t leaf = 0; leaf < t->leafCount(); ++leaf) {
            double best = 0.0;
            for (int level = 0; level < t->depth(); ++level) {
                CubeId q = t->chainCube(leaf, level);
                if (m.mass(q) <= 0.0) continue;
                double cmax = 0.0;
                for (const CubeId& c : t->children(q))
                    cmax = std::max(cmax, std::fabs(eps.eps(c)));
                best = std::max(best, cmax * integrate(g.abs(), m, q) / m.mass(q));
            }
            CHECK(lib[leaf] == Catch::Approx(best).margin(1e-14));
        }
        // Comparison with the running sup at the root.
        StepFunction mg = maximalM(g, m);
        for (std::uint64_t leaf = 0; leaf < t->leafCount(); ++leaf)
            CHECK(lib[leaf] <= eps.tildeRoot() * mg[leaf] + 1e-12);
    }
}

TEST_CASE("weighted maximal function M_w") {
    auto t = unitTree(1, 3);
    Rng rng(53);
    RadonMeasure mu = randomMeasure(t, rng);
    StepFunction f = randomStepFunction(t, rng);

    Weight unit(StepFunction::constant(t, 1.0));
    StepFunction viaUnit = maximalMw(f, mu, unit);
    StepFunction mf = maximalM(f, mu);
    for (std::uint64_t i = 0; i < f.size(); ++i)
        CHECK(viaUnit[i] == Catch::Approx(mf[i]).margin(1e-14));

    StepFunction c = StepFunction::constant(t, -2.5);
    Weight w = randomWeight(t, rng);
    StepFunction mc = maximalMw(c, mu, w);
    for (std::uint64_t i = 0; i < mc.size(); ++i) CHECK(mc[i] == Catch::Approx(2.5));

    // Triple-loop oracle.
    for (int k = 0; k < 20; ++k) {
        Rng sub = rng.fork(k);
        RadonMeasure m = randomMeasure(t, sub);
        Weight ww = randomWeight(t, sub);
        StepFunction g = randomStepFunction(t, sub);
        StepFunction lib = maximalMw(g, m, ww);
        for (std::uint64_t leaf = 0; leaf < t->leafCount(); ++leaf) {
            double best = 0.0;
            for (int level = 0; level <= t->depth(); ++level) {
                CubeId q = t->chainCube(leaf, level);
                double num = 0.0, den = 0.0;
                t->forEachLeafUnder(q, [&](std::uint64_t i) {
                    num += std::fabs(g[i]) * ww[i] * m.leafMass(i);
                    den += ww[i] * m.leafMass(i);
                });
                if (den > 0.0) best = std::max(best, num / den);
            }
            CHECK(lib[leaf] == Catch::Approx(best).margin(1e-14));
        }
    }
}

TEST_CASE("M_w operator norm stays bounded across weights") {
    // The L^p(w) bound of M_w does not depend on w: check the empirical norm
    // against a single constant across 20 random weights.
    auto t = unitTree(1, 4);
    Rng rng(59);
    RadonMeasure mu = randomMeasure(t, rng);
    double p = 2.0;
    double cap = std::pow(holderConjugate(p), 1.0 / p) * 4.0;  // generous fixed budget
    for (int k = 0; k < 20; ++k) {
        Rng sub = rng.fork(k);
        Weight w = randomWeight(t, sub, 2.0);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Rng s2 = sub.fork(trial);
            StepFunction f = randomStepFunction(t, s2);
            double nf = lpNormWeighted(f, mu, w.fn(), p);
            if (nf <= 0.0) continue;
            worst = std::max(worst, lpNormWeighted(maximalMw(f, mu, w), mu, w.fn(), p) / nf);
        }
        CHECK(worst <= cap);
    }
}

TEST_CASE("A_p constants") {
    auto t1 = unitTree(1, 1);
    RadonMeasure mu = RadonMeasure::uniform(t1);

    Weight unit(StepFunction::constant(t1, 1.0));
    for (double p : {1.5, 2.0, 3.0}) CHECK(apConstant(unit, mu, p) == Catch::Approx(1.0));

    // Two-leaf weight (2, 1) at p = 2: the root gives (3/2)(3/4) = 9/8.
    StepFunction wf = StepFunction::zero(t1);
    wf[0] = 2.0;
    wf[1] = 1.0;
    Weight w(wf);
    CHECK(apConstant(w, mu, 2.0) == Catch::Approx(9.0 / 8.0));

    // eps^q A_p: zero field annihilates, and the containment bound holds.
    auto t = unitTree(1, 4);
    Rng rng(61);
    RadonMeasure m = randomMeasure(t, rng);
    Weight wr = randomWeight(t, rng);
    CoefficientField zero = CoefficientField::constant(t, 0.0);
    CHECK(epsQApConstant(wr, m, 2.0, 1.0, zero.values()) == 0.0);

    for (int k = 0; k < 20; ++k) {
        Rng sub = rng.fork(k);
        Weight ww = randomWeight(t, sub);
        CoefficientField eps = randomCoefficientField(t, sub, -1.0, 1.0);
        double p = 1.5 + 2.0 * sub.uniform();
        double q = 0.5 + sub.uniform();
        double ap = apConstant(ww, m, p);
        CHECK(ap >= 1.0 - 1e-12);
        double eqap = epsQApConstant(ww, m, p, q, eps.values());
        CHECK(eqap <= std::pow(eps.supAbs(), q) * ap * (1.0 + 1e-12));
    }
}
