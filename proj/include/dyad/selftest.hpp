#pragma once

#include "dyad/czdecomp.hpp"
#include "dyad/czo.hpp"
#include "dyad/random.hpp"

namespace dyad {

struct SelftestItem {
    std::string name;
    bool pass = false;
    double metric = 0.0;  // the governing residual or ratio
};

/// Built-in invariant battery on fixed seeded fixtures; every item is a hard
/// machine-precision or construction-enforced assertion.
inline std::vector<SelftestItem> selftestBattery(std::uint64_t seed) {
    std::vector<SelftestItem> items;
    auto push = [&](const std::string& name, bool pass, double metric) {
        items.push_back({name, pass, metric});
    };

    auto tree = std::make_shared<DyadicTree>(1, 5, [] {
        Box b;
        b.n = 1;
        b.lo[0] = DyadicRational(0);
        b.side = DyadicRational(1);
        return b;
    }());
    Rng rng(seed);

    {  // Haar reconstruction and mean-zero
        double worstRec = 0.0, worstMean = 0.0;
        for (int t = 0; t < 50; ++t) {
            Rng sub = rng.fork(t);
            RadonMeasure mu = randomMeasure(tree, sub, t % 5 == 0 ? 0.2 : 0.0);
            StepFunction f = randomStepFunction(tree, sub);
            StepFunction rec = synthesize(analyze(f, mu), mu);
            double avg = integrate(f, mu) / mu.total();
            for (std::uint64_t i = 0; i < f.size(); ++i)
                if (mu.leafMass(i) > 0.0)
                    worstRec = std::max(worstRec, std::fabs(rec[i] - (f[i] - avg)));
            for (std::uint64_t flat = 1; flat < tree->cubeCount(); ++flat) {
                if (mu.massFlat(flat) <= 0.0) continue;
                HaarFunction h = haarFunction(tree, mu, tree->cubeAt(flat));
                worstMean = std::max(worstMean, std::fabs(integrate(h.realization, mu)));
            }
        }
        push("haar_reconstruction", worstRec <= 1e-10, worstRec);
        push("haar_mean_zero", worstMean <= 1e-12, worstMean);
    }

    {  // Product remainder bound |a_Q| <= 3 <|f|>_{parent}
        double worst = 0.0;
        for (int t = 0; t < 30; ++t) {
            Rng sub = rng.fork(1000 + t);
            RadonMeasure mu = randomMeasure(tree, sub);
            StepFunction f = randomStepFunction(tree, sub);
            for (std::uint64_t flat = 1; flat < tree->cubeCount(); ++flat) {
                if (mu.massFlat(flat) <= 0.0) continue;
                CubeId q = tree->cubeAt(flat);
                CubeId par = tree->parent(q);
                StepFunction a = haarProductRemainder(f, mu, q);
                double bound = 3.0 * average(f.abs(), mu, par);
                tree->forEachLeafUnder(par, [&](std::uint64_t i) {
                    if (mu.leafMass(i) > 0.0)
                        worst = std::max(worst, std::fabs(a[i]) - bound);
                });
            }
        }
        push("haar_product_bound", worst <= 1e-12, worst);
    }

    {  // CZ decomposition invariants
        bool pass = true;
        double metric = 0.0;
        for (int t = 0; t < 50; ++t) {
            Rng sub = rng.fork(2000 + t);
            RadonMeasure mu = randomMeasure(tree, sub);
            StepFunction f = randomNonnegativeStepFunction(tree, sub, 4.0);
            double lambda = l1Norm(f, mu) / mu.total() * (1.0 + 4.0 * sub.uniform()) + 1e-9;
            CZReport rep = verifyCZ(czDecompose(f, mu, lambda), mu);
            pass = pass && rep.pass();
            metric = std::max(metric, rep.splitResidual);
        }
        push("cz_decomposition", pass, metric);
    }

    {  // Pointwise chain |Tf| <= T^max f <= M(Tf)
        double worst = 0.0;
        for (int t = 0; t < 30; ++t) {
            Rng sub = rng.fork(3000 + t);
            RadonMeasure mu = randomMeasure(tree, sub);
            StepFunction f = randomStepFunction(tree, sub);
            CoefficientField eps = randomCoefficientField(tree, sub);
            StepFunction Tf = applyMultiplier(f, eps, mu);
            StepFunction tmax = applyTmax(f, eps, mu);
            StepFunction mtf = maximalM(Tf, mu);
            for (std::uint64_t i = 0; i < f.size(); ++i) {
                if (mu.leafMass(i) <= 0.0) continue;
                worst = std::max(worst, std::fabs(Tf[i]) - tmax[i]);
                worst = std::max(worst, tmax[i] - mtf[i]);
            }
        }
        push("maximal_chain", worst <= 1e-12, worst);
    }

    {  // Weak (1,1) sharp constant for the dyadic maximal operator
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            Rng sub = rng.fork(4000 + t);
            RadonMeasure mu = randomMeasure(tree, sub);
            StepFunction f = randomStepFunction(tree, sub);
            double c = weakLevelSup(maximalM(f, mu), mu) / std::max(l1Norm(f, mu), 1e-300);
            worst = std::max(worst, c);
        }
        push("maximal_weak11", worst <= 1.0 + 1e-12, worst);
    }

    {  // Sparse construction: packing + finite domination
        bool pass = true;
        double worstC = 0.0;
        for (int t = 0; t < 20; ++t) {
            Rng sub = rng.fork(5000 + t);
            RadonMeasure mu = randomMeasure(tree, sub);
            StepFunction f = randomStepFunction(tree, sub);
            CoefficientField eps = randomCoefficientField(tree, sub);
            SparseHaarResult sh = buildSparseHaar(f, eps, mu);
            SparsenessReport rep = verifySparseness(sh.family, &mu);
            pass = pass && rep.pass && std::isfinite(sh.cEmp);
            worstC = std::max(worstC, sh.cEmp);
        }
        push("sparse_haar", pass, worstC);
    }

    {  // Duality of constants
        Rng sub = rng.fork(6000);
        RadonMeasure mu = randomMeasure(tree, sub);
        Weight w = randomWeight(tree, sub);
        CoefficientField eps = randomCoefficientField(tree, sub, 0.0, 1.0);
        double p = 1.5;
        double pPrime = holderConjugate(p);
        Weight sigma(w.dual(p));
        double lhs = epsQApConstant(sigma, mu, pPrime, 1.0, eps.tildeValues());
        double rhs = std::pow(epsQApConstant(w, mu, p, p - 1.0, eps.tildeValues()), pPrime / p);
        double diff = std::fabs(lhs - rhs) / std::max(1.0, rhs);
        push("duality_of_constants", diff <= 1e-10, diff);
    }

    {  // Paraproducts in the Lebesgue model
        auto leb = std::make_shared<RadonMeasure>(RadonMeasure::lebesgue(tree));
        Rng sub = rng.fork(7000);
        StepFunction b = randomStepFunction(tree, sub);
        HaarExpansion be = analyze(b, *leb);
        double worst = 0.0;
        for (int t = 0; t < 30; ++t) {
            Rng s2 = sub.fork(t);
            StepFunction f = randomStepFunction(tree, s2);
            StepFunction g = randomStepFunction(tree, s2);
            StepFunction pif = paraproduct(be, f, *leb, ParaproductVariant::Pi);
            StepFunction psg = paraproduct(be, g, *leb, ParaproductVariant::PiStar);
            worst = std::max(worst, std::fabs(pairing(pif, g, *leb) - pairing(f, psg, *leb)));
        }
        StepFunction ones = StepFunction::constant(tree, 1.0);
        StepFunction ps1 = paraproduct(be, ones, *leb, ParaproductVariant::PiStar);
        push("paraproduct_adjoint", worst <= 1e-12, worst);
        push("paraproduct_annihilates_one", ps1.maxAbs() == 0.0, ps1.maxAbs());
    }

    {  // Quadrature closed forms for omega(t) = sqrt(t)
        CompactCZKernel k = CompactCZKernel::make(1, ScalarMap::power(0.5),
                                                  ScalarMap::cutoffInvPower(1.0),
                                                  ScalarMap::cutoffPower(0.5),
                                                  ScalarMap::cutoffInvPower(1.0));
        double dini = kernelDiniDouble(k);
        double w1 = kernelW(k, 0.25);
        double e1 = std::fabs(dini - 4.0);
        double e2 = std::fabs(w1 - 2.0 * std::sqrt(0.25));
        push("dini_closed_form", e1 <= 1e-6, e1);
        push("w_closed_form", e2 <= 1e-6, e2);
    }

    return items;
}

}  // namespace dyad
