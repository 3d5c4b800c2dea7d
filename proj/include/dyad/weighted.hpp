#pragma once

#include "dyad/geometry.hpp"
#include "dyad/linalg.hpp"
#include "dyad/rng.hpp"
#include "dyad/sparse.hpp"

namespace dyad {

/// Coefficient split along the lagom family D_N.
struct ProjectionSpec {
    int N = 1;
    std::vector<char> lagom;  // per flat cube index

    ProjectionSpec(const DyadicTree& tree, int n) : N(n), lagom(lagomMask(tree, n)) {}
};

struct ProjectionResult {
    StepFunction head;  // P_N f
    StepFunction tail;  // P_N^perp f = full reconstruction minus head
};

/// P_N f synthesizes the coefficients supported on D_N; P_N^perp f is defined
/// as (I - P_N) applied to the reconstructed part, so head + tail equals
/// synthesize(analyze(f)) bit-for-bit.
inline ProjectionResult project(const StepFunction& f, const ProjectionSpec& spec,
                                const RadonMeasure& mu) {
    HaarExpansion e = analyze(f, mu);
    StepFunction full = synthesize(e, mu);
    HaarExpansion headE = e.masked(spec.lagom);
    StepFunction head = synthesize(headE, mu);
    return {head, full - head};
}

/// Multiplier with coefficients restricted to the lagom complement.
inline StepFunction applyTailMultiplier(const StepFunction& f, const CoefficientField& eps,
                                        const RadonMeasure& mu, const std::vector<char>& lagom) {
    HaarExpansion e = analyze(f, mu);
    for (std::uint64_t flat = 0; flat < e.coefficients().size(); ++flat)
        e.coefficients()[flat] = lagom[flat] ? 0.0 : eps.epsFlat(flat) * e.coeffFlat(flat);
    return synthesize(e, mu);
}

struct WeightedBoundReport {
    double bound = 0.0;             // B(p, w, eps): the theorem's right-hand constant
    double maxRatio = 0.0;          // max_t ||Tf_t|| / ||f_t|| in L^p(w)
    double maxNormalizedRatio = 0.0;
    double dualityConstantLhs = 0.0;  // [sigma]_{tilde-eps A_{p'}}
    double dualityConstantRhs = 0.0;  // [w]_{tilde-eps^{p-1} A_p}^{p'/p}
    double dualityNormMaxDiff = 0.0;  // matched-sample operator-norm transfer residual
    double holderMaxExcess = 0.0;     // max over random E of mu(E) - w(E)^{1/p} sigma(E)^{1/p'}
    bool coresDisjoint = true;
    bool coresHalfMass = true;
    int trials = 0;
};

/// Randomized verification harness for the weighted multiplier bound: ratio
/// statistics against B(p,w,eps), the duality-of-constants identity, the
/// Holder step, and the disjoint-core inequalities of the constructed sparse
/// families.
inline WeightedBoundReport weightedBoundCheck(const CoefficientField& eps, const Weight& w,
                                              const RadonMeasure& mu, double p, int trials,
                                              std::uint64_t seed) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("weightedBoundCheck: p must be in (1, inf)");
    const TreePtr& tree = eps.tree();
    const DyadicTree& t = *tree;
    double pPrime = holderConjugate(p);

    WeightedBoundReport rep;
    rep.trials = trials;
    rep.bound = (p >= 2.0)
                    ? epsQApConstant(w, mu, p, 1.0, eps.tildeValues())
                    : std::pow(epsQApConstant(w, mu, p, p - 1.0, eps.tildeValues()), pPrime / p);

    // Duality of constants: [sigma]_{eA_{p'}} = [w]_{e^{p-1}A_p}^{p'/p} on the
    // tree-restricted suprema.
    StepFunction sigmaFn = w.dual(p);
    Weight sigma(sigmaFn);
    rep.dualityConstantLhs = epsQApConstant(sigma, mu, pPrime, 1.0, eps.tildeValues());
    rep.dualityConstantRhs = std::pow(epsQApConstant(w, mu, p, p - 1.0, eps.tildeValues()), pPrime / p);

    Rng rng(seed);
    for (int trial = 0; trial < trials; ++trial) {
        Rng sub = rng.fork(trial);
        StepFunction f = StepFunction::zero(tree);
        for (std::uint64_t i = 0; i < t.leafCount(); ++i) f[i] = sub.uniform(-1.0, 1.0);
        double nf = lpNormWeighted(f, mu, w.fn(), p);
        if (nf <= 0.0) continue;
        StepFunction Tf = applyMultiplier(f, eps, mu);
        double ratio = lpNormWeighted(Tf, mu, w.fn(), p) / nf;
        rep.maxRatio = std::max(rep.maxRatio, ratio);
        if (rep.bound > 0.0)
            rep.maxNormalizedRatio = std::max(rep.maxNormalizedRatio, ratio / rep.bound);

        // Operator-norm transfer ||T||_{L^p(w)} = ||T(. sigma)||_{L^p(sigma)->L^p(w)}:
        // with g = f / sigma the two Rayleigh ratios coincide identically.
        StepFunction g = f;
        for (std::uint64_t i = 0; i < g.size(); ++i) g[i] /= sigmaFn[i];
        StepFunction gSigma = g;
        for (std::uint64_t i = 0; i < gSigma.size(); ++i) gSigma[i] *= sigmaFn[i];
        double lhs = lpNormWeighted(applyMultiplier(gSigma, eps, mu), mu, w.fn(), p) /
                     lpNormWeighted(g, mu, sigmaFn, p);
        rep.dualityNormMaxDiff = std::max(rep.dualityNormMaxDiff, std::fabs(lhs - ratio));
    }

    // Holder step mu(E) <= w(E)^{1/p} sigma(E)^{1/p'} on random leaf unions.
    Rng holderRng(seed ^ 0x48656C64ull);
    for (int k = 0; k < 200; ++k) {
        double muE = 0.0, wE = 0.0, sE = 0.0;
        for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
            if (holderRng.uniform() < 0.5) continue;
            muE += mu.leafMass(i);
            wE += w[i] * mu.leafMass(i);
            sE += sigmaFn[i] * mu.leafMass(i);
        }
        double rhs = std::pow(wE, 1.0 / p) * std::pow(sE, 1.0 / pPrime);
        rep.holderMaxExcess = std::max(rep.holderMaxExcess, muE - rhs);
    }

    // Proof-set inequalities on a constructed sparse family.
    Rng famRng(seed ^ 0x5370617273ull);
    StepFunction f = StepFunction::zero(tree);
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) f[i] = famRng.uniform(0.0, 1.0);
    SparseHaarResult sh = buildSparseHaar(f, eps, mu);
    DisjointCores cores = disjointCores(sh.family, mu);
    rep.coresDisjoint = cores.disjoint;
    rep.coresHalfMass = cores.halfMass;
    return rep;
}

struct CompactnessRow {
    int N = 0;
    double tailCoeffSup = 0.0;
    double bound = 0.0;              // tailCoeffSup * [w]_{A_p}^{max(1, p'/p)}
    double tailNormEmpirical = 0.0;  // sup over random unit f of ||T_tail f||_{L^p(w)}
    double tailNormExact = 0.0;      // exact L^2(w dmu) operator norm of the tail
    double svAtHeadRank = 0.0;       // singular value of T at the head-rank index
};

struct CompactnessReport {
    std::vector<CompactnessRow> rows;
    double apConst = 0.0;
    double frameKappa = 0.0;  // ||synthesis|| * ||analysis|| in L^2(w dmu)
    bool supMonotone = true;  // tailCoeffSup nonincreasing in N
};

/// Frame transfer constant in the L^2(w dmu) geometry: the product of the
/// analysis and synthesis operator norms. Any coefficient multiplier with
/// sup |eps| <= s has L^2(w) norm at most kappa * s.
inline double frameTransferConstant(const RadonMeasure& mu, const Weight& w) {
    const DyadicTree& t = *mu.tree();
    std::vector<std::uint64_t> rows;
    for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat)
        if (mu.massFlat(flat) > 0.0) rows.push_back(flat);
    std::vector<double> nu(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) nu[i] = w[i] * mu.leafMass(i);
    std::vector<Eigen::Index> keep;
    for (std::uint64_t i = 0; i < t.leafCount(); ++i)
        if (nu[i] > 0.0) keep.push_back(static_cast<Eigen::Index>(i));
    if (keep.empty() || rows.empty()) return 0.0;

    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep.size()));
    Eigen::MatrixXd S(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(rows.size()));
    A.setZero();
    S.setZero();
    std::vector<Eigen::Index> pos(t.leafCount(), -1);
    for (std::size_t a = 0; a < keep.size(); ++a) pos[static_cast<std::uint64_t>(keep[a])] =
        static_cast<Eigen::Index>(a);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        CubeId q = t.cubeAt(rows[r]);
        double mQ = mu.massFlat(rows[r]);
        CubeId par = t.parent(q);
        double mP = mu.mass(par);
        double s = std::sqrt(mQ);
        auto row = static_cast<Eigen::Index>(r);
        t.forEachLeafUnder(par, [&](std::uint64_t i) {
            if (pos[i] < 0) return;
            double hv = -s / mP;
            A(row, pos[i]) += hv * mu.leafMass(i) / std::sqrt(nu[i]);
            S(pos[i], row) += hv * std::sqrt(nu[i]);
        });
        t.forEachLeafUnder(q, [&](std::uint64_t i) {
            if (pos[i] < 0) return;
            double hv = 1.0 / s;
            A(row, pos[i]) += hv * mu.leafMass(i) / std::sqrt(nu[i]);
            S(pos[i], row) += hv * std::sqrt(nu[i]);
        });
    }
    return spectralNorm(A) * spectralNorm(S);
}

/// Tail-operator scan for a Haar multiplier: per N the tail coefficient sup,
/// the theorem's bound, the empirical L^p(w) tail norm, the exact L^2(w dmu)
/// tail norm, and the singular value of the full operator at the head rank.
inline CompactnessReport compactnessScanMultiplier(const CoefficientField& eps, const Weight& w,
                                                   const RadonMeasure& mu, double p,
                                                   const std::vector<int>& nList, int trials,
                                                   std::uint64_t seed) {
    for (std::size_t i = 1; i < nList.size(); ++i)
        if (nList[i] <= nList[i - 1]) throw Error("compactnessScanMultiplier: N_list must increase");
    const TreePtr& tree = eps.tree();
    const DyadicTree& t = *tree;
    double pPrime = holderConjugate(p);

    CompactnessReport rep;
    rep.apConst = apConstant(w, mu, p);
    rep.frameKappa = frameTransferConstant(mu, w);

    std::vector<double> nu(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) nu[i] = w[i] * mu.leafMass(i);
    Eigen::MatrixXd Mfull = assembleMatrix(tree, [&](const StepFunction& e) {
        return applyMultiplier(e, eps, mu);
    });
    std::vector<double> fullSv = weightedSingularValues(Mfull, nu);

    double prevSup = std::numeric_limits<double>::infinity();
    for (int N : nList) {
        CompactnessRow row;
        row.N = N;
        std::vector<char> lagom = lagomMask(t, N);
        double sup = 0.0;
        std::uint64_t headCoeffs = 0;
        for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat) {
            if (!lagom[flat])
                sup = std::max(sup, std::fabs(eps.epsFlat(flat)));
            else if (flat >= 1 && mu.massFlat(flat) > 0.0)
                ++headCoeffs;
        }
        row.tailCoeffSup = sup;
        row.bound = sup * std::pow(rep.apConst, std::max(1.0, pPrime / p));

        Eigen::MatrixXd Mtail = assembleMatrix(tree, [&](const StepFunction& e) {
            return applyTailMultiplier(e, eps, mu, lagom);
        });
        row.tailNormExact = weightedSpectralNorm(Mtail, nu);

        Rng rng(seed ^ static_cast<std::uint64_t>(N) * 0x9E37ull);
        for (int trial = 0; trial < trials; ++trial) {
            StepFunction f = StepFunction::zero(tree);
            for (std::uint64_t i = 0; i < t.leafCount(); ++i) f[i] = rng.uniform(-1.0, 1.0);
            double nf = lpNormWeighted(f, mu, w.fn(), p);
            if (nf <= 0.0) continue;
            StepFunction g = applyTailMultiplier(f, eps, mu, lagom);
            row.tailNormEmpirical =
                std::max(row.tailNormEmpirical, lpNormWeighted(g, mu, w.fn(), p) / nf);
        }
        row.svAtHeadRank = headCoeffs < fullSv.size() ? fullSv[headCoeffs] : 0.0;
        if (sup > prevSup + 1e-15) rep.supMonotone = false;
        prevSup = sup;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace dyad
