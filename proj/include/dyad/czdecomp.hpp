#pragma once

#include "dyad/maximal.hpp"

namespace dyad {

/// Calderon-Zygmund decomposition f = g + sum_j b_j at height lambda.
struct CZDecomposition {
    StepFunction good;
    std::vector<CubeId> stoppingCubes;          // Q_j, pairwise disjoint, maximal
    std::vector<StepFunction> badParts;         // b_j, supported in parent(Q_j)
    double lambda = 0.0;
    StepFunction input;
};

/// Decomposition of a nonnegative f at height lambda over a finite measure:
/// Omega = {Mf > lambda} is the disjoint union of maximal cubes Q_j with
/// <f>_Q <= lambda < <f>_{Q_j} for every strict ancestor Q, and
///   g   = f 1_{Omega^c} + sum_j <f 1_{Q_j}>_{Q_j^} 1_{Q_j^},
///   b_j = f 1_{Q_j} - <f 1_{Q_j}>_{Q_j^} 1_{Q_j^}.
/// The finite-measure height restriction lambda > ||f||_1 / mu(root) keeps the
/// root out of the stopping family, so every Q_j has a parent.
inline CZDecomposition czDecompose(const StepFunction& f, const RadonMeasure& mu, double lambda) {
    const DyadicTree& t = *f.tree();
    for (std::uint64_t i = 0; i < f.size(); ++i)
        if (f[i] < 0.0) throw Error("czDecompose: f must be nonnegative");
    if (!(mu.total() > 0.0)) throw Error("czDecompose: zero measure");
    double l1 = l1Norm(f, mu);
    if (!(lambda > l1 / mu.total()))
        throw Error("czDecompose: lambda must exceed ||f||_1 / mu(root) = " +
                    std::to_string(l1 / mu.total()));

    std::vector<double> fm(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) fm[i] = f[i] * mu.leafMass(i);
    std::vector<double> sums = cubeSums(t, fm);

    CZDecomposition d;
    d.lambda = lambda;
    d.input = f;

    // Depth-first maximal-cube selection; mass-null subtrees hold no averages.
    std::vector<CubeId> stack{t.root()};
    while (!stack.empty()) {
        CubeId q = stack.back();
        stack.pop_back();
        double m = mu.mass(q);
        if (m <= 0.0) continue;
        if (sums[t.flatIndex(q)] / m > lambda) {
            d.stoppingCubes.push_back(q);
            continue;
        }
        if (!t.isLeaf(q))
            for (const CubeId& c : t.children(q)) stack.push_back(c);
    }

    StepFunction good = f;
    for (const CubeId& q : d.stoppingCubes)
        t.forEachLeafUnder(q, [&](std::uint64_t i) { good[i] = 0.0; });

    for (const CubeId& q : d.stoppingCubes) {
        // The height restriction keeps the root unselected; the fallback uses
        // the cube itself if a caller ever disables the check.
        CubeId p = t.isRoot(q) ? q : t.parent(q);
        double mP = mu.mass(p);
        double avg = sums[t.flatIndex(q)] / mP;
        StepFunction b = StepFunction::zero(f.tree());
        t.forEachLeafUnder(q, [&](std::uint64_t i) { b[i] = f[i]; });
        t.forEachLeafUnder(p, [&](std::uint64_t i) { b[i] -= avg; });
        t.forEachLeafUnder(p, [&](std::uint64_t i) { good[i] += avg; });
        d.badParts.push_back(std::move(b));
    }
    d.good = std::move(good);
    return d;
}

struct CZReport {
    double splitResidual = 0.0;       // max_x |f - g - sum b_j| over positive-mass leaves
    double goodEnergyRatio = 0.0;     // ||g||_2^2 / (lambda ||f||_1), must be <= 6
    double badL1Ratio = 0.0;          // sum ||b_j||_1 / ||f||_1, must be <= 3
    double stoppingMassRatio = 0.0;   // lambda * sum mu(Q_j) / ||f||_1, must be <= 1
    double maxMeanZeroResidual = 0.0; // max_j |∫ b_j dmu|
    double goodOffOmegaSup = 0.0;     // ess sup of f 1_{Omega^c}, must be <= lambda
    bool disjoint = true;
    bool maximal = true;
    bool pass(double tol = 1e-12) const {
        return splitResidual <= tol && goodEnergyRatio <= 6.0 + tol && badL1Ratio <= 3.0 + tol &&
               stoppingMassRatio <= 1.0 + tol && maxMeanZeroResidual <= tol && disjoint && maximal;
    }
};

/// Quantitative verification of a decomposition; reports every ratio rather
/// than silently passing.
inline CZReport verifyCZ(const CZDecomposition& d, const RadonMeasure& mu) {
    const StepFunction& f = d.input;
    const DyadicTree& t = *f.tree();
    CZReport rep;
    double l1 = l1Norm(f, mu);

    StepFunction resid = f - d.good;
    for (const StepFunction& b : d.badParts) resid = resid - b;
    for (std::uint64_t i = 0; i < resid.size(); ++i)
        if (mu.leafMass(i) > 0.0) rep.splitResidual = std::max(rep.splitResidual, std::fabs(resid[i]));

    double g2 = 0.0;
    for (std::uint64_t i = 0; i < f.size(); ++i) g2 += d.good[i] * d.good[i] * mu.leafMass(i);
    rep.goodEnergyRatio = l1 > 0.0 ? g2 / (d.lambda * l1) : 0.0;

    double bl1 = 0.0;
    for (const StepFunction& b : d.badParts) bl1 += l1Norm(b, mu);
    rep.badL1Ratio = l1 > 0.0 ? bl1 / l1 : 0.0;

    double qMass = 0.0;
    for (const CubeId& q : d.stoppingCubes) qMass += mu.mass(q);
    rep.stoppingMassRatio = l1 > 0.0 ? d.lambda * qMass / l1 : 0.0;

    for (const StepFunction& b : d.badParts) {
        double z = integrate(b, mu);
        rep.maxMeanZeroResidual = std::max(rep.maxMeanZeroResidual, std::fabs(z));
    }

    // Pairwise disjointness of the stopping cubes.
    for (std::size_t a = 0; a < d.stoppingCubes.size() && rep.disjoint; ++a)
        for (std::size_t b = a + 1; b < d.stoppingCubes.size(); ++b) {
            const CubeId &qa = d.stoppingCubes[a], &qb = d.stoppingCubes[b];
            if (t.isAncestorOf(qa, qb) || t.isAncestorOf(qb, qa)) {
                rep.disjoint = false;
                break;
            }
        }

    // Maximality: strict ancestors of stopping cubes have average <= lambda,
    // and {Mf > lambda} is covered by the stopping cubes.
    std::vector<double> fm(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) fm[i] = f[i] * mu.leafMass(i);
    std::vector<double> sums = cubeSums(t, fm);
    for (const CubeId& q : d.stoppingCubes) {
        CubeId a = q;
        while (!t.isRoot(a)) {
            a = t.parent(a);
            double m = mu.mass(a);
            if (m > 0.0 && sums[t.flatIndex(a)] / m > d.lambda) rep.maximal = false;
        }
    }
    StepFunction mf = maximalM(f, mu);
    std::vector<char> covered(t.leafCount(), 0);
    for (const CubeId& q : d.stoppingCubes)
        t.forEachLeafUnder(q, [&](std::uint64_t i) { covered[i] = 1; });
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
        if (mu.leafMass(i) > 0.0 && mf[i] > d.lambda && !covered[i]) rep.maximal = false;
        if (mu.leafMass(i) > 0.0 && !covered[i])
            rep.goodOffOmegaSup = std::max(rep.goodOffOmegaSup, std::fabs(f[i]));
    }
    return rep;
}

}  // namespace dyad
