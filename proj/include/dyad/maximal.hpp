#pragma once

#include <algorithm>

#include "dyad/coefficients.hpp"
#include "dyad/measure.hpp"
#include "dyad/rng.hpp"

namespace dyad {

/// Leafwise sup over the ancestor chain of score(Q), restricted to cubes
/// where valid(Q); leaves with no valid ancestor get 0.
inline StepFunction leafChainSup(const TreePtr& tree,
                                 const std::vector<double>& score,
                                 const std::vector<char>& valid) {
    const DyadicTree& t = *tree;
    std::vector<double> best(t.cubeCount(), 0.0);
    std::vector<char> any(t.cubeCount(), 0);
    best[0] = valid[0] ? score[0] : 0.0;
    any[0] = valid[0];
    for (int level = 0; level < t.depth(); ++level) {
        for (std::uint64_t k = 0; k < t.levelCount(level); ++k) {
            std::uint64_t fq = t.levelOffset(level) + k;
            CubeId q = t.cubeAt(fq);
            for (const CubeId& c : t.children(q)) {
                std::uint64_t fc = t.flatIndex(c);
                double b = best[fq];
                char a = any[fq];
                if (valid[fc]) {
                    b = a ? std::max(b, score[fc]) : score[fc];
                    a = 1;
                }
                best[fc] = b;
                any[fc] = a;
            }
        }
    }
    std::vector<double> leaf(t.leafCount());
    std::uint64_t off = t.levelOffset(t.depth());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i)
        leaf[i] = any[off + i] ? best[off + i] : 0.0;
    return StepFunction(tree, std::move(leaf));
}

/// Dyadic Hardy-Littlewood maximal operator Mf(x) = sup_{Q∋x} <|f|>_Q.
/// Cubes with mu(Q) = 0 carry no average and are skipped.
inline StepFunction maximalM(const StepFunction& f, const RadonMeasure& mu) {
    const DyadicTree& t = *f.tree();
    std::vector<double> massAbs(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) massAbs[i] = std::fabs(f[i]) * mu.leafMass(i);
    std::vector<double> absSums = cubeSums(t, massAbs);
    std::vector<double> score(t.cubeCount(), 0.0);
    std::vector<char> valid(t.cubeCount(), 0);
    for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat) {
        double m = mu.massFlat(flat);
        if (m > 0.0) {
            score[flat] = absSums[flat] / m;
            valid[flat] = 1;
        }
    }
    return leafChainSup(f.tree(), score, valid);
}

/// Auxiliary maximal function
/// M_eps f(x) = sup_{Q∋x, Q non-leaf} max_{Q'∈ch(Q)} |eps_{Q'}| <|f|>_Q.
inline StepFunction maximalMeps(const StepFunction& f, const RadonMeasure& mu,
                                const CoefficientField& eps) {
    const DyadicTree& t = *f.tree();
    std::vector<double> massAbs(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) massAbs[i] = std::fabs(f[i]) * mu.leafMass(i);
    std::vector<double> absSums = cubeSums(t, massAbs);
    std::vector<double> score(t.cubeCount(), 0.0);
    std::vector<char> valid(t.cubeCount(), 0);
    for (int level = 0; level < t.depth(); ++level) {  // non-leaf cubes only
        for (std::uint64_t k = 0; k < t.levelCount(level); ++k) {
            std::uint64_t fq = t.levelOffset(level) + k;
            double m = mu.massFlat(fq);
            if (m <= 0.0) continue;
            CubeId q = t.cubeAt(fq);
            double cmax = 0.0;
            for (const CubeId& c : t.children(q))
                cmax = std::max(cmax, std::fabs(eps.epsFlat(t.flatIndex(c))));
            score[fq] = cmax * absSums[fq] / m;
            valid[fq] = 1;
        }
    }
    return leafChainSup(f.tree(), score, valid);
}

/// Weighted maximal function M_w f(x) = sup_{Q∋x} w(Q)^{-1} ∫_Q |f| w dmu.
inline StepFunction maximalMw(const StepFunction& f, const RadonMeasure& mu, const Weight& w) {
    const DyadicTree& t = *f.tree();
    std::vector<double> fw(t.leafCount()), wm(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
        fw[i] = std::fabs(f[i]) * w[i] * mu.leafMass(i);
        wm[i] = w[i] * mu.leafMass(i);
    }
    std::vector<double> num = cubeSums(t, fw);
    std::vector<double> den = cubeSums(t, wm);
    std::vector<double> score(t.cubeCount(), 0.0);
    std::vector<char> valid(t.cubeCount(), 0);
    for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat) {
        if (den[flat] > 0.0) {
            score[flat] = num[flat] / den[flat];
            valid[flat] = 1;
        }
    }
    return leafChainSup(f.tree(), score, valid);
}

/// [w]_{A_p} = sup over cubes with mu(Q) > 0 of <w>_Q <w^{1-p'}>_Q^{p-1}.
/// The supremum runs over tree cubes; reported constants are grid-relative.
inline double apConstant(const Weight& w, const RadonMeasure& mu, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("apConstant: p must be in (1, inf)");
    const DyadicTree& t = *w.fn().tree();
    StepFunction sigma = w.dual(p);
    std::vector<double> wm(t.leafCount()), sm(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
        wm[i] = w[i] * mu.leafMass(i);
        sm[i] = sigma[i] * mu.leafMass(i);
    }
    std::vector<double> wSums = cubeSums(t, wm);
    std::vector<double> sSums = cubeSums(t, sm);
    double sup = 0.0;
    for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat) {
        double m = mu.massFlat(flat);
        if (m <= 0.0) continue;
        double val = (wSums[flat] / m) * std::pow(sSums[flat] / m, p - 1.0);
        sup = std::max(sup, val);
    }
    return sup;
}

/// [w]_{eps^q A_p} with an arbitrary per-cube coefficient sequence: callers
/// pass either eps_Q or the running sup epsTilde_Q.
inline double epsQApConstant(const Weight& w, const RadonMeasure& mu, double p, double q,
                             const std::vector<double>& coeffPerCube) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("epsQApConstant: p must be in (1, inf)");
    if (!(q > 0.0)) throw Error("epsQApConstant: q must be positive");
    const DyadicTree& t = *w.fn().tree();
    if (coeffPerCube.size() != t.cubeCount()) throw Error("epsQApConstant: coefficient size mismatch");
    StepFunction sigma = w.dual(p);
    std::vector<double> wm(t.leafCount()), sm(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
        wm[i] = w[i] * mu.leafMass(i);
        sm[i] = sigma[i] * mu.leafMass(i);
    }
    std::vector<double> wSums = cubeSums(t, wm);
    std::vector<double> sSums = cubeSums(t, sm);
    double sup = 0.0;
    for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat) {
        double m = mu.massFlat(flat);
        if (m <= 0.0) continue;
        double val = std::pow(std::fabs(coeffPerCube[flat]), q) * (wSums[flat] / m) *
                     std::pow(sSums[flat] / m, p - 1.0);
        sup = std::max(sup, val);
    }
    return sup;
}

/// Exact sup over lambda of lambda * mu({|g| >= lambda}); attained at the
/// level-set jumps of the step function.
inline double weakLevelSup(const StepFunction& g, const RadonMeasure& mu) {
    std::vector<std::pair<double, double>> vm;
    vm.reserve(g.size());
    for (std::uint64_t i = 0; i < g.size(); ++i) {
        double v = std::fabs(g[i]);
        if (v > 0.0 && mu.leafMass(i) > 0.0) vm.emplace_back(v, mu.leafMass(i));
    }
    std::sort(vm.begin(), vm.end(), [](auto& a, auto& b) { return a.first > b.first; });
    double cum = 0.0, best = 0.0;
    for (auto& [v, m] : vm) {
        cum += m;
        best = std::max(best, v * cum);
    }
    return best;
}

struct WeakTypeReport {
    double maxConstant = 0.0;
    double meanConstant = 0.0;
    int trials = 0;
    int gridPoints = 64;
};

/// Empirical weak-type constant of an operator handle over random trials.
/// For each trial draws f, evaluates lambda*mu({|op f| > lambda}) over a
/// geometric lambda grid spanning the nonzero value range of op f, and
/// normalizes by scale * ||f||_1.
template <typename OpFn, typename SampleFn>
WeakTypeReport weakTypeEstimate(OpFn&& op, const RadonMeasure& mu, int trials,
                                SampleFn&& sample, double scale = 1.0, int gridPoints = 64) {
    if (trials < 1) throw Error("weakTypeEstimate: trials must be >= 1");
    WeakTypeReport rep;
    rep.trials = trials;
    rep.gridPoints = gridPoints;
    double sum = 0.0;
    for (int tIdx = 0; tIdx < trials; ++tIdx) {
        StepFunction f = sample(tIdx);
        StepFunction g = op(f);
        double l1 = l1Norm(f, mu);
        double lo = 0.0, hi = 0.0;
        for (std::uint64_t i = 0; i < g.size(); ++i) {
            double v = std::fabs(g[i]);
            if (v > 0.0 && mu.leafMass(i) > 0.0) {
                lo = (lo == 0.0) ? v : std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (hi == 0.0) continue;  // zero output: contributes 0
        if (scale * l1 <= 0.0)
            throw Error("weakTypeEstimate: nonzero operator output with zero normalization");
        double best = 0.0;
        for (int k = 0; k < gridPoints; ++k) {
            double lambda = lo * std::pow(hi / lo, (k + 0.5) / gridPoints);
            double mass = 0.0;
            for (std::uint64_t i = 0; i < g.size(); ++i)
                if (std::fabs(g[i]) > lambda) mass += mu.leafMass(i);
            best = std::max(best, lambda * mass);
        }
        double c = best / (scale * l1);
        sum += c;
        rep.maxConstant = std::max(rep.maxConstant, c);
    }
    rep.meanConstant = sum / trials;
    return rep;
}

}  // namespace dyad
