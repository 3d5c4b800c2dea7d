#pragma once

#include "dyad/haar.hpp"
#include "dyad/maximal.hpp"

namespace dyad {

/// Haar multiplier Tf = sum over cubes of eps_Q <f, h_Q> h_Q (finite on the tree).
inline StepFunction applyMultiplier(const StepFunction& f, const CoefficientField& eps,
                                    const RadonMeasure& mu) {
    HaarExpansion e = analyze(f, mu);
    for (std::uint64_t flat = 0; flat < e.coefficients().size(); ++flat)
        e.coefficients()[flat] *= eps.epsFlat(flat);
    return synthesize(e, mu);
}

struct TruncationWalk {
    StepFunction full;    // T_Q0 f on the leaves (the complete sum)
    StepFunction maxAbs;  // sup over truncations of |partial sums|
};

/// Shared core of T^max and its subtree-localized variants.
///
/// For a leaf x under `start` with chain start = A_k ⊃ ... ⊃ A_L = x, the
/// two-level block at A_j is constant on each child; the partial sums of
/// blocks from the top equal the averages <T_start f>_{A_m}, and the walk
/// records their running maximum absolute value. `scaled` holds eps_Q <f,h_Q>
/// per cube (zero where no coefficient exists).
inline TruncationWalk truncationWalk(const TreePtr& tree, const RadonMeasure& mu,
                                     const std::vector<double>& scaled, const CubeId& start) {
    const DyadicTree& t = *tree;
    StepFunction full = StepFunction::zero(tree);
    StepFunction maxAbs = StepFunction::zero(tree);

    struct Node {
        CubeId cube;
        double prefix;
        double runMax;
    };
    std::vector<Node> stack;
    stack.push_back({start, 0.0, 0.0});
    while (!stack.empty()) {
        Node node = stack.back();
        stack.pop_back();
        if (t.isLeaf(node.cube)) {
            std::uint64_t i = t.leafIndex(node.cube);
            full[i] = node.prefix;
            maxAbs[i] = node.runMax;
            continue;
        }
        double mQ = mu.mass(node.cube);
        if (mQ <= 0.0) {
            // No Haar functions below; block contributions vanish mu-a.e.
            t.forEachLeafUnder(node.cube, [&](std::uint64_t i) {
                full[i] = node.prefix;
                maxAbs[i] = node.runMax;
            });
            continue;
        }
        double sAll = 0.0;  // sum over children of eps_C c_C sqrt(mu(C))
        for (const CubeId& c : t.children(node.cube)) {
            double mC = mu.mass(c);
            if (mC > 0.0) sAll += scaled[t.flatIndex(c)] * std::sqrt(mC);
        }
        for (const CubeId& c : t.children(node.cube)) {
            double mC = mu.mass(c);
            double block = -sAll / mQ;
            if (mC > 0.0) block += scaled[t.flatIndex(c)] / std::sqrt(mC);
            double prefix = node.prefix + block;
            double runMax = std::max(node.runMax, std::fabs(prefix));
            stack.push_back({c, prefix, runMax});
        }
    }
    return {std::move(full), std::move(maxAbs)};
}

/// Maximal truncation Haar multiplier
/// T^max f(x) = sup_Q | sum over P with P^ ⊋ Q of eps_P <f,h_P> h_P(x) |.
/// The truncation index runs over all tree cubes; empty sums give 0, so
/// T^max f >= 0 and |Tf| <= T^max f pointwise by construction.
inline StepFunction applyTmax(const StepFunction& f, const CoefficientField& eps,
                              const RadonMeasure& mu) {
    HaarExpansion e = analyze(f, mu);
    std::vector<double> scaled(e.coefficients().size());
    for (std::uint64_t flat = 0; flat < scaled.size(); ++flat)
        scaled[flat] = eps.epsFlat(flat) * e.coeffFlat(flat);
    return truncationWalk(f.tree(), mu, scaled, f.tree()->root()).maxAbs;
}

/// The bilinear identity <Tf, g> = sum eps_Q <f,h_Q><g,h_Q> (the frame is not
/// orthonormal, so this is the computable self-adjointness surrogate).
inline double multiplierBilinearForm(const StepFunction& f, const StepFunction& g,
                                     const CoefficientField& eps, const RadonMeasure& mu) {
    HaarExpansion ef = analyze(f, mu);
    HaarExpansion eg = analyze(g, mu);
    double s = 0.0;
    for (std::uint64_t flat = 1; flat < ef.coefficients().size(); ++flat)
        s += eps.epsFlat(flat) * ef.coeffFlat(flat) * eg.coeffFlat(flat);
    return s;
}

}  // namespace dyad
