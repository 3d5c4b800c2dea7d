#pragma once

#include "dyad/coefficients.hpp"
#include "dyad/measure.hpp"
#include "dyad/rng.hpp"

namespace dyad {

inline StepFunction randomStepFunction(const TreePtr& tree, Rng& rng, double lo = -1.0,
                                       double hi = 1.0) {
    StepFunction f = StepFunction::zero(tree);
    for (std::uint64_t i = 0; i < f.size(); ++i) f[i] = rng.uniform(lo, hi);
    return f;
}

inline StepFunction randomNonnegativeStepFunction(const TreePtr& tree, Rng& rng, double hi = 1.0) {
    StepFunction f = StepFunction::zero(tree);
    for (std::uint64_t i = 0; i < f.size(); ++i) f[i] = rng.uniform(0.0, hi);
    return f;
}

/// Random measure with an optional fraction of mass-null leaves.
inline RadonMeasure randomMeasure(const TreePtr& tree, Rng& rng, double zeroFraction = 0.0) {
    std::vector<double> m(tree->leafCount());
    bool anyPositive = false;
    for (std::uint64_t i = 0; i < tree->leafCount(); ++i) {
        if (zeroFraction > 0.0 && rng.uniform() < zeroFraction) {
            m[i] = 0.0;
        } else {
            m[i] = 0.05 + rng.uniform();
            anyPositive = true;
        }
    }
    if (!anyPositive) m[0] = 1.0;
    return RadonMeasure(tree, std::move(m));
}

/// Moderate-condition random weight w = exp(uniform(-spread, spread)).
inline Weight randomWeight(const TreePtr& tree, Rng& rng, double spread = 1.5) {
    StepFunction w = StepFunction::zero(tree);
    for (std::uint64_t i = 0; i < w.size(); ++i) w[i] = std::exp(rng.uniform(-spread, spread));
    return Weight(w);
}

inline CoefficientField randomCoefficientField(const TreePtr& tree, Rng& rng, double lo = -1.0,
                                               double hi = 1.0) {
    std::vector<double> v(tree->cubeCount());
    for (auto& x : v) x = rng.uniform(lo, hi);
    return CoefficientField(tree, std::move(v));
}

}  // namespace dyad
