#pragma once

// Shared fixtures and brute-force oracles. Oracles stay independent of the
// library code paths they check: they enumerate, sample grids, or assemble
// dense matrices from first principles.

#include <Eigen/Dense>

#include "dyad/dyad.hpp"

namespace fixtures {

using namespace dyad;

inline TreePtr unitTree(int n, int depth) {
    Box b;
    b.n = n;
    for (int i = 0; i < n; ++i) b.lo[i] = DyadicRational(0);
    b.side = DyadicRational(1);
    return std::make_shared<DyadicTree>(n, depth, b);
}

inline TreePtr boxTree(int n, int depth, double corner, double side) {
    Box b;
    b.n = n;
    for (int i = 0; i < n; ++i) b.lo[i] = DyadicRational::fromDouble(corner);
    b.side = DyadicRational::fromDouble(side);
    return std::make_shared<DyadicTree>(n, depth, b);
}

inline CubeId cube(int level, std::initializer_list<std::uint32_t> idx) {
    CubeId q;
    q.level = level;
    int i = 0;
    for (std::uint32_t v : idx) q.idx[i++] = v;
    return q;
}

/// Brute-force minimal covering cube: enumerate candidate sides and corner
/// placements on a fine grid and return the smallest side whose cube covers
/// both boxes. Assumes the inputs live on the same dyadic grid.
inline double oracleMinCoverSide(const Box& a, const Box& b, int gridExp) {
    int n = a.n;
    double step = std::ldexp(1.0, -gridExp);
    double loAll = std::numeric_limits<double>::infinity();
    double hiAll = -loAll;
    for (int i = 0; i < n; ++i) {
        loAll = std::min({loAll, a.lo[i].toDouble(), b.lo[i].toDouble()});
        hiAll = std::max({hiAll, a.hi(i).toDouble(), b.hi(i).toDouble()});
    }
    auto covers = [&](double side) {
        // Try every corner placement on the grid within the hull.
        std::vector<long> steps(n);
        long maxSteps = static_cast<long>(std::round((hiAll - loAll) / step)) + 1;
        std::vector<long> counter(n, 0);
        while (true) {
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) {
                double lo = loAll + static_cast<double>(counter[i]) * step;
                double hi = lo + side;
                ok = lo <= std::min(a.lo[i].toDouble(), b.lo[i].toDouble()) + 1e-12 &&
                     hi >= std::max(a.hi(i).toDouble(), b.hi(i).toDouble()) - 1e-12;
            }
            if (ok) return true;
            int d = 0;
            while (d < n && ++counter[d] >= maxSteps) counter[d++] = 0;
            if (d == n) return false;
        }
    };
    for (long s = 1;; ++s) {
        double side = static_cast<double>(s) * step;
        if (covers(side)) return side;
    }
}

/// Exhaustive point-grid distance from box J to the inner boundary of I.
inline double oracleInnerBoundaryDist(const Box& outer, const Box& innerBoxJ, int gridExp) {
    int n = outer.n;
    double step = std::ldexp(outer.side.toDouble(), -gridExp);
    double best = std::numeric_limits<double>::infinity();
    // Sample each child-boundary plane on a grid passing through all corners.
    for (int axis = 0; axis < n; ++axis) {
        for (int k = 0; k <= 2; ++k) {
            double plane = outer.lo[axis].toDouble() + 0.5 * k * outer.side.toDouble();
            // iterate grid points over the other axes
            std::uint64_t pts = 1;
            int steps = (1 << gridExp) + 1;
            for (int i = 0; i < n - 1; ++i) pts *= steps;
            for (std::uint64_t p = 0; p < pts; ++p) {
                double point[kMaxDim];
                std::uint64_t rem = p;
                int slot = 0;
                for (int i = 0; i < n; ++i) {
                    if (i == axis) {
                        point[i] = plane;
                    } else {
                        point[i] = outer.lo[i].toDouble() + step * static_cast<double>(rem % steps);
                        rem /= steps;
                        ++slot;
                    }
                }
                double d2 = 0.0;
                for (int i = 0; i < n; ++i) {
                    double lo = innerBoxJ.lo[i].toDouble(), hi = innerBoxJ.hi(i).toDouble();
                    double g = std::max({0.0, lo - point[i], point[i] - hi});
                    d2 += g * g;
                }
                best = std::min(best, std::sqrt(d2));
            }
        }
    }
    return best;
}

/// Dense multiplier matrix assembled from explicitly realized Haar functions:
/// M = sum_Q eps_Q (h_Q ⊗ h_Q dmu). Independent of analyze/synthesize.
inline Eigen::MatrixXd oracleMultiplierMatrix(const TreePtr& tree, const RadonMeasure& mu,
                                              const CoefficientField& eps) {
    const DyadicTree& t = *tree;
    auto k = static_cast<Eigen::Index>(t.leafCount());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
    for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat) {
        if (mu.massFlat(flat) <= 0.0) continue;
        HaarFunction h = haarFunction(tree, mu, t.cubeAt(flat));
        double e = eps.epsFlat(flat);
        if (e == 0.0) continue;
        for (std::uint64_t x = 0; x < t.leafCount(); ++x) {
            if (h.realization[x] == 0.0) continue;
            for (std::uint64_t y = 0; y < t.leafCount(); ++y)
                M(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) +=
                    e * h.realization[x] * h.realization[y] * mu.leafMass(y);
        }
    }
    return M;
}

/// Exhaustive T^max oracle: for each leaf, enumerate every truncation cube Q
/// in the tree and every P with parent(P) a strict ancestor of Q, and sum
/// eps_P <f,h_P> h_P at the leaf from realized Haar functions.
inline StepFunction oracleTmax(const TreePtr& tree, const RadonMeasure& mu,
                               const CoefficientField& eps, const StepFunction& f) {
    const DyadicTree& t = *tree;
    // realized Haar data and coefficients
    std::vector<double> coeff(t.cubeCount(), 0.0);
    std::vector<StepFunction> hs(t.cubeCount(), StepFunction::zero(tree));
    for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat) {
        if (mu.massFlat(flat) <= 0.0) continue;
        HaarFunction h = haarFunction(tree, mu, t.cubeAt(flat));
        hs[flat] = h.realization;
        coeff[flat] = pairing(f, h.realization, mu);
    }
    StepFunction out = StepFunction::zero(tree);
    for (std::uint64_t leaf = 0; leaf < t.leafCount(); ++leaf) {
        double best = 0.0;
        for (std::uint64_t fq = 0; fq < t.cubeCount(); ++fq) {
            CubeId truncation = t.cubeAt(fq);
            double sum = 0.0;
            for (std::uint64_t fp = 1; fp < t.cubeCount(); ++fp) {
                if (mu.massFlat(fp) <= 0.0) continue;
                CubeId p = t.cubeAt(fp);
                CubeId par = t.parent(p);
                if (!t.isStrictAncestorOf(par, truncation)) continue;  // need P^ ⊋ Q
                sum += eps.epsFlat(fp) * coeff[fp] * hs[fp][leaf];
            }
            best = std::max(best, std::fabs(sum));
        }
        out[leaf] = best;
    }
    return out;
}

}  // namespace fixtures
