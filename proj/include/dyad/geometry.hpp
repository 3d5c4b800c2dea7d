#pragma once

#include <optional>
#include <vector>

#include "dyad/tree.hpp"

namespace dyad {

/// Smallest cube containing A ∪ B. Among minimal-side placements the center is
/// chosen closest to the origin (componentwise clamp, which minimizes |c|);
/// that choice is unique, with the lexicographically smallest corner as the
/// documented fallback rule. The result need not be dyadic.
inline Box bracketCube(const Box& a, const Box& b) {
    int n = a.n;
    DyadicRational h(0);
    std::array<DyadicRational, kMaxDim> lo{}, hi{};
    for (int i = 0; i < n; ++i) {
        lo[i] = minDR(a.lo[i], b.lo[i]);
        hi[i] = maxDR(a.hi(i), b.hi(i));
        h = maxDR(h, hi[i] - lo[i]);
    }
    Box out;
    out.n = n;
    out.side = h;
    for (int i = 0; i < n; ++i) {
        // Feasible centers: [hi - h/2, lo + h/2]; clamp 0 into it.
        DyadicRational cmin = hi[i] - h.div2();
        DyadicRational cmax = lo[i] + h.div2();
        DyadicRational c(0);
        if (c < cmin) c = cmin;
        if (cmax < c) c = cmax;
        out.lo[i] = c - h.div2();
    }
    return out;
}

inline const Box& largerOf(const Box& a, const Box& b) { return a.side < b.side ? b : a; }
inline const Box& smallerOf(const Box& a, const Box& b) { return a.side < b.side ? a : b; }

/// Eccentricity ec(I,J) = l(I∧J)/l(I∨J) in (0,1].
inline double eccentricity(const Box& a, const Box& b) {
    return smallerOf(a, b).side.toDouble() / largerOf(a, b).side.toDouble();
}

/// Ratio-form relative distance rdist(I,J) = l(<I,J>)/l(I∨J) >= 1.
inline double rdistRatio(const Box& a, const Box& b) {
    return bracketCube(a, b).side.toDouble() / largerOf(a, b).side.toDouble();
}

/// Additive-form relative distance 1 + dist(P,Q)/max{l(P), l(Q)}, used for
/// the lagom families.
inline double rdistLagom(const Box& a, const Box& b) {
    return 1.0 + boxDist(a, b) / largerOf(a, b).side.toDouble();
}

/// Additive-form relative distance to the ball of the given radius at the origin.
/// The ball's "side" is its bounding-cube side, i.e. the diameter.
inline double rdistLagomBall(const Box& a, const DyadicRational& radius) {
    double ballSide = 2.0 * radius.toDouble();
    double denom = std::max(a.side.toDouble(), ballSide);
    return 1.0 + boxBallDist(a, radius) / denom;
}

/// One face piece of an inner boundary: the hyperplane {x_axis = plane}
/// clipped to the carrier box's extent on the other axes.
struct FacePiece {
    int axis = 0;
    DyadicRational plane;
    Box carrier;  // extent on the non-degenerate axes

    DyadicRational distSqTo(const Box& j) const {
        DyadicRational s(0);
        for (int i = 0; i < carrier.n; ++i) {
            DyadicRational g = (i == axis)
                                   ? axisGap(j.lo[i], j.hi(i), plane, plane)
                                   : axisGap(j.lo[i], j.hi(i), carrier.lo[i], carrier.hi(i));
            s = s + g * g;
        }
        return s;
    }
};

/// Inner boundary of I: union over children I' of ∂I', i.e. the 3n grid planes
/// of I's children clipped to I.
inline std::vector<FacePiece> innerBoundary(const Box& cube) {
    std::vector<FacePiece> pieces;
    for (int axis = 0; axis < cube.n; ++axis) {
        for (int k = 0; k <= 2; ++k) {
            FacePiece f;
            f.axis = axis;
            f.plane = cube.lo[axis] + cube.side.div2() * DyadicRational(k);
            f.carrier = cube;
            pieces.push_back(f);
        }
    }
    return pieces;
}

/// Tree-cube form; the inner boundary needs children, so leaves are rejected.
inline std::vector<FacePiece> innerBoundaryOf(const DyadicTree& tree, const CubeId& q) {
    if (tree.isLeaf(q)) throw Error("innerBoundaryOf: leaf cube has no children");
    return innerBoundary(tree.box(q));
}

/// Exact squared distance from box J to the inner boundary of `cube`.
inline DyadicRational innerBoundaryDistSq(const Box& cube, const Box& j) {
    std::optional<DyadicRational> best;
    for (const FacePiece& f : innerBoundary(cube)) {
        DyadicRational s = f.distSqTo(j);
        if (!best || s < *best) best = s;
    }
    return *best;
}

/// Inner relative distance inrdist(I,J) = 1 + dist(J, D_I)/l(J), defined when J ⊆ 3I.
inline std::optional<double> innerRelativeDistance(const Box& outer, const Box& inner) {
    if (!outer.dilated(DyadicRational(3)).contains(inner)) return std::nullopt;
    DyadicRational d2 = innerBoundaryDistSq(outer, inner);
    if (d2.isZero()) return 1.0;  // exact touch
    return 1.0 + std::sqrt(d2.toDouble()) / inner.side.toDouble();
}

/// Same quantity extended past the J ⊆ 3I requirement (the formula itself is
/// total); used to make kernel-coefficient case splits total.
inline double innerRelativeDistanceTotal(const Box& outer, const Box& inner) {
    DyadicRational d2 = innerBoundaryDistSq(outer, inner);
    if (d2.isZero()) return 1.0;
    return 1.0 + std::sqrt(d2.toDouble()) / inner.side.toDouble();
}

struct GeometrySummary {
    double ec = 1.0;
    double rdist_geom = 1.0;   // ratio form
    double rdist_lagom = 1.0;  // additive form between the two cubes
    Box bracket;
    std::optional<double> inrdist;  // absent when I∧J is not inside 3(I∨J)
};

inline GeometrySummary geometry(const DyadicTree& tree, const CubeId& i, const CubeId& j) {
    Box a = tree.box(i), b = tree.box(j);
    GeometrySummary g;
    g.ec = eccentricity(a, b);
    g.bracket = bracketCube(a, b);
    g.rdist_geom = g.bracket.side.toDouble() / largerOf(a, b).side.toDouble();
    g.rdist_lagom = rdistLagom(a, b);
    g.inrdist = innerRelativeDistance(largerOf(a, b), smallerOf(a, b));
    return g;
}

/// Lagom cubes within the tree: side in [2^-N, 2^N] and additive rdist to the
/// ball of radius 2^N at most N.
inline std::vector<CubeId> lagomFamily(const DyadicTree& tree, int N) {
    if (N < 1) throw Error("lagomFamily: N must be >= 1");
    std::vector<CubeId> out;
    DyadicRational lowSide(1, N);                   // 2^-N
    DyadicRational highSide(std::int64_t(1) << N);  // 2^N
    DyadicRational radius = highSide;
    for (int level = 0; level <= tree.depth(); ++level) {
        DyadicRational side = tree.sideLength(level);
        if (side < lowSide || highSide < side) continue;
        for (std::uint64_t k = 0; k < tree.levelCount(level); ++k) {
            CubeId q = tree.cubeAt(tree.levelOffset(level) + k);
            if (rdistLagomBall(tree.box(q), radius) <= static_cast<double>(N)) out.push_back(q);
        }
    }
    return out;
}

/// Flat-index membership mask of the lagom family.
inline std::vector<char> lagomMask(const DyadicTree& tree, int N) {
    std::vector<char> mask(tree.cubeCount(), 0);
    for (const CubeId& q : lagomFamily(tree, N)) mask[tree.flatIndex(q)] = 1;
    return mask;
}

}  // namespace dyad
