#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dyad/rational.hpp"

namespace dyad {

/// Cube of the truncated dyadic grid: level in [0, depth], axis indices in [0, 2^level).
struct CubeId {
    int level = 0;
    std::array<std::uint32_t, kMaxDim> idx{};

    friend bool operator==(const CubeId& a, const CubeId& b) {
        return a.level == b.level && a.idx == b.idx;
    }
    friend bool operator!=(const CubeId& a, const CubeId& b) { return !(a == b); }
};

/// Finite dyadic grid of dimension n truncated to depth L below a single root box.
///
/// Every non-root cube has one parent, every non-leaf cube has 2^n children
/// partitioning it, and all coordinates stay dyadic-rational.
class DyadicTree {
public:
    static constexpr std::uint64_t kDefaultLeafCap = 1'000'000;

    DyadicTree(int n, int depth, Box rootBox, std::uint64_t leafCap = kDefaultLeafCap)
        : n_(n), depth_(depth), root_(rootBox) {
        if (n < 1 || n > kMaxDim) throw Error("DyadicTree: dimension out of range");
        if (depth < 1) throw Error("DyadicTree: depth must be >= 1");
        if (!(DyadicRational(0) < rootBox.side)) throw Error("DyadicTree: root side must be positive");
        if (rootBox.n != n) throw Error("DyadicTree: root box dimension mismatch");
        if (static_cast<std::uint64_t>(n) * depth >= 63)
            throw Error("DyadicTree: 2^(n*depth) exceeds index range");
        std::uint64_t leaves = std::uint64_t(1) << (n * depth);
        if (leaves > leafCap)
            throw Error("DyadicTree: leaf count " + std::to_string(leaves) +
                        " exceeds cap " + std::to_string(leafCap));
        levelOffset_.resize(depth + 2);
        levelOffset_[0] = 0;
        for (int l = 0; l <= depth; ++l)
            levelOffset_[l + 1] = levelOffset_[l] + (std::uint64_t(1) << (n * l));
    }

    int dimension() const { return n_; }
    int depth() const { return depth_; }
    const Box& rootBox() const { return root_; }

    std::uint64_t cubeCount() const { return levelOffset_[depth_ + 1]; }
    std::uint64_t leafCount() const { return std::uint64_t(1) << (n_ * depth_); }
    std::uint64_t levelCount(int level) const { return std::uint64_t(1) << (n_ * level); }

    CubeId root() const { return CubeId{}; }
    bool isRoot(const CubeId& q) const { return q.level == 0; }
    bool isLeaf(const CubeId& q) const { return q.level == depth_; }

    CubeId parent(const CubeId& q) const {
        if (q.level == 0) throw Error("DyadicTree: root has no parent");
        CubeId p;
        p.level = q.level - 1;
        for (int i = 0; i < n_; ++i) p.idx[i] = q.idx[i] >> 1;
        return p;
    }

    /// Ancestor at the given (shallower) level.
    CubeId ancestor(const CubeId& q, int level) const {
        if (level > q.level) throw Error("DyadicTree: ancestor level below cube");
        CubeId a;
        a.level = level;
        for (int i = 0; i < n_; ++i) a.idx[i] = q.idx[i] >> (q.level - level);
        return a;
    }

    std::vector<CubeId> children(const CubeId& q) const {
        if (isLeaf(q)) throw Error("DyadicTree: leaf has no children");
        std::vector<CubeId> out;
        out.reserve(std::size_t(1) << n_);
        for (std::uint32_t bits = 0; bits < (1u << n_); ++bits) {
            CubeId c;
            c.level = q.level + 1;
            for (int i = 0; i < n_; ++i) c.idx[i] = (q.idx[i] << 1) | ((bits >> i) & 1u);
            out.push_back(c);
        }
        return out;
    }

    bool isAncestorOf(const CubeId& a, const CubeId& q) const {
        if (a.level > q.level) return false;
        return ancestor(q, a.level) == a;
    }
    bool isStrictAncestorOf(const CubeId& a, const CubeId& q) const {
        return a.level < q.level && isAncestorOf(a, q);
    }

    /// Row-major flat index over all cubes, level by level.
    std::uint64_t flatIndex(const CubeId& q) const {
        std::uint64_t lin = 0;
        for (int i = n_ - 1; i >= 0; --i) lin = (lin << q.level) | q.idx[i];
        return levelOffset_[q.level] + lin;
    }

    CubeId cubeAt(std::uint64_t flat) const {
        int level = 0;
        while (flat >= levelOffset_[level + 1]) ++level;
        std::uint64_t lin = flat - levelOffset_[level];
        CubeId q;
        q.level = level;
        std::uint64_t mask = (std::uint64_t(1) << level) - 1;
        for (int i = 0; i < n_; ++i) {
            q.idx[i] = static_cast<std::uint32_t>(lin & mask);
            lin >>= level;
        }
        return q;
    }

    std::uint64_t leafIndex(const CubeId& leaf) const {
        return flatIndex(leaf) - levelOffset_[depth_];
    }
    CubeId leafAt(std::uint64_t leafIdx) const { return cubeAt(levelOffset_[depth_] + leafIdx); }
    std::uint64_t levelOffset(int level) const { return levelOffset_[level]; }

    DyadicRational sideLength(int level) const { return root_.side.div2(level); }

    Box box(const CubeId& q) const {
        Box b;
        b.n = n_;
        b.side = sideLength(q.level);
        for (int i = 0; i < n_; ++i)
            b.lo[i] = root_.lo[i] + DyadicRational(q.idx[i]) * b.side;
        return b;
    }

    std::array<DyadicRational, kMaxDim> center(const CubeId& q) const {
        Box b = box(q);
        std::array<DyadicRational, kMaxDim> c{};
        for (int i = 0; i < n_; ++i) c[i] = b.center(i);
        return c;
    }

    /// Visit every leaf under q, by leaf index.
    void forEachLeafUnder(const CubeId& q, const std::function<void(std::uint64_t)>& fn) const {
        int shift = depth_ - q.level;
        std::uint64_t span = std::uint64_t(1) << shift;
        std::uint64_t count = std::uint64_t(1) << (n_ * shift);
        for (std::uint64_t k = 0; k < count; ++k) {
            CubeId leaf;
            leaf.level = depth_;
            std::uint64_t rem = k;
            for (int i = 0; i < n_; ++i) {
                leaf.idx[i] = static_cast<std::uint32_t>((std::uint64_t(q.idx[i]) << shift) +
                                                         (rem % span));
                rem /= span;
            }
            fn(leafIndex(leaf));
        }
    }

    /// Smallest tree cube containing the leaf whose index is given, at each level:
    /// the chain root = c_0 ⊃ c_1 ⊃ ... ⊃ c_depth = leaf.
    CubeId chainCube(std::uint64_t leafIdx, int level) const {
        return ancestor(leafAt(leafIdx), level);
    }

private:
    int n_;
    int depth_;
    Box root_;
    std::vector<std::uint64_t> levelOffset_;
};

/// Bottom-up per-cube sums of leaf values: out[flat(Q)] = sum of leafValues under Q.
/// Parent values are defined as the exact sum of their children's values, so the
/// additivity invariant holds bit-for-bit.
inline std::vector<double> cubeSums(const DyadicTree& tree, const std::vector<double>& leafValues) {
    std::vector<double> out(tree.cubeCount(), 0.0);
    std::uint64_t leafOff = tree.levelOffset(tree.depth());
    for (std::uint64_t i = 0; i < tree.leafCount(); ++i) out[leafOff + i] = leafValues[i];
    for (int level = tree.depth() - 1; level >= 0; --level) {
        for (std::uint64_t k = 0; k < tree.levelCount(level); ++k) {
            CubeId q = tree.cubeAt(tree.levelOffset(level) + k);
            double s = 0.0;
            for (const CubeId& c : tree.children(q)) s += out[tree.flatIndex(c)];
            out[tree.flatIndex(q)] = s;
        }
    }
    return out;
}

}  // namespace dyad
