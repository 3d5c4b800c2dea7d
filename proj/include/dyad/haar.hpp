#pragma once

#include <optional>

#include "dyad/linalg.hpp"
#include "dyad/measure.hpp"

namespace dyad {

/// Haar function adapted to (Q, mu):
///   h_Q = mu(Q)^{-1/2} (1_Q - (mu(Q)/mu(Q^)) 1_{Q^}),
/// supported on the parent Q^, constant on Q and on Q^ \ Q. Defined only for
/// non-root cubes with mu(Q) > 0. The family is a frame for L^2(mu), not an
/// orthogonal system.
struct HaarFunction {
    CubeId cube;
    double valueOnQ = 0.0;   // value on Q
    double valueOffQ = 0.0;  // value on Q^ \ Q
    StepFunction realization;
};

inline HaarFunction haarFunction(const TreePtr& tree, const RadonMeasure& mu, const CubeId& q) {
    if (tree->isRoot(q)) throw Error("haarFunction: root cube has no parent");
    double mQ = mu.mass(q);
    if (mQ <= 0.0) throw Error("haarFunction: null cube (mu(Q) = 0)");
    CubeId p = tree->parent(q);
    double mP = mu.mass(p);
    HaarFunction h;
    h.cube = q;
    double inv = 1.0 / std::sqrt(mQ);
    h.valueOnQ = inv * (1.0 - mQ / mP);
    h.valueOffQ = -inv * (mQ / mP);
    h.realization = StepFunction::zero(tree);
    tree->forEachLeafUnder(p, [&](std::uint64_t i) { h.realization[i] = h.valueOffQ; });
    tree->forEachLeafUnder(q, [&](std::uint64_t i) { h.realization[i] = h.valueOnQ; });
    return h;
}

/// Haar coefficients <f, h_Q> per cube; a coefficient exists iff Q is non-root
/// and mu(Q) > 0 (null cubes carry no Haar function).
class HaarExpansion {
public:
    HaarExpansion() = default;
    HaarExpansion(TreePtr tree, std::vector<double> coeff, std::vector<char> valid)
        : tree_(std::move(tree)), coeff_(std::move(coeff)), valid_(std::move(valid)) {}

    const TreePtr& tree() const { return tree_; }
    double coeff(const CubeId& q) const { return coeff_[tree_->flatIndex(q)]; }
    double coeffFlat(std::uint64_t flat) const { return coeff_[flat]; }
    bool validFlat(std::uint64_t flat) const { return valid_[flat] != 0; }
    const std::vector<double>& coefficients() const { return coeff_; }
    std::vector<double>& coefficients() { return coeff_; }
    const std::vector<char>& validity() const { return valid_; }

    /// Copy with every coefficient outside the mask zeroed.
    HaarExpansion masked(const std::vector<char>& keep) const {
        HaarExpansion out = *this;
        for (std::size_t i = 0; i < out.coeff_.size(); ++i)
            if (!keep[i]) out.coeff_[i] = 0.0;
        return out;
    }

private:
    TreePtr tree_;
    std::vector<double> coeff_;
    std::vector<char> valid_;
};

/// <f, h_Q> = mu(Q)^{1/2} (<f>_Q - <f>_{Q^}) for every admissible cube.
inline HaarExpansion analyze(const StepFunction& f, const RadonMeasure& mu) {
    const DyadicTree& t = *f.tree();
    std::vector<double> fm(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) fm[i] = f[i] * mu.leafMass(i);
    std::vector<double> sums = cubeSums(t, fm);
    std::vector<double> coeff(t.cubeCount(), 0.0);
    std::vector<char> valid(t.cubeCount(), 0);
    for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat) {
        double mQ = mu.massFlat(flat);
        if (mQ <= 0.0) continue;
        CubeId q = t.cubeAt(flat);
        std::uint64_t fp = t.flatIndex(t.parent(q));
        double mP = mu.massFlat(fp);
        coeff[flat] = std::sqrt(mQ) * (sums[flat] / mQ - sums[fp] / mP);
        valid[flat] = 1;
    }
    return HaarExpansion(f.tree(), std::move(coeff), std::move(valid));
}

/// Sum of coeff_Q h_Q over valid cubes. On the finite tree this reproduces
/// f - <f>_root 1_root mu-a.e. when applied to analyze(f).
inline StepFunction synthesize(const HaarExpansion& e, const RadonMeasure& mu) {
    const DyadicTree& t = *e.tree();
    // Each h_Q adds mu(Q)^{-1/2} c_Q on Q and -mu(Q)^{1/2}/mu(Q^) c_Q on Q^;
    // accumulate per cube, then push down the chains.
    std::vector<double> add(t.cubeCount(), 0.0);
    for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat) {
        if (!e.validFlat(flat)) continue;
        double c = e.coeffFlat(flat);
        if (c == 0.0) continue;
        double mQ = mu.massFlat(flat);
        CubeId q = t.cubeAt(flat);
        std::uint64_t fp = t.flatIndex(t.parent(q));
        double mP = mu.massFlat(fp);
        add[flat] += c / std::sqrt(mQ);
        add[fp] -= c * std::sqrt(mQ) / mP;
    }
    std::vector<double> pre(t.cubeCount(), 0.0);
    pre[0] = add[0];
    for (int level = 0; level < t.depth(); ++level) {
        for (std::uint64_t k = 0; k < t.levelCount(level); ++k) {
            std::uint64_t fq = t.levelOffset(level) + k;
            CubeId q = t.cubeAt(fq);
            for (const CubeId& c : t.children(q)) {
                std::uint64_t fc = t.flatIndex(c);
                pre[fc] = pre[fq] + add[fc];
            }
        }
    }
    std::vector<double> leaf(t.leafCount());
    std::uint64_t off = t.levelOffset(t.depth());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) leaf[i] = pre[off + i];
    return StepFunction(e.tree(), std::move(leaf));
}

/// Difference operator localized on Q (coordinate form):
/// Delta_Q f = sum over children R with mu(R) > 0 of (<f>_R - <f>_Q) 1_R.
inline StepFunction delta(const StepFunction& f, const RadonMeasure& mu, const CubeId& q) {
    const DyadicTree& t = *f.tree();
    if (mu.mass(q) <= 0.0) throw Error("delta: null cube (mu(Q) = 0)");
    if (t.isLeaf(q)) throw Error("delta: leaf cube has no children");
    double avgQ = average(f, mu, q);
    StepFunction out = StepFunction::zero(f.tree());
    for (const CubeId& r : t.children(q)) {
        if (mu.mass(r) <= 0.0) continue;
        double d = average(f, mu, r) - avgQ;
        t.forEachLeafUnder(r, [&](std::uint64_t i) { out[i] = d; });
    }
    return out;
}

/// Same operator through the Haar identity Delta_Q f = sum over children R of
/// <f, h_R> h_R; kept as an independent route for the dual-formula checks.
inline StepFunction deltaHaarForm(const StepFunction& f, const RadonMeasure& mu, const CubeId& q) {
    const DyadicTree& t = *f.tree();
    if (mu.mass(q) <= 0.0) throw Error("deltaHaarForm: null cube");
    if (t.isLeaf(q)) throw Error("deltaHaarForm: leaf cube has no children");
    StepFunction out = StepFunction::zero(f.tree());
    for (const CubeId& r : t.children(q)) {
        if (mu.mass(r) <= 0.0) continue;
        HaarFunction h = haarFunction(f.tree(), mu, r);
        double c = 0.0;
        for (std::uint64_t i = 0; i < f.size(); ++i) c += f[i] * h.realization[i] * mu.leafMass(i);
        out = out + c * h.realization;
    }
    return out;
}

/// Product decomposition <f,h_Q> h_Q = <f>_Q 1_Q + a_Q. Returns a_Q
/// materialized; it obeys |a_Q| <= 3 <|f|>_{Q^} 1_{Q^} pointwise.
inline StepFunction haarProductRemainder(const StepFunction& f, const RadonMeasure& mu,
                                         const CubeId& q) {
    const DyadicTree& t = *f.tree();
    HaarFunction h = haarFunction(f.tree(), mu, q);
    double c = 0.0;
    for (std::uint64_t i = 0; i < f.size(); ++i) c += f[i] * h.realization[i] * mu.leafMass(i);
    StepFunction out = c * h.realization;
    double avgQ = average(f, mu, q);
    t.forEachLeafUnder(q, [&](std::uint64_t i) { out[i] -= avgQ; });
    return out;
}

struct FrameBounds {
    double c1 = 0.0;
    double c2 = 0.0;
    bool degenerate = false;  // mean-zero subspace is trivial
};

/// Extremal constants of C1 ||f||_2 <= (sum <f,h_Q>^2)^{1/2} <= C2 ||f||_2 on
/// the mean-zero subspace {<f>_root = 0} of L^2(mu). The root average has to
/// be removed because the truncated tree keeps it; the bi-infinite grid
/// telescopes it away.
inline FrameBounds frameBounds(const RadonMeasure& mu) {
    const DyadicTree& t = *mu.tree();
    if (!(mu.total() > 0.0)) throw Error("frameBounds: zero measure");
    std::vector<std::uint64_t> leaves;  // positive-mass leaves
    for (std::uint64_t i = 0; i < t.leafCount(); ++i)
        if (mu.leafMass(i) > 0.0) leaves.push_back(i);
    FrameBounds fb;
    if (leaves.size() <= 1) {
        fb.degenerate = true;
        return fb;
    }
    std::vector<std::uint64_t> rows;  // valid coefficient cubes
    for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat)
        if (mu.massFlat(flat) > 0.0) rows.push_back(flat);

    // Analysis map in L^2(mu)-orthonormal leaf coordinates g_i = f_i sqrt(m_i):
    // A'_{Q,i} = sqrt(mu(Q)) (1_{i in Q}/mu(Q) - 1_{i in Q^}/mu(Q^)) sqrt(m_i).
    auto k = static_cast<Eigen::Index>(leaves.size());
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), k);
    A.setZero();
    std::vector<Eigen::Index> leafPos(t.leafCount(), -1);
    for (std::size_t a = 0; a < leaves.size(); ++a)
        leafPos[leaves[a]] = static_cast<Eigen::Index>(a);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        CubeId q = t.cubeAt(rows[r]);
        double mQ = mu.massFlat(rows[r]);
        CubeId p = t.parent(q);
        double mP = mu.mass(p);
        double s = std::sqrt(mQ);
        t.forEachLeafUnder(p, [&](std::uint64_t i) {
            if (leafPos[i] < 0) return;
            A(static_cast<Eigen::Index>(r), leafPos[i]) -= s / mP * std::sqrt(mu.leafMass(i));
        });
        t.forEachLeafUnder(q, [&](std::uint64_t i) {
            if (leafPos[i] < 0) return;
            A(static_cast<Eigen::Index>(r), leafPos[i]) += s / mQ * std::sqrt(mu.leafMass(i));
        });
    }
    // Mean-zero constraint: g ⊥ u with u_i = sqrt(m_i)/sqrt(mu total).
    Eigen::VectorXd u(k);
    for (std::size_t a = 0; a < leaves.size(); ++a) u[static_cast<Eigen::Index>(a)] =
        std::sqrt(mu.leafMass(leaves[a]));
    u.normalize();
    // Householder basis of u^perp.
    Eigen::VectorXd v = u;
    v[0] += (u[0] >= 0.0 ? 1.0 : -1.0);
    v.normalize();
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(k, k) - 2.0 * v * v.transpose();
    // Columns 1..k-1 of H span u^perp (column 0 is ±u).
    Eigen::MatrixXd B = H.rightCols(k - 1);
    auto [c1, c2] = gramExtremes(A * B);
    fb.c1 = c1;
    fb.c2 = c2;
    return fb;
}

}  // namespace dyad
