#pragma once

#include <limits>
#include <optional>

#include "dyad/multiplier.hpp"

namespace dyad {

/// Member of a sparse family: a dyadic tree cube, or a raw box for the
/// annulus entries of the kernel-side construction.
struct SparseEntry {
    Box box;
    bool dyadic = true;
    std::uint64_t flat = 0;  // valid when dyadic
    int half = 1;            // subfamily assignment (1 or 2)
};

/// Collection of cubes with the packing condition: for every member Q, the
/// maximal members strictly inside Q occupy at most packingConstant * m(Q)
/// of Q's reference mass.
struct SparseFamily {
    TreePtr tree;
    std::vector<SparseEntry> entries;
    double packingConstant = 0.5;

    /// Index of the smallest member strictly containing entry i, or -1.
    std::vector<int> familyParents() const {
        std::vector<int> parent(entries.size(), -1);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            for (std::size_t j = 0; j < entries.size(); ++j) {
                if (i == j) continue;
                const Box& bi = entries[i].box;
                const Box& bj = entries[j].box;
                if (bj.contains(bi) && !(bj == bi)) {
                    if (parent[i] < 0 || entries[static_cast<std::size_t>(parent[i])].box.contains(bj))
                        parent[i] = static_cast<int>(j);
                }
            }
        }
        return parent;
    }
};

struct SparsenessReport {
    std::vector<double> ratios;  // per member, packing ratio
    double maxRatio = 0.0;
    bool pass = true;
    int nullCubes = 0;
};

/// Packing verification against the family's reference measure: a Radon
/// measure for the Haar-side families, Lebesgue box volume when mu is null.
inline SparsenessReport verifySparseness(const SparseFamily& fam, const RadonMeasure* mu,
                                         std::optional<int> halfFilter = std::nullopt,
                                         double tol = 1e-12) {
    auto massOf = [&](const SparseEntry& e) -> double {
        if (mu == nullptr) return e.box.volume();
        if (!e.dyadic) throw Error("verifySparseness: raw box entry needs the Lebesgue reference");
        return mu->massFlat(e.flat);
    };
    std::vector<std::size_t> sel;
    for (std::size_t i = 0; i < fam.entries.size(); ++i)
        if (!halfFilter || fam.entries[i].half == *halfFilter) sel.push_back(i);

    // Family parents within the filtered subfamily.
    std::vector<int> parent(sel.size(), -1);
    for (std::size_t a = 0; a < sel.size(); ++a) {
        for (std::size_t b = 0; b < sel.size(); ++b) {
            if (a == b) continue;
            const Box& ba = fam.entries[sel[a]].box;
            const Box& bb = fam.entries[sel[b]].box;
            if (bb.contains(ba) && !(bb == ba)) {
                if (parent[a] < 0 || fam.entries[sel[static_cast<std::size_t>(parent[a])]].box.contains(bb))
                    parent[a] = static_cast<int>(b);
            }
        }
    }
    SparsenessReport rep;
    rep.ratios.assign(sel.size(), 0.0);
    std::vector<double> childMass(sel.size(), 0.0);
    for (std::size_t a = 0; a < sel.size(); ++a)
        if (parent[a] >= 0) childMass[static_cast<std::size_t>(parent[a])] += massOf(fam.entries[sel[a]]);
    for (std::size_t a = 0; a < sel.size(); ++a) {
        double m = massOf(fam.entries[sel[a]]);
        if (m <= 0.0) {
            ++rep.nullCubes;
            rep.ratios[a] = childMass[a] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        } else {
            rep.ratios[a] = childMass[a] / m;
        }
        rep.maxRatio = std::max(rep.maxRatio, rep.ratios[a]);
        if (rep.ratios[a] > fam.packingConstant + tol) rep.pass = false;
    }
    return rep;
}

/// Positive averaging operator attached to a family: per-cube scalar weights
/// (1 for S, epsTilde for S_eps) and the averaging cube (the member itself on
/// the Haar side, the concentric 5x enlargement R* on the kernel side).
struct SparseOperatorSpec {
    SparseFamily family;
    std::vector<double> weights;
    enum class Avg { Self, EnlargedStar } avg = Avg::Self;
    bool absoluteValues = true;

    struct EvalResult {
        StepFunction value;
        int skippedNullCubes = 0;
    };

    /// S f = sum over members of weight * <f>_avgcube * 1_member, restricted
    /// to the half selected by halfFilter when given.
    EvalResult evaluate(const StepFunction& f, const RadonMeasure* mu,
                        std::optional<int> halfFilter = std::nullopt) const {
        const DyadicTree& t = *family.tree;
        StepFunction g = absoluteValues ? f.abs() : f;
        std::vector<double> gm;
        std::vector<double> sums;
        if (mu != nullptr) {
            gm.resize(t.leafCount());
            for (std::uint64_t i = 0; i < t.leafCount(); ++i) gm[i] = g[i] * mu->leafMass(i);
            sums = cubeSums(t, gm);
        }
        EvalResult out{StepFunction::zero(family.tree), 0};
        for (std::size_t k = 0; k < family.entries.size(); ++k) {
            const SparseEntry& e = family.entries[k];
            if (halfFilter && e.half != *halfFilter) continue;
            double avg = 0.0;
            if (avg == 0.0) {
                if (this->avg == Avg::Self) {
                    if (mu == nullptr) throw Error("SparseOperatorSpec: Self averaging needs a measure");
                    if (!e.dyadic) throw Error("SparseOperatorSpec: Self averaging needs dyadic cubes");
                    double m = mu->massFlat(e.flat);
                    if (m <= 0.0) {
                        ++out.skippedNullCubes;
                        continue;
                    }
                    avg = sums[e.flat] / m;
                } else {
                    Box star = e.box.dilated(DyadicRational(5));
                    double vol = star.volume();
                    avg = integrateOverBox(g, star) / vol;
                }
            }
            double add = weights[k] * avg;
            if (add == 0.0) continue;
            if (e.dyadic) {
                t.forEachLeafUnder(t.cubeAt(e.flat), [&](std::uint64_t i) { out.value[i] += add; });
            } else {
                for (std::uint64_t i = 0; i < t.leafCount(); ++i)
                    if (e.box.contains(t.box(t.leafAt(i)))) out.value[i] += add;
            }
        }
        return out;
    }
};

/// Pointwise domination constant max over support leaves of |Tf| / Sf;
/// +infinity if Sf vanishes where |Tf| does not.
inline double verifyDomination(const StepFunction& Tf, const StepFunction& Sf,
                               const std::vector<char>& support) {
    double c = 0.0;
    for (std::uint64_t i = 0; i < Tf.size(); ++i) {
        if (!support[i]) continue;
        double num = std::fabs(Tf[i]);
        if (Sf[i] > 0.0) {
            c = std::max(c, num / Sf[i]);
        } else if (num > 0.0) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return c;
}

struct SparseHaarResult {
    SparseFamily family;
    SparseOperatorSpec op;  // weights = epsTilde of each member
    StepFunction Tf;
    StepFunction Sf;        // (S^(1) + S^(2)) |f|, both halves together
    double cEmp = 0.0;
    double cUsed = 0.0;              // the 2C threshold constant actually used
    double weakConstMeps = 0.0;      // measured weak-type constant of M_eps
    double weakConstTmax = 0.0;      // measured weak-type constant of T^max
    int thresholdClamps = 0;         // nodes where the exact half-mass level was enforced
    int recursionDepth = 0;
    int nodes = 0;
};

/// Exceptional-set recursion for Haar multipliers. The family starts at the
/// root cube, each node Q contributes the term epsTilde_Q <|f|>_Q 1_Q, and
/// recursion continues on the maximal dyadic cubes of
///   E_Q = { x in Q : max(M_eps(f 1_Q), T_Q^max f)(x) > 2C epsTilde_Q <|f|>_Q },
/// whose mass is kept at or below mu(Q)/2. C comes from measured weak-type
/// constants of the two operators on the instance; if a subtree exceeds the
/// half-mass budget anyway, the threshold is raised to the exact level-set
/// value that restores it (counted in thresholdClamps).
inline SparseHaarResult buildSparseHaar(const StepFunction& f, const CoefficientField& eps,
                                        const RadonMeasure& mu) {
    const TreePtr& tree = f.tree();
    const DyadicTree& t = *tree;
    if (!(mu.total() > 0.0)) throw Error("buildSparseHaar: zero measure");

    SparseHaarResult res;
    HaarExpansion expansion = analyze(f, mu);
    std::vector<double> scaled(t.cubeCount(), 0.0);
    for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat)
        scaled[flat] = eps.epsFlat(flat) * expansion.coeffFlat(flat);
    HaarExpansion scaledExp = expansion;
    scaledExp.coefficients() = scaled;
    res.Tf = synthesize(scaledExp, mu);

    StepFunction absF = f.abs();
    std::vector<double> absMass(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) absMass[i] = absF[i] * mu.leafMass(i);
    std::vector<double> absSums = cubeSums(t, absMass);

    // Pass 1: exact weak-type constants of M_eps f and T^max f on this instance.
    double l1 = l1Norm(f, mu);
    double tildeRoot = eps.tildeRoot();
    double denom = tildeRoot * l1;
    if (denom > 0.0) {
        res.weakConstMeps = weakLevelSup(maximalMeps(f, mu, eps), mu) / denom;
        res.weakConstTmax =
            weakLevelSup(truncationWalk(tree, mu, scaled, t.root()).maxAbs, mu) / denom;
    }
    double C = 2.0 * (res.weakConstMeps + res.weakConstTmax);
    if (C <= 0.0) C = 1.0;
    res.cUsed = C;

    SparseFamily fam;
    fam.tree = tree;
    fam.packingConstant = 0.5;
    std::vector<double> weights;

    struct Node {
        CubeId cube;
        int depth;
        int half;
    };
    std::vector<Node> queue{{t.root(), 0, 1}};
    while (!queue.empty()) {
        Node node = queue.back();
        queue.pop_back();
        ++res.nodes;
        res.recursionDepth = std::max(res.recursionDepth, node.depth);
        std::uint64_t fq = t.flatIndex(node.cube);
        double mQ = mu.massFlat(fq);
        fam.entries.push_back({t.box(node.cube), true, fq, node.half});
        weights.push_back(eps.tildeFlat(fq));
        if (mQ <= 0.0) continue;
        double avgAbs = absSums[fq] / mQ;
        double tilde = eps.tildeFlat(fq);
        if (avgAbs == 0.0) {
            // f vanishes mu-a.e. on Q, so every subtree coefficient must too.
            TruncationWalk probe = truncationWalk(tree, mu, scaled, node.cube);
            if (probe.maxAbs.maxAbs() > 0.0)
                throw Error("buildSparseHaar: zero average with nonzero T_Q f");
            continue;
        }
        if (tilde == 0.0) continue;         // T_Q f = 0: nothing to dominate below
        if (t.isLeaf(node.cube)) continue;  // no strict descendants carry Haar functions

        // Local operators on the subtree: M_eps of f 1_Q and T_Q^max f.
        TruncationWalk walk = truncationWalk(tree, mu, scaled, node.cube);
        // Subtree M_eps: chain sup within Q of maxChild|eps| * <|f|>_{Q'}.
        std::vector<std::pair<std::uint64_t, double>> leafVals;
        std::vector<std::pair<CubeId, double>> stack{{node.cube, 0.0}};
        while (!stack.empty()) {
            auto [q, run] = stack.back();
            stack.pop_back();
            std::uint64_t flat = t.flatIndex(q);
            double m = mu.massFlat(flat);
            if (!t.isLeaf(q) && m > 0.0) {
                double cmax = 0.0;
                for (const CubeId& c : t.children(q))
                    cmax = std::max(cmax, std::fabs(eps.epsFlat(t.flatIndex(c))));
                run = std::max(run, cmax * absSums[flat] / m);
            }
            if (t.isLeaf(q)) {
                leafVals.emplace_back(t.leafIndex(q), run);
            } else {
                for (const CubeId& c : t.children(q)) stack.push_back({c, run});
            }
        }
        // Combined exceptional score per leaf under Q.
        std::vector<std::pair<std::uint64_t, double>> score;
        score.reserve(leafVals.size());
        for (auto& [leaf, meps] : leafVals)
            score.emplace_back(leaf, std::max(meps, walk.maxAbs[leaf]));

        double alpha = 2.0 * C * tilde * avgAbs;
        auto massAbove = [&](double a) {
            double m = 0.0;
            for (auto& [leaf, v] : score)
                if (v > a) m += mu.leafMass(leaf);
            return m;
        };
        if (massAbove(alpha) > 0.5 * mQ) {
            // Exact level-set clamp: smallest value threshold meeting the budget.
            std::vector<std::pair<double, double>> vm;
            for (auto& [leaf, v] : score) vm.emplace_back(v, mu.leafMass(leaf));
            std::sort(vm.begin(), vm.end(), [](auto& a, auto& b) { return a.first > b.first; });
            double cum = 0.0;
            for (std::size_t k = 0; k < vm.size();) {
                double v = vm[k].first;
                if (cum <= 0.5 * mQ) alpha = v;
                else break;
                while (k < vm.size() && vm[k].first == v) cum += vm[k++].second;
            }
            ++res.thresholdClamps;
        }

        // Maximal dyadic cubes inside E_Q = {score > alpha}.
        std::vector<char> inE(t.leafCount(), 0);
        for (auto& [leaf, v] : score)
            if (v > alpha) inE[leaf] = 1;
        std::vector<CubeId> maximal;
        std::vector<CubeId> dfs{node.cube};
        // The node itself never qualifies: mu(E_Q) <= mu(Q)/2 < mu(Q).
        while (!dfs.empty()) {
            CubeId q = dfs.back();
            dfs.pop_back();
            bool all = true;
            t.forEachLeafUnder(q, [&](std::uint64_t i) {
                if (!inE[i]) all = false;
            });
            if (all && !(q == node.cube)) {
                maximal.push_back(q);
                continue;
            }
            if (!t.isLeaf(q) && !(all && q == node.cube))
                for (const CubeId& c : t.children(q)) dfs.push_back(c);
        }
        int childHalf = 1;
        for (const CubeId& p : maximal) {
            if (mu.mass(p) <= 0.0) continue;  // null stopping cubes carry nothing
            queue.push_back({p, node.depth + 1, childHalf});
            childHalf = (childHalf == 1) ? 2 : 1;
        }
    }

    res.op.family = fam;
    res.op.weights = weights;
    res.op.avg = SparseOperatorSpec::Avg::Self;
    res.op.absoluteValues = true;
    res.family = std::move(fam);

    res.Sf = res.op.evaluate(f, &mu).value;
    std::vector<char> support(t.leafCount(), 0);
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) support[i] = f[i] != 0.0 ? 1 : 0;
    res.cEmp = verifyDomination(res.Tf, res.Sf, support);
    return res;
}

/// Disjoint cores E(R) = R minus the union of R's family children; the proof
/// machinery of the weighted bound needs their exact measures.
struct DisjointCores {
    std::vector<double> coreMass;    // mu(E(R)) per member
    std::vector<double> memberMass;  // mu(R)
    bool disjoint = true;
    bool halfMass = true;  // mu(R) <= 2 mu(E(R)) for every member
};

inline DisjointCores disjointCores(const SparseFamily& fam, const RadonMeasure& mu) {
    const DyadicTree& t = *fam.tree;
    DisjointCores out;
    std::vector<int> parent = fam.familyParents();
    out.memberMass.resize(fam.entries.size());
    out.coreMass.resize(fam.entries.size());
    std::vector<std::vector<char>> masks(fam.entries.size(),
                                         std::vector<char>(t.leafCount(), 0));
    for (std::size_t k = 0; k < fam.entries.size(); ++k) {
        const SparseEntry& e = fam.entries[k];
        if (!e.dyadic) throw Error("disjointCores: dyadic families only");
        out.memberMass[k] = mu.massFlat(e.flat);
        t.forEachLeafUnder(t.cubeAt(e.flat), [&](std::uint64_t i) { masks[k][i] = 1; });
    }
    for (std::size_t k = 0; k < fam.entries.size(); ++k)
        if (parent[k] >= 0) {
            auto& pm = masks[static_cast<std::size_t>(parent[k])];
            const SparseEntry& e = fam.entries[k];
            t.forEachLeafUnder(t.cubeAt(e.flat), [&](std::uint64_t i) { pm[i] = 0; });
        }
    std::vector<char> seen(t.leafCount(), 0);
    for (std::size_t k = 0; k < fam.entries.size(); ++k) {
        double m = 0.0;
        for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
            if (!masks[k][i]) continue;
            m += mu.leafMass(i);
            if (seen[i] && mu.leafMass(i) > 0.0) out.disjoint = false;
            seen[i] = 1;
        }
        out.coreMass[k] = m;
        if (out.memberMass[k] > 2.0 * m + 1e-12 * std::max(1.0, out.memberMass[k]))
            out.halfMass = false;
    }
    return out;
}

}  // namespace dyad
