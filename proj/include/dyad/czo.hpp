#pragma once

#include <map>
#include <optional>

#include "dyad/parallel.hpp"
#include "dyad/quadrature.hpp"
#include "dyad/weighted.hpp"

namespace dyad {

/// floor(a / b) for positive dyadic rationals, exact.
inline std::int64_t floorDiv(const DyadicRational& a, const DyadicRational& b) {
    int e = std::max(a.exp, b.exp);
    __int128 A = static_cast<__int128>(a.num) << (e - a.exp);
    __int128 B = static_cast<__int128>(b.num) << (e - b.exp);
    if (B <= 0) throw Error("floorDiv: divisor must be positive");
    return static_cast<std::int64_t>(A / B);
}

/// Unit cube [-1/2, 1/2]^n used as the spatial reference of the D factor.
inline Box unitReferenceBox(int n) {
    Box b;
    b.n = n;
    b.side = DyadicRational(1);
    for (int i = 0; i < n; ++i) b.lo[i] = DyadicRational(-1, 1);
    return b;
}

/// Ratio-form rdist in plain doubles, for quadrature integrands.
inline double rdistRatioApprox(int n, const double* lo, double side, const double* loB,
                               double sideB) {
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
        double l = std::min(lo[i], loB[i]);
        double r = std::max(lo[i] + side, loB[i] + sideB);
        h = std::max(h, r - l);
    }
    return h / std::max(side, sideB);
}

/// Compact Calderon-Zygmund kernel: modulus omega with the Dini condition
/// ∫∫ omega(st) ds/s dt/t < inf, and decay factors L, S, D vanishing at
/// infinity, zero, and infinity respectively. The kernel values obey
/// |K(x,y)| <~ L(|x-y|) S(|x-y|) D(|x+y|) / |x-y|^n off the diagonal.
struct CompactCZKernel {
    enum class Form { Zero, Separable, Oscillatory };

    int n = 1;
    ScalarMap omega = ScalarMap::power(0.5);
    ScalarMap Lmap = ScalarMap::cutoffInvPower(1.0);
    ScalarMap Smap = ScalarMap::cutoffPower(0.5);
    ScalarMap Dmap = ScalarMap::cutoffInvPower(1.0);
    Form form = Form::Separable;
    double amplitude = 1.0;
    double deltaCap = 0.0;  // center-distance diagonal exclusion
    double diniValue = 0.0;
    WTable wtable;

    static CompactCZKernel make(int n, ScalarMap omega, ScalarMap L, ScalarMap S, ScalarMap D,
                                Form form = Form::Separable, double amplitude = 1.0,
                                double deltaCap = 0.0) {
        CompactCZKernel k;
        k.n = n;
        k.omega = omega;
        k.Lmap = L;
        k.Smap = S;
        k.Dmap = D;
        k.form = form;
        k.amplitude = amplitude;
        k.deltaCap = deltaCap;
        auto om = [omega](double t) { return omega(t); };
        k.wtable = WTable(om);
        auto w = [&k](double t) { return k.wtable(t); };
        k.diniValue = integrateLogTail(w, 0.0, 1e-8);
        if (!std::isfinite(k.diniValue))
            throw Error("CompactCZKernel: Dini integral diverges for this modulus");
        return k;
    }

    double envelope(double dist, double sum) const {
        return amplitude * Lmap(dist) * Smap(dist) * Dmap(sum);
    }

    double eval(const double* x, const double* y) const {
        if (form == Form::Zero) return 0.0;
        double d2 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            d2 += (x[i] - y[i]) * (x[i] - y[i]);
            s2 += (x[i] + y[i]) * (x[i] + y[i]);
        }
        double dist = std::sqrt(d2);
        if (dist == 0.0) throw Error("CompactCZKernel: evaluation on the diagonal");
        double sum = std::sqrt(s2);
        double v = envelope(dist, sum) / std::pow(dist, n);
        if (form == Form::Oscillatory) {
            double phase = 0.0;
            for (int i = 0; i < n; ++i) phase += x[i] + y[i];
            v *= std::cos(0.7 * phase / (1.0 + dist));
        }
        return v;
    }
};

/// W(t) = ∫_0^t omega(s) ds/s by direct adaptive quadrature.
inline double kernelW(const CompactCZKernel& k, double t, double relTol = 1e-9) {
    if (t <= 0.0) return 0.0;
    auto om = [&](double s) { return k.omega(s); };
    return integrateLogTail(om, -std::log(std::min(t, 1.0)), relTol);
}

/// Dini double integral ∫_0^1 ∫_0^1 omega(st) ds/s dt/t = ∫_0^1 W(t) dt/t.
inline double kernelDiniDouble(const CompactCZKernel& k, double relTol = 1e-8) {
    auto w = [&](double t) { return kernelW(k, t, relTol * 0.1); };
    return integrateLogTail(w, 0.0, relTol);
}

/// L-tilde(l) = ∫_0^1 omega(t) L(l / t) dt/t.
inline double kernelLtilde(const CompactCZKernel& k, double side, double relTol = 1e-7) {
    auto g = [&](double t) { return k.omega(t) * k.Lmap(side / t); };
    return integrateLogTail(g, 0.0, relTol);
}

/// D-tilde(I) = ∫_0^1 W(t) D(rdist(t^{-1} I, B)) dt/t; the dilation keeps the
/// center of I. `fast` uses the precomputed W table.
inline double kernelDtilde(const CompactCZKernel& k, const Box& box, double relTol = 1e-7,
                           bool fast = true) {
    int n = box.n;
    double lo[kMaxDim], loB[kMaxDim], c[kMaxDim];
    double side = box.side.toDouble();
    for (int i = 0; i < n; ++i) {
        lo[i] = box.lo[i].toDouble();
        c[i] = lo[i] + side / 2.0;
        loB[i] = -0.5;
    }
    auto g = [&](double t) {
        double s = side / t;
        double dl[kMaxDim];
        for (int i = 0; i < n; ++i) dl[i] = c[i] - s / 2.0;
        double r = rdistRatioApprox(n, dl, s, loB, 1.0);
        double w = fast ? k.wtable(t) : kernelW(k, t, relTol * 0.1);
        return w * k.Dmap(r);
    };
    return integrateLogTail(g, 0.0, relTol);
}

struct DiniTransforms {
    double w1 = 0.0;      // W(1)
    double ltilde = 0.0;  // L-tilde(l(Q))
    double dtilde = 0.0;  // D-tilde(rdist(Q, B))
};

inline DiniTransforms diniTransforms(const CompactCZKernel& k, const DyadicTree& tree,
                                     const CubeId& q, double relTol = 1e-6) {
    DiniTransforms out;
    out.w1 = kernelW(k, 1.0, relTol * 0.01);
    out.ltilde = kernelLtilde(k, tree.sideLength(q.level).toDouble(), relTol);
    out.dtilde = kernelDtilde(k, tree.box(q), relTol, false);
    return out;
}

/// T assembled on the uniform-measure tree: off-diagonal entries come from
/// midpoint quadrature of the kernel, the near-diagonal block (center pairs
/// within deltaCap) is caller-supplied data, zero by default. T1 and T*1
/// Haar data are computed from the matrix unless the caller replaces them.
struct KernelOperator {
    TreePtr tree;
    CompactCZKernel kernel;
    Eigen::MatrixXd matrix;          // row i: Tf(leaf_i) = sum_j M_ij f_j
    HaarExpansion t1;
    HaarExpansion t1star;
    std::shared_ptr<RadonMeasure> lebesgue;

    StepFunction apply(const StepFunction& f) const {
        Eigen::VectorXd v = matrix * toVector(f);
        return fromVector(tree, v);
    }

    StepFunction applyAdjoint(const StepFunction& f) const {
        Eigen::VectorXd v = matrix.transpose() * toVector(f);
        return fromVector(tree, v);
    }
};

inline KernelOperator assembleKernelOperator(
    const TreePtr& tree, const CompactCZKernel& kernel,
    const std::function<double(std::uint64_t, std::uint64_t)>& nearBlock = nullptr,
    int threads = 1) {
    const DyadicTree& t = *tree;
    if (kernel.n != t.dimension()) throw Error("assembleKernelOperator: dimension mismatch");
    KernelOperator op;
    op.tree = tree;
    op.kernel = kernel;
    op.lebesgue = std::make_shared<RadonMeasure>(RadonMeasure::lebesgue(tree));
    auto k = static_cast<Eigen::Index>(t.leafCount());
    double vol = op.lebesgue->leafMass(0);
    op.matrix.resize(k, k);
    std::vector<std::array<double, kMaxDim>> centers(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
        auto c = t.center(t.leafAt(i));
        for (int d = 0; d < t.dimension(); ++d) centers[i][d] = c[d].toDouble();
    }
    parallelFor(threads, t.leafCount(), [&](std::uint64_t i) {
        for (std::uint64_t j = 0; j < t.leafCount(); ++j) {
            double d2 = 0.0;
            for (int d = 0; d < t.dimension(); ++d) {
                double dd = centers[i][d] - centers[j][d];
                d2 += dd * dd;
            }
            double dist = std::sqrt(d2);
            double entry;
            if (dist <= kernel.deltaCap || i == j || kernel.form == CompactCZKernel::Form::Zero)
                entry = nearBlock ? nearBlock(i, j) : 0.0;
            else
                entry = kernel.eval(centers[i].data(), centers[j].data()) * vol;
            op.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry;
        }
    });
    StepFunction ones = StepFunction::constant(tree, 1.0);
    op.t1 = analyze(op.apply(ones), *op.lebesgue);
    op.t1star = analyze(op.applyAdjoint(ones), *op.lebesgue);
    return op;
}

enum class ParaproductVariant { Pi, PiStar, PiStarTruncated };

/// Paraproducts in the Lebesgue model:
///   Pi_b f     = sum_I <b,h_I> <f>_I h_I,
///   Pi*_b f    = sum_I <b,h_I> <f,h_I> phi_I       (phi_I = |I|^{-1} 1_I),
///   truncated  = the same sum restricted to I in D_M (finite rank).
inline StepFunction paraproduct(const HaarExpansion& b, const StepFunction& f,
                                const RadonMeasure& lebesgue, ParaproductVariant variant,
                                int truncationM = 0) {
    const DyadicTree& t = *f.tree();
    std::vector<char> keep(t.cubeCount(), 1);
    if (variant == ParaproductVariant::PiStarTruncated) keep = lagomMask(t, truncationM);

    if (variant == ParaproductVariant::Pi) {
        std::vector<double> fm(t.leafCount());
        for (std::uint64_t i = 0; i < t.leafCount(); ++i) fm[i] = f[i] * lebesgue.leafMass(i);
        std::vector<double> sums = cubeSums(t, fm);
        HaarExpansion out = b;
        for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat) {
            if (!out.validFlat(flat)) continue;
            double avg = sums[flat] / lebesgue.massFlat(flat);
            out.coefficients()[flat] = b.coeffFlat(flat) * avg;
        }
        return synthesize(out, lebesgue);
    }

    HaarExpansion fe = analyze(f, lebesgue);
    std::vector<double> add(t.cubeCount(), 0.0);
    for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat) {
        if (!keep[flat] || !fe.validFlat(flat) || !b.validFlat(flat)) continue;
        double c = b.coeffFlat(flat) * fe.coeffFlat(flat);
        if (c == 0.0) continue;
        add[flat] += c / lebesgue.massFlat(flat);  // phi_I = |I|^{-1} 1_I
    }
    std::vector<double> pre(t.cubeCount(), 0.0);
    pre[0] = add[0];
    for (int level = 0; level < t.depth(); ++level)
        for (std::uint64_t kk = 0; kk < t.levelCount(level); ++kk) {
            std::uint64_t fq = t.levelOffset(level) + kk;
            for (const CubeId& c : t.children(t.cubeAt(fq))) pre[t.flatIndex(c)] = pre[fq] + add[t.flatIndex(c)];
        }
    std::vector<double> leaf(t.leafCount());
    std::uint64_t off = t.levelOffset(t.depth());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) leaf[i] = pre[off + i];
    return StepFunction(f.tree(), std::move(leaf));
}

/// Weak compactness ratios |<T 1_Q, 1_Q>| / |Q| for the given cubes.
inline std::vector<double> weakCompactnessTest(const KernelOperator& op,
                                               const std::vector<CubeId>& cubes) {
    const DyadicTree& t = *op.tree;
    std::vector<double> out;
    out.reserve(cubes.size());
    for (const CubeId& q : cubes) {
        StepFunction ind = StepFunction::indicator(op.tree, q);
        StepFunction Tq = op.apply(ind);
        double pairing = 0.0;
        t.forEachLeafUnder(q, [&](std::uint64_t i) { pairing += Tq[i] * op.lebesgue->leafMass(i); });
        out.push_back(std::fabs(pairing) / t.box(q).volume());
    }
    return out;
}

/// Per-cube coefficients of the endpoint bound: the (e, m)-bucketed geometric
/// double sum plus the two Haar-tail square roots of T1 and T*1.
struct EpsCoefficientReport {
    std::vector<double> eps;        // per flat cube
    std::vector<double> geometric;  // double-sum term
    std::vector<double> bmoT1;      // (|Q|^{-1} sum_{R in tail(Q)} <T1,h_R>^2)^{1/2}
    std::vector<double> bmoT1Star;
    int eMin = 0, eMax = 0, mMax = 0;  // realized bucket ranges
    int N = 0;

    double supOverTail(const DyadicTree& t, const std::vector<char>& lagom) const {
        double s = 0.0;
        for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat)
            if (!lagom[flat]) s = std::max(s, eps[flat]);
        return s;
    }
};

namespace detail {

/// Memoized D-tilde evaluations keyed by the exact box geometry.
class DtildeCache {
public:
    explicit DtildeCache(const CompactCZKernel& k) : k_(&k) {}

    double operator()(const Box& box) {
        std::array<std::int64_t, 2 * kMaxDim + 2> key{};
        key[0] = box.side.num;
        key[1] = box.side.exp;
        std::array<DyadicRational, kMaxDim> absC{};
        for (int i = 0; i < box.n; ++i) {
            DyadicRational c = box.center(i);
            absC[i] = c.num < 0 ? -c : c;
        }
        std::sort(absC.begin(), absC.begin() + box.n,
                  [](const DyadicRational& a, const DyadicRational& b) { return a < b; });
        for (int i = 0; i < box.n; ++i) {
            key[2 + 2 * i] = absC[i].num;
            key[3 + 2 * i] = absC[i].exp;
        }
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        double v = kernelDtilde(*k_, box, 1e-6, true);
        cache_.emplace(key, v);
        return v;
    }

private:
    const CompactCZKernel* k_;
    std::map<std::array<std::int64_t, 2 * kMaxDim + 2>, double> cache_;
};

}  // namespace detail

/// Lemma-form coefficients. For each cube Q the double sum runs over buckets
/// Q_{e,m} = {R : l(Q) = 2^e l(R), m <= rdist(Q,R) < m+1} with the factor
/// omega(2^{-|e|}) omega(1/m)/m and the bucket maximum of the applicable
/// F value:
///   rdist > 3:                  F1 = F(<Q,R>, Q^R, <Q,R>)
///   rdist <= 3, inrdist > 1:    F2 = F~(Q^R, Q^R, <Q,R>)
///   rdist <= 3, inrdist = 1:    F3 = F2 + F~(Q^R) + delta(Q,R) F_W(Q)
/// where F(I1,I2,I3) = L(l(I1)) S(l(I2)) D(rdist(I3,B)) and F~ uses the
/// L-tilde / D-tilde transforms. The bucket enumeration is tree-exact, so the
/// optional (e, m) caps are reporting aids, not approximations.
inline EpsCoefficientReport epsCoefficients(const KernelOperator& op, int N,
                                            const std::vector<double>& fw,
                                            std::optional<int> eAbsCap = std::nullopt,
                                            std::optional<int> mCap = std::nullopt) {
    const DyadicTree& t = *op.tree;
    if (fw.size() != t.cubeCount()) throw Error("epsCoefficients: F_W size mismatch");
    if (op.t1.coefficients().empty() || op.t1star.coefficients().empty())
        throw Error("epsCoefficients: missing T1/T*1 data; assemble the operator first");
    const CompactCZKernel& k = op.kernel;

    EpsCoefficientReport rep;
    rep.N = N;
    rep.eps.assign(t.cubeCount(), 0.0);
    rep.geometric.assign(t.cubeCount(), 0.0);
    rep.bmoT1.assign(t.cubeCount(), 0.0);
    rep.bmoT1Star.assign(t.cubeCount(), 0.0);

    std::vector<Box> boxes(t.cubeCount());
    for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat) boxes[flat] = t.box(t.cubeAt(flat));
    Box unitB = unitReferenceBox(t.dimension());

    // Haar tails of T1 and T*1 over the lagom complement, per cube.
    std::vector<char> lagom = lagomMask(t, N);
    auto tailSums = [&](const HaarExpansion& e) {
        std::vector<double> sq(t.cubeCount(), 0.0);
        for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat)
            if (!lagom[flat] && e.validFlat(flat)) sq[flat] = e.coeffFlat(flat) * e.coeffFlat(flat);
        // Strict-descendant sums.
        std::vector<double> s(t.cubeCount(), 0.0);
        for (int level = t.depth() - 1; level >= 0; --level)
            for (std::uint64_t kk = 0; kk < t.levelCount(level); ++kk) {
                CubeId q = t.cubeAt(t.levelOffset(level) + kk);
                double acc = 0.0;
                for (const CubeId& c : t.children(q)) {
                    std::uint64_t fc = t.flatIndex(c);
                    acc += sq[fc] + s[fc];
                }
                s[t.flatIndex(q)] = acc;
            }
        return s;
    };
    std::vector<double> tailT1 = tailSums(op.t1);
    std::vector<double> tailT1s = tailSums(op.t1star);

    // A zero-form kernel has no size/smoothness envelope; only the diagonal
    // F_W summand of the F3 case can survive in the double sum.
    double amp = (k.form == CompactCZKernel::Form::Zero) ? 0.0 : k.amplitude;

    std::vector<double> ltildeByLevel(t.depth() + 1);
    for (int level = 0; level <= t.depth(); ++level)
        ltildeByLevel[level] = kernelLtilde(k, t.sideLength(level).toDouble());
    detail::DtildeCache dtilde(k);

    int eLo = -t.depth(), eHi = t.depth();
    if (eAbsCap) {
        eLo = std::max(eLo, -*eAbsCap);
        eHi = std::min(eHi, *eAbsCap);
    }
    std::vector<std::vector<double>> bucketMax;  // [e - eLo][m - 1]

    for (std::uint64_t fq = 0; fq < t.cubeCount(); ++fq) {
        const Box& bq = boxes[fq];
        int lq = t.cubeAt(fq).level;
        bucketMax.assign(static_cast<std::size_t>(eHi - eLo + 1), {});
        int mRealizedMax = 0;
        for (std::uint64_t fr = 0; fr < t.cubeCount(); ++fr) {
            const Box& br = boxes[fr];
            int lr = t.cubeAt(fr).level;
            int e = lr - lq;  // l(Q) = 2^e l(R)
            if (e < eLo || e > eHi) continue;
            Box bracket = bracketCube(bq, br);
            const Box& vee = largerOf(bq, br);
            const Box& wedge = smallerOf(bq, br);
            std::int64_t m = floorDiv(bracket.side, vee.side);
            if (m < 1) m = 1;  // rdist >= 1 by construction
            if (mCap && m > *mCap) continue;
            double F;
            bool far = DyadicRational(3) * vee.side < bracket.side;
            if (far) {
                F = amp * k.Lmap(bracket.side.toDouble()) * k.Smap(wedge.side.toDouble()) *
                    k.Dmap(rdistRatio(bracket, unitB));
            } else {
                DyadicRational d2 = innerBoundaryDistSq(vee, wedge);
                int lw = std::max(lq, lr);
                double f2 = (amp == 0.0) ? 0.0
                                         : amp * ltildeByLevel[lw] * k.Smap(wedge.side.toDouble()) *
                                               dtilde(bracket);
                if (!d2.isZero()) {
                    F = f2;  // inrdist > 1
                } else {
                    double ftw = (amp == 0.0) ? 0.0
                                              : amp * ltildeByLevel[lw] *
                                                    k.Smap(wedge.side.toDouble()) * dtilde(wedge);
                    F = f2 + ftw + (fq == fr ? fw[fq] : 0.0);
                }
            }
            auto ei = static_cast<std::size_t>(e - eLo);
            if (bucketMax[ei].size() < static_cast<std::size_t>(m)) bucketMax[ei].resize(m, 0.0);
            bucketMax[ei][m - 1] = std::max(bucketMax[ei][m - 1], F);
            mRealizedMax = std::max<int>(mRealizedMax, static_cast<int>(m));
            rep.eMin = std::min(rep.eMin, e);
            rep.eMax = std::max(rep.eMax, e);
        }
        rep.mMax = std::max(rep.mMax, mRealizedMax);
        double geo = 0.0;
        for (int e = eLo; e <= eHi; ++e) {
            auto& row = bucketMax[static_cast<std::size_t>(e - eLo)];
            double we = k.omega(std::pow(2.0, -std::abs(e)));
            for (std::size_t mi = 0; mi < row.size(); ++mi) {
                if (row[mi] == 0.0) continue;
                double m = static_cast<double>(mi + 1);
                geo += we * (k.omega(1.0 / m) / m) * row[mi];
            }
        }
        double volQ = bq.volume();
        rep.geometric[fq] = geo;
        rep.bmoT1[fq] = std::sqrt(tailT1[fq] / volQ);
        rep.bmoT1Star[fq] = std::sqrt(tailT1s[fq] / volQ);
        rep.eps[fq] = geo + rep.bmoT1[fq] + rep.bmoT1Star[fq];
    }
    return rep;
}

/// F_W candidates measured from the matrix itself: |<T1_Q, 1_Q>| / |Q| for
/// every tree cube.
inline std::vector<double> measuredFw(const KernelOperator& op) {
    const DyadicTree& t = *op.tree;
    std::vector<CubeId> all;
    all.reserve(t.cubeCount());
    for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat) all.push_back(t.cubeAt(flat));
    return weakCompactnessTest(op, all);
}

/// T~ = T - Pi*_{P_N(T*1)} applied to f.
inline StepFunction applyTildeT(const KernelOperator& op, const StepFunction& f, int N) {
    StepFunction Tf = op.apply(f);
    StepFunction para =
        paraproduct(op.t1star, f, *op.lebesgue, ParaproductVariant::PiStarTruncated, N);
    return Tf - para;
}

/// P_N^perp g = g(reconstructed part) - P_N g, in Haar coefficients.
inline StepFunction projectTail(const StepFunction& g, const RadonMeasure& lebesgue,
                                const std::vector<char>& lagom) {
    HaarExpansion e = analyze(g, lebesgue);
    StepFunction full = synthesize(e, lebesgue);
    StepFunction head = synthesize(e.masked(lagom), lebesgue);
    return full - head;
}

struct SmoothnessBoundReport {
    double lhs = 0.0;    // |P_N^perp T~(f 1_{R^n \ Q*})(x) - same(x')|
    double rhs = 0.0;    // epsbar_Q * Mf(x)
    double ratio = 0.0;  // lhs / rhs (0 when rhs vanishes with lhs)
    double epsBar = 0.0;
};

/// Oscillation bound of the excised operator: for x, x' in Q,
/// |P_N^perp T~(f 1_{R^n \ Q*})(x) - (same)(x')| against
/// epsbar_Q Mf(x) with epsbar_Q = L(l(Q)) S(l(Q)) D~(rdist(Q,B)).
inline SmoothnessBoundReport smoothnessDifferenceBound(const KernelOperator& op, const CubeId& q,
                                                       int N, const StepFunction& f,
                                                       std::uint64_t leafX, std::uint64_t leafXp) {
    const DyadicTree& t = *op.tree;
    Box qBox = t.box(q);
    if (!qBox.contains(t.box(t.leafAt(leafX))) || !qBox.contains(t.box(t.leafAt(leafXp))))
        throw Error("smoothnessDifferenceBound: evaluation leaves must lie in Q");
    Box star = qBox.dilated(DyadicRational(5));

    StepFunction g = f;
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
        Box lb = t.box(t.leafAt(i));
        double ov = boxOverlapVolume(lb, star);
        if (ov > 0.0) {
            if (ov < lb.volume() * (1.0 - 1e-12))
                throw Error("smoothnessDifferenceBound: Q* not aligned with the leaf grid");
            g[i] = 0.0;
        }
    }
    std::vector<char> lagom = lagomMask(t, N);
    StepFunction tail = projectTail(applyTildeT(op, g, N), *op.lebesgue, lagom);

    SmoothnessBoundReport rep;
    rep.lhs = std::fabs(tail[leafX] - tail[leafXp]);
    const CompactCZKernel& k = op.kernel;
    double side = qBox.side.toDouble();
    rep.epsBar = k.amplitude * k.Lmap(side) * k.Smap(side) * kernelDtilde(k, qBox);
    StepFunction mf = maximalM(f, *op.lebesgue);
    rep.rhs = rep.epsBar * mf[leafX];
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? INFINITY : 0.0);
    return rep;
}

/// Kernel-route compactness scan: per N the coefficient tail sup from the
/// lemma-form eps report, the theorem bound, the exact L^2(w dm) norm of
/// P_N^perp (T - Pi*_{P_N(T*1)}), the empirical L^p(w) tail norm, and the
/// singular value of the de-paraproducted operator at the head rank.
inline CompactnessReport compactnessScanCzo(const KernelOperator& op, const Weight& w, double p,
                                            const std::vector<int>& nList, int trials,
                                            std::uint64_t seed) {
    for (std::size_t i = 1; i < nList.size(); ++i)
        if (nList[i] <= nList[i - 1]) throw Error("compactnessScanCzo: N_list must increase");
    const TreePtr& tree = op.tree;
    const DyadicTree& t = *tree;
    const RadonMeasure& leb = *op.lebesgue;
    double pPrime = holderConjugate(p);

    CompactnessReport rep;
    rep.apConst = apConstant(w, leb, p);
    rep.frameKappa = frameTransferConstant(leb, w);
    std::vector<double> fw = measuredFw(op);
    std::vector<double> nu(t.leafCount());
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) nu[i] = w[i] * leb.leafMass(i);

    double prevSup = std::numeric_limits<double>::infinity();
    for (int N : nList) {
        CompactnessRow row;
        row.N = N;
        std::vector<char> lagom = lagomMask(t, N);
        EpsCoefficientReport eps = epsCoefficients(op, N, fw);
        row.tailCoeffSup = eps.supOverTail(t, lagom);
        row.bound = row.tailCoeffSup * std::pow(rep.apConst, std::max(1.0, pPrime / p));

        Eigen::MatrixXd tilde = assembleMatrix(tree, [&](const StepFunction& e) {
            return applyTildeT(op, e, N);
        });
        Eigen::MatrixXd tail = assembleMatrix(tree, [&](const StepFunction& e) {
            return projectTail(applyTildeT(op, e, N), leb, lagom);
        });
        row.tailNormExact = weightedSpectralNorm(tail, nu);
        std::vector<double> sv = weightedSingularValues(tilde, nu);
        std::uint64_t headCoeffs = 0;
        for (std::uint64_t flat = 1; flat < t.cubeCount(); ++flat)
            if (lagom[flat]) ++headCoeffs;
        row.svAtHeadRank = headCoeffs < sv.size() ? sv[headCoeffs] : 0.0;

        Rng rng(seed ^ static_cast<std::uint64_t>(N) * 0x5CA1ull);
        for (int trial = 0; trial < trials; ++trial) {
            StepFunction f = StepFunction::zero(tree);
            for (std::uint64_t i = 0; i < t.leafCount(); ++i) f[i] = rng.uniform(-1.0, 1.0);
            double nf = lpNormWeighted(f, leb, w.fn(), p);
            if (nf <= 0.0) continue;
            StepFunction g = projectTail(applyTildeT(op, f, N), leb, lagom);
            row.tailNormEmpirical =
                std::max(row.tailNormEmpirical, lpNormWeighted(g, leb, w.fn(), p) / nf);
        }
        if (row.tailCoeffSup > prevSup + 1e-15) rep.supMonotone = false;
        prevSup = row.tailCoeffSup;
        rep.rows.push_back(row);
    }
    return rep;
}

struct SparseCzoResult {
    SparseFamily family;
    SparseOperatorSpec op;     // weight 1, averages over the enlarged cubes R*
    StepFunction tailTf;       // P_N^perp T~ f
    StepFunction Ttf;          // T~ f
    StepFunction Sf;
    CubeId suppCube;           // B
    CubeId baseCube;           // Q_0
    double epsEff = 0.0;       // sup over the lagom complement of eps_Q
    double domConstant = 0.0;  // max |P_N^perp T~ f| / S|f| over leaves
    double cEmp = 0.0;         // domConstant / epsEff
    double cPrime = 0.0;
    int thresholdClamps = 0;
    int annuliRealized = 0;             // annuli fully inside the root box
    std::vector<double> annulusRatios;  // max |T~f| / (epsEff <|f|>_{Q_j}) per realized annulus
    std::vector<double> ePrimeRatios;   // |E'_P| / |P| at the recursion cubes
    std::vector<double> stopOverlapRatios;  // |P ∩ E_Q| / |P|, must be <= 1/2
    bool layerInTail = true;
};

/// Kernel-side sparse construction. The family consists of the concentric
/// annulus cubes 2^j Q_0 (until they swallow the root box), the partition
/// layer of Q_0 at the scale of the support cube B split into two half
/// families, and the exceptional-set recursion cubes below the layer. The
/// recursion threshold c' comes from measured weak-type constants, with the
/// exact level-set clamp keeping |E_Q| <= 2^{-(n+2)} |Q|.
inline SparseCzoResult buildSparseCzo(const StepFunction& f, const KernelOperator& op, int N,
                                      const EpsCoefficientReport& epsRep) {
    const DyadicTree& t = *op.tree;
    const RadonMeasure& leb = *op.lebesgue;
    int n = t.dimension();

    SparseCzoResult res;

    // Smallest dyadic cube containing the support of f.
    CubeId supp{};
    bool any = false;
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
        if (f[i] == 0.0) continue;
        if (!any) {
            supp = t.leafAt(i);
            any = true;
        } else {
            CubeId leaf = t.leafAt(i);
            int level = std::min(supp.level, leaf.level);
            while (level > 0 && !(t.ancestor(supp, level) == t.ancestor(leaf, level))) --level;
            supp = t.ancestor(supp, level);
        }
    }
    if (!any) throw Error("buildSparseCzo: f vanishes identically");
    res.suppCube = supp;

    // Q_0: smallest ancestor with dist(B, Q_0^c) >= 2^{N+3} l(B).
    Box bBox = t.box(supp);
    DyadicRational required = DyadicRational(std::int64_t(1) << (N + 3)) * bBox.side;
    std::optional<CubeId> q0;
    for (int level = supp.level; level >= 0; --level) {
        CubeId cand = t.ancestor(supp, level);
        Box cBox = t.box(cand);
        DyadicRational margin = cBox.side;  // will shrink below
        for (int i = 0; i < n; ++i) {
            margin = minDR(margin, bBox.lo[i] - cBox.lo[i]);
            margin = minDR(margin, cBox.hi(i) - bBox.hi(i));
        }
        if (required <= margin) {
            q0 = cand;
            break;
        }
    }
    if (!q0)
        throw Error("buildSparseCzo: no tree cube realizes dist(B, Q0^c) >= 2^(N+3) l(B) = " +
                    std::to_string(required.toDouble()) +
                    "; widen the root box or shrink the support");
    res.baseCube = *q0;
    Box q0Box = t.box(*q0);

    std::vector<char> lagom = lagomMask(t, N);
    res.epsEff = epsRep.supOverTail(t, lagom);

    SparseFamily fam;
    fam.tree = op.tree;
    fam.packingConstant = 0.5;
    std::vector<double> weights;
    auto addEntry = [&](const Box& box, bool dyadic, std::uint64_t flat, int half) {
        fam.entries.push_back({box, dyadic, flat, half});
        weights.push_back(1.0);
    };

    // Annuli Q_j = 2^j Q_0 until the root box is swallowed.
    addEntry(q0Box, true, t.flatIndex(*q0), 1);
    Box rootBox = t.rootBox();
    for (int j = 1; j <= 40; ++j) {
        Box qj = q0Box.dilated(DyadicRational(std::int64_t(1) << j));
        bool realized = rootBox.contains(qj);
        addEntry(qj, false, 0, 1);
        if (realized) ++res.annuliRealized;
        if (qj.contains(rootBox)) break;
    }

    // Partition layer of Q_0 at the support scale, alternating halves.
    int layerLevel = supp.level;
    std::vector<CubeId> layer;
    std::vector<CubeId> dfs{*q0};
    while (!dfs.empty()) {
        CubeId q = dfs.back();
        dfs.pop_back();
        if (q.level == layerLevel) {
            layer.push_back(q);
            continue;
        }
        for (const CubeId& c : t.children(q)) dfs.push_back(c);
    }
    std::sort(layer.begin(), layer.end(), [&](const CubeId& a, const CubeId& b) {
        return t.flatIndex(a) < t.flatIndex(b);
    });
    for (std::size_t i = 0; i < layer.size(); ++i) {
        std::uint64_t flat = t.flatIndex(layer[i]);
        if (lagom[flat]) res.layerInTail = false;
        addEntry(t.box(layer[i]), true, flat, (i % 2 == 0) ? 1 : 2);
    }

    res.Ttf = applyTildeT(op, f, N);
    res.tailTf = projectTail(res.Ttf, leb, lagom);

    // Local recursion below the layer cubes carrying mass of f.
    struct Node {
        CubeId cube;
        int half;
    };
    std::vector<Node> queue;
    for (std::size_t i = 0; i < layer.size(); ++i) {
        StepFunction fq = StepFunction::zero(f.tree());
        bool nonzero = false;
        t.forEachLeafUnder(layer[i], [&](std::uint64_t leaf) {
            fq[leaf] = f[leaf];
            if (f[leaf] != 0.0) nonzero = true;
        });
        if (nonzero) queue.push_back({layer[i], (i % 2 == 0) ? 1 : 2});
    }

    double cPrimeFloor = std::pow(2.0, n + 3);
    while (!queue.empty()) {
        Node node = queue.back();
        queue.pop_back();
        if (t.isLeaf(node.cube)) continue;  // no strict descendants to extract

        StepFunction fq = StepFunction::zero(f.tree());
        t.forEachLeafUnder(node.cube, [&](std::uint64_t leaf) { fq[leaf] = f[leaf]; });
        double l1 = l1Norm(fq, leb);
        if (l1 <= 0.0) continue;
        double volQ = t.box(node.cube).volume();
        double avgAbs = l1 / volQ;

        StepFunction mhl = maximalM(fq, leb);
        StepFunction tq = projectTail(applyTildeT(op, fq, N), leb, lagom);

        double cM = weakLevelSup(mhl, leb) / l1;
        double cT = res.epsEff > 0.0 ? weakLevelSup(tq, leb) / (res.epsEff * l1) : 0.0;
        double cPrime = std::max(2.0 * (cM + cT) * cPrimeFloor, cPrimeFloor);
        res.cPrime = std::max(res.cPrime, cPrime);

        // Normalized exceptional score: E_Q = {score > 1} after the clamp.
        std::vector<std::pair<std::uint64_t, double>> score;
        t.forEachLeafUnder(node.cube, [&](std::uint64_t leaf) {
            double a = mhl[leaf] / (cPrime * avgAbs);
            double b = res.epsEff > 0.0 ? std::fabs(tq[leaf]) / (cPrime * res.epsEff * avgAbs)
                                        : (std::fabs(tq[leaf]) > 0.0 ? INFINITY : 0.0);
            score.emplace_back(leaf, std::max(a, b));
        });
        double budget = volQ / std::pow(2.0, n + 2);
        double cutoff = 1.0;
        auto volAbove = [&](double c) {
            double v = 0.0;
            for (auto& [leaf, s] : score)
                if (s > c) v += leb.leafMass(leaf);
            return v;
        };
        if (volAbove(cutoff) > budget) {
            std::vector<double> vals;
            for (auto& [leaf, s] : score) vals.push_back(s);
            std::sort(vals.begin(), vals.end(), std::greater<>());
            double leafVol = leb.leafMass(0);
            double cum = 0.0;
            for (std::size_t k = 0; k < vals.size();) {
                double v = vals[k];
                if (cum <= budget) cutoff = v;
                else break;
                while (k < vals.size() && vals[k] == v) {
                    cum += leafVol;
                    ++k;
                }
            }
            ++res.thresholdClamps;
        }
        std::vector<char> inE(t.leafCount(), 0);
        for (auto& [leaf, s] : score)
            if (s > cutoff) inE[leaf] = 1;

        // E~_Q = {M(1_{E_Q}) > 2^{-(n+1)}} and its maximal dyadic cubes.
        StepFunction indicator = StepFunction::zero(f.tree());
        for (std::uint64_t i = 0; i < t.leafCount(); ++i) indicator[i] = inE[i] ? 1.0 : 0.0;
        StepFunction mInd = maximalM(indicator, leb);
        double thresh = std::pow(2.0, -(n + 1));
        std::vector<char> inTilde(t.leafCount(), 0);
        t.forEachLeafUnder(node.cube, [&](std::uint64_t leaf) {
            if (mInd[leaf] > thresh) inTilde[leaf] = 1;
        });
        std::vector<CubeId> maximal;
        std::vector<CubeId> walk{node.cube};
        while (!walk.empty()) {
            CubeId q = walk.back();
            walk.pop_back();
            bool all = true;
            t.forEachLeafUnder(q, [&](std::uint64_t i) {
                if (!inTilde[i]) all = false;
            });
            if (all && !(q == node.cube)) {
                maximal.push_back(q);
                continue;
            }
            if (!t.isLeaf(q))
                for (const CubeId& c : t.children(q)) walk.push_back(c);
        }
        for (const CubeId& p : maximal) {
            // |P ∩ E_Q| <= |P| / 2 by maximality; recorded, not assumed.
            double overlap = 0.0, volP = t.box(p).volume();
            t.forEachLeafUnder(p, [&](std::uint64_t i) {
                if (inE[i]) overlap += leb.leafMass(i);
            });
            res.stopOverlapRatios.push_back(overlap / volP);

            addEntry(t.box(p), true, t.flatIndex(p), node.half);

            // E'_P from the enlarged support piece f 1_{P*}.
            Box pStar = t.box(p).dilated(DyadicRational(5));
            StepFunction fStar = StepFunction::zero(f.tree());
            double starL1 = 0.0;
            for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
                Box lb = t.box(t.leafAt(i));
                double ov = boxOverlapVolume(lb, pStar);
                if (ov > 0.0 && ov >= lb.volume() * (1.0 - 1e-12)) {
                    fStar[i] = f[i];
                    starL1 += std::fabs(f[i]) * leb.leafMass(i);
                }
            }
            double avgStar = integrateOverBox(f.abs(), pStar) / pStar.volume();
            if (avgStar > 0.0 && res.epsEff > 0.0) {
                StepFunction tp = projectTail(applyTildeT(op, fStar, N), leb, lagom);
                double volE = 0.0;
                t.forEachLeafUnder(p, [&](std::uint64_t i) {
                    if (std::fabs(tp[i]) > cPrime * res.epsEff * avgStar) volE += leb.leafMass(i);
                });
                res.ePrimeRatios.push_back(volE / volP);
            }
            bool carries = false;
            t.forEachLeafUnder(p, [&](std::uint64_t i) {
                if (f[i] != 0.0) carries = true;
            });
            if (carries) queue.push_back({p, node.half});
        }
    }

    res.op.family = fam;
    res.op.weights = weights;
    res.op.avg = SparseOperatorSpec::Avg::EnlargedStar;
    res.op.absoluteValues = true;
    res.family = std::move(fam);
    res.Sf = res.op.evaluate(f, nullptr).value;

    std::vector<char> everywhere(t.leafCount(), 1);
    res.domConstant = verifyDomination(res.tailTf, res.Sf, everywhere);
    res.cEmp = res.epsEff > 0.0 ? res.domConstant / res.epsEff : 0.0;

    // Annulus estimates |T~f| <= C epsEff <|f|>_{Q_j} on P_j = Q_j \ Q_{j-1}.
    Box prev = q0Box;
    for (int j = 1; j <= res.annuliRealized; ++j) {
        Box qj = q0Box.dilated(DyadicRational(std::int64_t(1) << j));
        double avgQj = integrateOverBox(f.abs(), qj) / qj.volume();
        double worst = 0.0;
        for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
            Box lb = t.box(t.leafAt(i));
            if (qj.contains(lb) && !prev.contains(lb))
                worst = std::max(worst, std::fabs(res.Ttf[i]));
        }
        res.annulusRatios.push_back(
            (res.epsEff > 0.0 && avgQj > 0.0) ? worst / (res.epsEff * avgQj) : 0.0);
        prev = qj;
    }
    return res;
}

}  // namespace dyad
