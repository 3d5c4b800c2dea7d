#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "dyad/tree.hpp"

namespace dyad {

using TreePtr = std::shared_ptr<const DyadicTree>;

/// Leaf-constant real function on a dyadic tree; the universal representation
/// of test functions, weights, Haar realizations and operator outputs.
class StepFunction {
public:
    StepFunction() = default;
    StepFunction(TreePtr tree, std::vector<double> leafValues)
        : tree_(std::move(tree)), values_(std::move(leafValues)) {
        if (values_.size() != tree_->leafCount()) throw Error("StepFunction: size mismatch");
    }
    static StepFunction zero(TreePtr tree) {
        std::vector<double> v(tree->leafCount(), 0.0);
        return StepFunction(std::move(tree), std::move(v));
    }
    static StepFunction constant(TreePtr tree, double c) {
        std::vector<double> v(tree->leafCount(), c);
        return StepFunction(std::move(tree), std::move(v));
    }
    /// Indicator of a tree cube.
    static StepFunction indicator(TreePtr tree, const CubeId& q) {
        StepFunction f = zero(tree);
        tree->forEachLeafUnder(q, [&](std::uint64_t i) { f.values_[i] = 1.0; });
        return f;
    }

    const TreePtr& tree() const { return tree_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::uint64_t leaf) const { return values_[leaf]; }
    double& operator[](std::uint64_t leaf) { return values_[leaf]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    StepFunction abs() const {
        StepFunction g = *this;
        for (double& v : g.values_) v = std::fabs(v);
        return g;
    }

    friend StepFunction operator+(const StepFunction& a, const StepFunction& b) {
        StepFunction c = a;
        for (std::size_t i = 0; i < c.values_.size(); ++i) c.values_[i] += b.values_[i];
        return c;
    }
    friend StepFunction operator-(const StepFunction& a, const StepFunction& b) {
        StepFunction c = a;
        for (std::size_t i = 0; i < c.values_.size(); ++i) c.values_[i] -= b.values_[i];
        return c;
    }
    friend StepFunction operator*(double s, const StepFunction& a) {
        StepFunction c = a;
        for (double& v : c.values_) v *= s;
        return c;
    }

    double maxAbs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::fabs(v));
        return m;
    }

private:
    TreePtr tree_;
    std::vector<double> values_;
};

/// Nonnegative leaf masses; cube masses are defined bottom-up as exact sums of
/// the children, so additivity holds bit-for-bit.
class RadonMeasure {
public:
    RadonMeasure(TreePtr tree, std::vector<double> leafMass)
        : tree_(std::move(tree)), leafMass_(std::move(leafMass)) {
        if (leafMass_.size() != tree_->leafCount()) throw Error("RadonMeasure: size mismatch");
        for (double m : leafMass_)
            if (!(m >= 0.0)) throw Error("RadonMeasure: negative leaf mass");
        cubeMass_ = cubeSums(*tree_, leafMass_);
    }

    static RadonMeasure uniform(TreePtr tree, double totalMass = 1.0) {
        std::vector<double> m(tree->leafCount(), totalMass / static_cast<double>(tree->leafCount()));
        return RadonMeasure(std::move(tree), std::move(m));
    }

    /// Lebesgue measure on the tree: leaf mass = leaf volume.
    static RadonMeasure lebesgue(TreePtr tree) {
        double side = tree->sideLength(tree->depth()).toDouble();
        double vol = 1.0;
        for (int i = 0; i < tree->dimension(); ++i) vol *= side;
        std::vector<double> m(tree->leafCount(), vol);
        return RadonMeasure(std::move(tree), std::move(m));
    }

    const TreePtr& tree() const { return tree_; }
    double leafMass(std::uint64_t leaf) const { return leafMass_[leaf]; }
    const std::vector<double>& leafMasses() const { return leafMass_; }
    double mass(const CubeId& q) const { return cubeMass_[tree_->flatIndex(q)]; }
    double massFlat(std::uint64_t flat) const { return cubeMass_[flat]; }
    double total() const { return cubeMass_[0]; }

private:
    TreePtr tree_;
    std::vector<double> leafMass_;
    std::vector<double> cubeMass_;
};

inline double integrate(const StepFunction& f, const RadonMeasure& mu, const CubeId& q) {
    double s = 0.0;
    f.tree()->forEachLeafUnder(q, [&](std::uint64_t i) { s += f[i] * mu.leafMass(i); });
    return s;
}

inline double integrate(const StepFunction& f, const RadonMeasure& mu) {
    double s = 0.0;
    for (std::uint64_t i = 0; i < f.size(); ++i) s += f[i] * mu.leafMass(i);
    return s;
}

/// Integral of f over an arbitrary box w.r.t. the Lebesgue realization of f
/// as a leaf-constant function (exact leaf/box overlap volumes). Portions of
/// the box outside the tree contribute zero.
inline double integrateOverBox(const StepFunction& f, const Box& box) {
    const DyadicTree& t = *f.tree();
    double s = 0.0;
    // Restrict the leaf scan to leaves meeting the box.
    for (std::uint64_t i = 0; i < t.leafCount(); ++i) {
        if (f[i] == 0.0) continue;
        double ov = boxOverlapVolume(t.box(t.leafAt(i)), box);
        if (ov > 0.0) s += f[i] * ov;
    }
    return s;
}

/// <f, g> = ∫ f g dmu.
inline double pairing(const StepFunction& a, const StepFunction& b, const RadonMeasure& mu) {
    double s = 0.0;
    for (std::uint64_t i = 0; i < a.size(); ++i) s += a[i] * b[i] * mu.leafMass(i);
    return s;
}

inline double average(const StepFunction& f, const RadonMeasure& mu, const CubeId& q) {
    double m = mu.mass(q);
    if (m <= 0.0) throw Error("average: null cube (mu(Q) = 0)");
    return integrate(f, mu, q) / m;
}

/// ||f||_{L^p(mu)} = (sum |f|^p mass)^(1/p), p in (1, inf).
inline double lpNorm(const StepFunction& f, const RadonMeasure& mu, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("lpNorm: p must be in (1, inf)");
    double s = 0.0;
    for (std::uint64_t i = 0; i < f.size(); ++i)
        s += std::pow(std::fabs(f[i]), p) * mu.leafMass(i);
    return std::pow(s, 1.0 / p);
}

inline double l1Norm(const StepFunction& f, const RadonMeasure& mu) {
    double s = 0.0;
    for (std::uint64_t i = 0; i < f.size(); ++i) s += std::fabs(f[i]) * mu.leafMass(i);
    return s;
}

/// Weighted norm ||f||_{L^p(w)}^p = ∫ |f|^p w dmu.
inline double lpNormWeighted(const StepFunction& f, const RadonMeasure& mu,
                             const StepFunction& w, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("lpNormWeighted: p must be in (1, inf)");
    double s = 0.0;
    for (std::uint64_t i = 0; i < f.size(); ++i)
        s += std::pow(std::fabs(f[i]), p) * w[i] * mu.leafMass(i);
    return std::pow(s, 1.0 / p);
}

/// Strictly positive step function used as a weight.
class Weight {
public:
    Weight(StepFunction w) : w_(std::move(w)) {  // NOLINT(google-explicit-constructor)
        for (std::uint64_t i = 0; i < w_.size(); ++i)
            if (!(w_[i] > 0.0)) throw Error("Weight: leaf values must be strictly positive");
    }
    const StepFunction& fn() const { return w_; }
    double operator[](std::uint64_t leaf) const { return w_[leaf]; }

    /// Dual weight sigma = w^{1-p'} computed leafwise.
    StepFunction dual(double p) const {
        double pPrime = p / (p - 1.0);
        StepFunction s = w_;
        for (std::uint64_t i = 0; i < s.size(); ++i) s[i] = std::pow(w_[i], 1.0 - pPrime);
        return s;
    }

    /// w(Q) = ∫_Q w dmu, precomputed per cube.
    std::vector<double> cubeMasses(const RadonMeasure& mu) const {
        std::vector<double> wm(w_.size());
        for (std::uint64_t i = 0; i < w_.size(); ++i) wm[i] = w_[i] * mu.leafMass(i);
        return cubeSums(*w_.tree(), wm);
    }

private:
    StepFunction w_;
};

inline double holderConjugate(double p) { return p / (p - 1.0); }

}  // namespace dyad
