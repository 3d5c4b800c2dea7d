#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dyad/measure.hpp"

namespace dyad {

/// Named scalar map on (0, inf). The forms cover the moduli and decay factors
/// used by kernels and coefficient profiles, and serialize by name + parameters.
struct ScalarMap {
    enum class Form {
        Zero,
        Constant,      // value = a
        Power,         // t^a               (a > 0: vanishes at 0)
        InvPower,      // (1+t)^-a          (vanishes at infinity)
        CutoffPower,   // min(1, t)^a       (vanishes at 0, bounded by 1)
        CutoffInvPower,// min(1, 1/t)^a     (vanishes at infinity, bounded by 1)
        GeometricLog,  // a^{|log2 t|}      (0 < a < 1: vanishes at 0 and infinity)
    };

    Form form = Form::Constant;
    double a = 1.0;

    double operator()(double t) const {
        switch (form) {
            case Form::Zero: return 0.0;
            case Form::Constant: return a;
            case Form::Power: return std::pow(t, a);
            case Form::InvPower: return std::pow(1.0 + t, -a);
            case Form::CutoffPower: return std::pow(std::min(1.0, t), a);
            case Form::CutoffInvPower: return t <= 1.0 ? 1.0 : std::pow(t, -a);
            case Form::GeometricLog: return std::pow(a, std::fabs(std::log2(t)));
        }
        return 0.0;
    }

    static ScalarMap zero() { return {Form::Zero, 0.0}; }
    static ScalarMap constant(double c) { return {Form::Constant, c}; }
    static ScalarMap power(double a) { return {Form::Power, a}; }
    static ScalarMap invPower(double a) { return {Form::InvPower, a}; }
    static ScalarMap cutoffPower(double a) { return {Form::CutoffPower, a}; }
    static ScalarMap cutoffInvPower(double a) { return {Form::CutoffInvPower, a}; }
    static ScalarMap geometricLog(double ratio) { return {Form::GeometricLog, ratio}; }

    std::string name() const {
        switch (form) {
            case Form::Zero: return "zero";
            case Form::Constant: return "constant";
            case Form::Power: return "power";
            case Form::InvPower: return "inv_power";
            case Form::CutoffPower: return "cutoff_power";
            case Form::CutoffInvPower: return "cutoff_inv_power";
            case Form::GeometricLog: return "geometric_log";
        }
        return "zero";
    }

    static ScalarMap byName(const std::string& name, double a) {
        if (name == "zero") return zero();
        if (name == "constant") return constant(a);
        if (name == "power") return power(a);
        if (name == "inv_power") return invPower(a);
        if (name == "cutoff_power") return cutoffPower(a);
        if (name == "cutoff_inv_power") return cutoffInvPower(a);
        if (name == "geometric_log") return geometricLog(a);
        throw Error("ScalarMap: unknown form '" + name + "'");
    }
};

/// Per-cube real coefficients {eps_Q}, with the running supremum
/// epsTilde_Q = sup over strict descendants Q' of |eps_{Q'}| computed bottom-up.
class CoefficientField {
public:
    CoefficientField(TreePtr tree, std::vector<double> perCube)
        : tree_(std::move(tree)), eps_(std::move(perCube)) {
        if (eps_.size() != tree_->cubeCount()) throw Error("CoefficientField: size mismatch");
        computeTilde();
    }

    static CoefficientField constant(TreePtr tree, double c) {
        std::vector<double> v(tree->cubeCount(), c);
        return CoefficientField(std::move(tree), std::move(v));
    }

    const TreePtr& tree() const { return tree_; }
    double eps(const CubeId& q) const { return eps_[tree_->flatIndex(q)]; }
    double epsFlat(std::uint64_t flat) const { return eps_[flat]; }
    double tilde(const CubeId& q) const { return tilde_[tree_->flatIndex(q)]; }
    double tildeFlat(std::uint64_t flat) const { return tilde_[flat]; }
    double tildeRoot() const { return tilde_[0]; }
    const std::vector<double>& values() const { return eps_; }
    const std::vector<double>& tildeValues() const { return tilde_; }

    /// sup over all cubes of |eps_Q|.
    double supAbs() const {
        double m = 0.0;
        for (double v : eps_) m = std::max(m, std::fabs(v));
        return m;
    }

private:
    void computeTilde() {
        const DyadicTree& t = *tree_;
        tilde_.assign(t.cubeCount(), 0.0);
        for (int level = t.depth() - 1; level >= 0; --level) {
            for (std::uint64_t k = 0; k < t.levelCount(level); ++k) {
                CubeId q = t.cubeAt(t.levelOffset(level) + k);
                double m = 0.0;
                for (const CubeId& c : t.children(q)) {
                    std::uint64_t fc = t.flatIndex(c);
                    m = std::max(m, std::max(std::fabs(eps_[fc]), tilde_[fc]));
                }
                tilde_[t.flatIndex(q)] = m;
            }
        }
    }

    TreePtr tree_;
    std::vector<double> eps_;
    std::vector<double> tilde_;
};

/// Generator of coefficient fields eps_Q = s1(l(Q)) * s2(l(Q)) * c(|c(Q)|).
/// With maps vanishing at their respective limits the generated field obeys
/// the three vanishing limits in side length (both directions) and center.
struct DecayProfile {
    ScalarMap largeScale = ScalarMap::constant(1.0);  // should vanish as l -> inf
    ScalarMap smallScale = ScalarMap::constant(1.0);  // should vanish as l -> 0
    ScalarMap center = ScalarMap::constant(1.0);      // should vanish as |c(Q)| -> inf

    double value(double side, double centerNorm) const {
        return largeScale(side) * smallScale(side) * center(centerNorm);
    }

    CoefficientField generate(const TreePtr& tree) const {
        const DyadicTree& t = *tree;
        std::vector<double> v(t.cubeCount());
        for (std::uint64_t flat = 0; flat < t.cubeCount(); ++flat) {
            CubeId q = t.cubeAt(flat);
            double side = t.sideLength(q.level).toDouble();
            auto c = t.center(q);
            double s = 0.0;
            for (int i = 0; i < t.dimension(); ++i) {
                double ci = c[i].toDouble();
                s += ci * ci;
            }
            v[flat] = value(side, std::sqrt(s));
        }
        return CoefficientField(tree, std::move(v));
    }

    /// Pure geometric scale decay ratio^{|log2 l(Q)|}; its tail supremum over
    /// the lagom complement shrinks by exactly `ratio` per N step on trees
    /// whose cubes all sit near the origin.
    static DecayProfile geometric(double ratio) {
        DecayProfile p;
        p.largeScale = ScalarMap::geometricLog(ratio);
        p.smallScale = ScalarMap::constant(1.0);
        p.center = ScalarMap::constant(1.0);
        return p;
    }
};

}  // namespace dyad
