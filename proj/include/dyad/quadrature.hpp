#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "dyad/rational.hpp"

namespace dyad {

namespace quad {

/// Adaptive Simpson on [a, b] with absolute tolerance.
inline double adaptiveSimpson(const std::function<double(double)>& g, double a, double b,
                              double fa, double fm, double fb, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = g(lm), frm = g(rm);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptiveSimpson(g, a, m, fa, flm, fm, tol / 2.0, depth - 1) +
           adaptiveSimpson(g, m, b, fm, frm, fb, tol / 2.0, depth - 1);
}

inline double simpson(const std::function<double(double)>& g, double a, double b, double tol) {
    double m = 0.5 * (a + b);
    return adaptiveSimpson(g, a, b, g(a), g(m), g(b), tol, 30);
}

}  // namespace quad

/// ∫_{uStart}^∞ g(e^{-u}) du, i.e. ∫_0^{exp(-uStart)} g(t) dt/t, summed in
/// blocks of the log variable until the tail stops contributing. Throws when
/// the tail refuses to converge (the integrand is not Dini-integrable on the
/// requested tolerance).
inline double integrateLogTail(const std::function<double(double)>& g, double uStart,
                               double relTol = 1e-9, int maxBlocks = 80) {
    auto h = [&](double u) { return g(std::exp(-u)); };
    double acc = 0.0;
    double blockLen = 4.0;
    double u = uStart;
    for (int b = 0; b < maxBlocks; ++b) {
        double hi = u + blockLen;
        double piece = quad::simpson(h, u, hi, relTol * std::max(1.0, std::fabs(acc)) / 64.0);
        acc += piece;
        u = hi;
        if (b > 2 && std::fabs(piece) <= relTol * std::max(std::fabs(acc), 1e-300)) return acc;
    }
    throw Error("integrateLogTail: tail did not converge (integrand too singular)");
}

/// Fast cumulative table for W(t) = ∫_0^t omega(s) ds/s, built once per
/// modulus and interpolated on a log grid. The direct quadrature variant is
/// the accuracy reference; this table backs the inner loops of the D-tilde
/// transforms.
class WTable {
public:
    WTable() = default;
    WTable(std::function<double(double)> omega, double uMax = 60.0, int points = 8192)
        : uMax_(uMax), du_(uMax / points), table_(points + 1, 0.0) {
        // table_[k] = W(e^{-(uMax - k du)}), increasing in k; cumulative
        // Simpson from the far tail toward t = 1.
        double acc = 0.0;
        for (int k = 1; k <= points; ++k) {
            double uHi = uMax_ - (k - 1) * du_;  // larger u = smaller t
            double uLo = uMax_ - k * du_;
            double a = omega(std::exp(-uHi));
            double m = omega(std::exp(-0.5 * (uHi + uLo)));
            double b = omega(std::exp(-uLo));
            acc += du_ / 6.0 * (a + 4.0 * m + b);
            table_[k] = acc;
        }
    }

    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return table_.back();
        double u = -std::log(t);
        if (u >= uMax_) return 0.0;
        double pos = (uMax_ - u) / du_;
        auto k = static_cast<std::size_t>(pos);
        if (k + 1 >= table_.size()) return table_.back();
        double frac = pos - static_cast<double>(k);
        return table_[k] + frac * (table_[k + 1] - table_[k]);
    }

private:
    double uMax_ = 60.0;
    double du_ = 1.0;
    std::vector<double> table_;
};

}  // namespace dyad
