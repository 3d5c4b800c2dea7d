#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dyad {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Dyadic rational num / 2^exp with exact arithmetic.
///
/// All cube corners and side lengths in the library are dyadic rationals, so
/// containment and distance-zero tests never depend on floating point.
struct DyadicRational {
    std::int64_t num = 0;
    int exp = 0;  // denominator is 2^exp, exp >= 0

    constexpr DyadicRational() = default;
    constexpr DyadicRational(std::int64_t n, int e) : num(n), exp(e) { normalize(); }
    constexpr DyadicRational(std::int64_t n) : num(n), exp(0) {}  // NOLINT(google-explicit-constructor)

    constexpr void normalize() {
        if (num == 0) {
            exp = 0;
            return;
        }
        while (exp > 0 && (num & 1) == 0) {
            num >>= 1;
            --exp;
        }
    }

    // Exact conversion: every finite double is a dyadic rational.
    static DyadicRational fromDouble(double x) {
        if (!std::isfinite(x)) throw Error("DyadicRational: non-finite input");
        if (x == 0.0) return DyadicRational();
        int e = 0;
        double m = std::frexp(x, &e);  // x = m * 2^e, |m| in [0.5, 1)
        // Scale mantissa to an integer (53 bits suffice).
        m = std::ldexp(m, 53);
        e -= 53;
        auto n = static_cast<std::int64_t>(m);
        if (static_cast<double>(n) != m) throw Error("DyadicRational: mantissa not integral");
        while ((n & 1) == 0 && n != 0) {
            n >>= 1;
            ++e;
        }
        if (e >= 0) {
            // Integer value; shift into num if representable.
            if (e > 62) throw Error("DyadicRational: magnitude too large");
            return DyadicRational(n << e, 0);
        }
        return DyadicRational(n, -e);
    }

    double toDouble() const { return std::ldexp(static_cast<double>(num), -exp); }

    bool isZero() const { return num == 0; }

    friend DyadicRational operator+(const DyadicRational& a, const DyadicRational& b) {
        int e = std::max(a.exp, b.exp);
        __int128 n = (static_cast<__int128>(a.num) << (e - a.exp)) +
                     (static_cast<__int128>(b.num) << (e - b.exp));
        return fromWide(n, e);
    }
    friend DyadicRational operator-(const DyadicRational& a, const DyadicRational& b) {
        int e = std::max(a.exp, b.exp);
        __int128 n = (static_cast<__int128>(a.num) << (e - a.exp)) -
                     (static_cast<__int128>(b.num) << (e - b.exp));
        return fromWide(n, e);
    }
    friend DyadicRational operator*(const DyadicRational& a, const DyadicRational& b) {
        __int128 n = static_cast<__int128>(a.num) * b.num;
        return fromWide(n, a.exp + b.exp);
    }
    DyadicRational operator-() const { return DyadicRational(-num, exp); }

    /// Exact division by a power of two.
    DyadicRational div2(int k = 1) const { return DyadicRational(num, exp + k); }

    friend bool operator==(const DyadicRational& a, const DyadicRational& b) {
        return a.num == b.num && a.exp == b.exp;
    }
    friend bool operator!=(const DyadicRational& a, const DyadicRational& b) { return !(a == b); }
    friend bool operator<(const DyadicRational& a, const DyadicRational& b) {
        int e = std::max(a.exp, b.exp);
        return (static_cast<__int128>(a.num) << (e - a.exp)) <
               (static_cast<__int128>(b.num) << (e - b.exp));
    }
    friend bool operator<=(const DyadicRational& a, const DyadicRational& b) { return !(b < a); }
    friend bool operator>(const DyadicRational& a, const DyadicRational& b) { return b < a; }
    friend bool operator>=(const DyadicRational& a, const DyadicRational& b) { return !(a < b); }

private:
    static DyadicRational fromWide(__int128 n, int e) {
        while (e > 0 && (n & 1) == 0 && n != 0) {
            n >>= 1;
            --e;
        }
        if (n == 0) e = 0;
        if (n > INT64_MAX || n < INT64_MIN)
            throw Error("DyadicRational: overflow (coordinates too large for exact arithmetic)");
        DyadicRational r;
        r.num = static_cast<std::int64_t>(n);
        r.exp = e;
        return r;
    }
};

inline DyadicRational maxDR(const DyadicRational& a, const DyadicRational& b) { return a < b ? b : a; }
inline DyadicRational minDR(const DyadicRational& a, const DyadicRational& b) { return a < b ? a : b; }

constexpr int kMaxDim = 4;

/// Half-open axis-parallel box [lo, lo+side)^n with dyadic-rational geometry.
struct Box {
    int n = 1;
    std::array<DyadicRational, kMaxDim> lo{};
    DyadicRational side = DyadicRational(1);

    DyadicRational hi(int axis) const { return lo[axis] + side; }
    DyadicRational center(int axis) const { return lo[axis] + side.div2(); }

    /// Concentric dilation lambda*Q; lambda is a dyadic rational (e.g. 3, 5, 1/2).
    Box dilated(const DyadicRational& lambda) const {
        Box b;
        b.n = n;
        b.side = side * lambda;
        DyadicRational shift = (b.side - side).div2();
        for (int i = 0; i < n; ++i) b.lo[i] = lo[i] - shift;
        return b;
    }

    bool contains(const Box& other) const {
        for (int i = 0; i < n; ++i) {
            if (other.lo[i] < lo[i] || hi(i) < other.hi(i)) return false;
        }
        return true;
    }

    bool containsPoint(const std::array<DyadicRational, kMaxDim>& p) const {
        for (int i = 0; i < n; ++i) {
            if (p[i] < lo[i] || p[i] >= hi(i)) return false;
        }
        return true;
    }

    double volume() const {
        double v = 1.0;
        for (int i = 0; i < n; ++i) v *= side.toDouble();
        return v;
    }

    friend bool operator==(const Box& a, const Box& b) {
        if (a.n != b.n || a.side != b.side) return false;
        for (int i = 0; i < a.n; ++i)
            if (a.lo[i] != b.lo[i]) return false;
        return true;
    }
};

/// Componentwise gap between [a0,a1) and [b0,b1) on one axis (0 if they overlap).
inline DyadicRational axisGap(const DyadicRational& a0, const DyadicRational& a1,
                              const DyadicRational& b0, const DyadicRational& b1) {
    if (a1 < b0) return b0 - a1;
    if (b1 < a0) return a0 - b1;
    return DyadicRational(0);
}

/// Squared Euclidean distance between the closures of two boxes, exact.
inline DyadicRational boxDistSq(const Box& a, const Box& b) {
    DyadicRational s(0);
    for (int i = 0; i < a.n; ++i) {
        DyadicRational g = axisGap(a.lo[i], a.hi(i), b.lo[i], b.hi(i));
        s = s + g * g;
    }
    return s;
}

inline double boxDist(const Box& a, const Box& b) { return std::sqrt(boxDistSq(a, b).toDouble()); }

/// Distance from a box to the closed Euclidean ball of radius r centered at the origin.
inline double boxBallDist(const Box& a, const DyadicRational& radius) {
    DyadicRational s(0);
    for (int i = 0; i < a.n; ++i) {
        DyadicRational g = axisGap(a.lo[i], a.hi(i), DyadicRational(0), DyadicRational(0));
        s = s + g * g;
    }
    double d = std::sqrt(s.toDouble()) - radius.toDouble();
    return d > 0.0 ? d : 0.0;
}

/// Overlap volume of two boxes (exact rational product, returned as double).
inline double boxOverlapVolume(const Box& a, const Box& b) {
    double v = 1.0;
    for (int i = 0; i < a.n; ++i) {
        DyadicRational l = maxDR(a.lo[i], b.lo[i]);
        DyadicRational h = minDR(a.hi(i), b.hi(i));
        if (h <= l) return 0.0;
        v *= (h - l).toDouble();
    }
    return v;
}

}  // namespace dyad
