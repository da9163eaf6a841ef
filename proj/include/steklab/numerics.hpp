#ifndef STEKLAB_NUMERICS_HPP
#define STEKLAB_NUMERICS_HPP

#include "steklab/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace steklab {

// Least-squares slope of log(y) against log(x).
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("rate fit needs matched samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct Richardson {
    double value = 0;      // extrapolated limit
    double error = 0;      // reported error estimate
    double rate = 0;       // observed order
    bool extrapolated = false;  // false when the ladder was not monotone
};

// Classic three-level extrapolation for values v(h), v(h/2), v(h/4).
inline Richardson richardson_extrapolate(double v1, double v2, double v3) {
    Richardson r;
    double d1 = v2 - v1, d2 = v3 - v2;
    if (d1 == 0 && d2 == 0) {
        r.value = v3;
        r.error = 0;
        r.rate = 0;
        r.extrapolated = true;
        return r;
    }
    bool monotone = (d1 * d2 > 0) && (std::abs(d2) < std::abs(d1));
    if (!monotone) {
        r.value = v3;
        r.error = std::abs(d1) + std::abs(d2);
        r.extrapolated = false;
        return r;
    }
    double p = std::log2(std::abs(d1) / std::abs(d2));
    p = std::clamp(p, 0.5, 3.0);
    double f = std::pow(2.0, p) - 1.0;
    r.value = v3 + d2 / f;
    r.rate = p;
    // reported error: geometric tail, floored at |d2|/2, capped at 3|d2|
    r.error = std::min(3.0 * std::abs(d2), std::max(std::abs(d2) / f, 0.5 * std::abs(d2)));
    r.extrapolated = true;
    return r;
}

inline double golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                              int iters = 100) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0;
    size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    return 0.5 * (v[mid - 1] + hi);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

// Deterministic xorshift generator for tests and sampling.
struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : s(seed) {}
    std::uint64_t next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return s;
    }
    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * (double(next() >> 11) / 9007199254740992.0);
    }
};

} // namespace steklab

#endif
