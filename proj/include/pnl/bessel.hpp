#pragma once

// Cylindrical Bessel functions of the first kind, J_n(x), for integer order.
// Miller's backward recurrence normalized with J_0 + 2 sum_k J_2k = 1.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace pnl {

/// J_0(x) .. J_nmax(x) from a single backward sweep.
inline std::vector<double> bessel_j_all(int nmax, double x) {
    if (nmax < 0) nmax = 0;
    std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const bool negative = x < 0.0;
    const double ax = std::abs(x);

    const double top = std::max(static_cast<double>(nmax), ax);
    int start = static_cast<int>(std::ceil(top + 30.0 + std::sqrt(40.0 * top)));
    if (start % 2) ++start;

    constexpr double kBig = 1e200;
    constexpr double kSmall = 1e-200;
    double above = 0.0;  // J_{m+1}
    double cur = 1e-300; // J_m
    double norm = 0.0;
    for (int m = start; m > 0; --m) {
        const double below = 2.0 * m / ax * cur - above;  // J_{m-1}
        above = cur;
        cur = below;
        if (std::abs(cur) > kBig) {
            cur *= kSmall;
            above *= kSmall;
            norm *= kSmall;
            for (auto& v : out) v *= kSmall;
        }
        const int order = m - 1;
        if (order <= nmax) out[static_cast<std::size_t>(order)] = cur;
        if (order > 0 && order % 2 == 0) norm += 2.0 * cur;
    }
    norm += cur;  // J_0
    for (auto& v : out) v /= norm;
    if (negative)
        for (std::size_t n = 1; n < out.size(); n += 2) out[n] = -out[n];
    return out;
}

/// J_n(x) for any integer n, using J_{-n} = (-1)^n J_n.
inline double bessel_j(int n, double x) {
    const int an = std::abs(n);
    const double v = bessel_j_all(an, x)[static_cast<std::size_t>(an)];
    return (n < 0 && (an % 2)) ? -v : v;
}

}  // namespace pnl
