#pragma once

// Reconstruction quality against ground truth.
//
// nmse is the ratio of summed error magnitudes to summed truth magnitudes in
// dB (an l1 ratio despite the name); nmse_l2 is the energy ratio, kept for
// sensitivity checks. Exact matches are reported as -300 dB instead of -inf.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pnl/acoustics_core.hpp"
#include "pnl/errors.hpp"

namespace pnl {

inline constexpr double kDbFloor = -300.0;
inline constexpr double kNseFlagThreshold = 1e-12;

inline double ratio_db(double numerator, double denominator) {
    if (numerator == 0.0) return kDbFloor;
    return std::max(kDbFloor, 20.0 * std::log10(numerator / denominator));
}

namespace detail {
inline void require_same_length(std::span<const Complex> a, std::span<const Complex> b, const char* who) {
    if (a.size() != b.size()) throw ConfigError(std::string(who) + ": truth and estimate differ in length");
    if (a.empty()) throw ConfigError(std::string(who) + ": empty input");
}
}  // namespace detail

inline double nmse(std::span<const Complex> truth, std::span<const Complex> est) {
    detail::require_same_length(truth, est, "nmse");
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t m = 0; m < truth.size(); ++m) {
        err += std::abs(est[m] - truth[m]);
        ref += std::abs(truth[m]);
    }
    if (ref == 0.0) throw ConfigError("nmse: truth is identically zero");
    return ratio_db(err, ref);
}

/// 10 log10(sum |e|^2 / sum |p|^2).
inline double nmse_l2(std::span<const Complex> truth, std::span<const Complex> est) {
    detail::require_same_length(truth, est, "nmse_l2");
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t m = 0; m < truth.size(); ++m) {
        err += std::norm(est[m] - truth[m]);
        ref += std::norm(truth[m]);
    }
    if (ref == 0.0) throw ConfigError("nmse_l2: truth is identically zero");
    return ratio_db(std::sqrt(err), std::sqrt(ref));
}

/// Modal assurance criterion |p^H e|^2 / ((p^H p)(e^H e)), in [0, 1].
inline double mac(std::span<const Complex> truth, std::span<const Complex> est) {
    detail::require_same_length(truth, est, "mac");
    Complex cross{};
    double pp = 0.0;
    double ee = 0.0;
    for (std::size_t m = 0; m < truth.size(); ++m) {
        cross += std::conj(truth[m]) * est[m];
        pp += std::norm(truth[m]);
        ee += std::norm(est[m]);
    }
    if (pp == 0.0 || ee == 0.0) throw ConfigError("mac: zero vector");
    return std::min(1.0, std::norm(cross) / (pp * ee));
}

/// Per-point error in dB. Points where |truth| < 1e-12 are flagged and get NaN.
struct NseMap {
    std::vector<double> nse_db;
    std::vector<bool> flagged;
};

inline NseMap nse_map(std::span<const Complex> truth, std::span<const Complex> est) {
    detail::require_same_length(truth, est, "nse_map");
    NseMap out;
    out.nse_db.resize(truth.size());
    out.flagged.resize(truth.size());
    for (std::size_t m = 0; m < truth.size(); ++m) {
        const double ref = std::abs(truth[m]);
        if (ref < kNseFlagThreshold) {
            out.flagged[m] = true;
            out.nse_db[m] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        out.nse_db[m] = ratio_db(std::abs(est[m] - truth[m]), ref);
    }
    return out;
}

/// Recombines a per-point map into the aggregate error: with |e_m| = |P_m| 10^(nse_m/20),
/// 20 log10(sum |e_m| / sum |P_m|). Flagged points contribute their truth magnitude only.
inline double aggregate_nse(const NseMap& map, std::span<const Complex> truth) {
    if (map.nse_db.size() != truth.size()) throw ConfigError("aggregate_nse: length mismatch");
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t m = 0; m < truth.size(); ++m) {
        const double p = std::abs(truth[m]);
        ref += p;
        if (!map.flagged[m] && map.nse_db[m] > kDbFloor) err += p * std::pow(10.0, map.nse_db[m] / 20.0);
    }
    if (ref == 0.0) throw ConfigError("aggregate_nse: truth is identically zero");
    return ratio_db(err, ref);
}

/// Where the lattice sits relative to the disk center.
enum class GridRegistration {
    /// a lattice node on the center
    node_centered,
    /// the center in the middle of a lattice cell (offset by half a spacing in x and y)
    cell_centered,
};

/// Square-lattice points within `radius` of `center` in the plane z = center.z,
/// row-major (y outer, x inner, both ascending).
inline std::vector<Point3> make_eval_grid(const Point3& center, double radius, double spacing,
                                          GridRegistration registration = GridRegistration::cell_centered) {
    if (!(spacing > 0.0)) throw ConfigError("make_eval_grid: spacing must be positive");
    if (!(radius >= 0.0)) throw ConfigError("make_eval_grid: radius must be non-negative");
    const double offset = registration == GridRegistration::cell_centered ? 0.5 : 0.0;
    const long n = static_cast<long>(std::ceil(radius / spacing)) + 1;
    const double r2 = radius * radius * (1.0 + 1e-12);
    std::vector<Point3> out;
    for (long j = -n; j <= n; ++j) {
        const double y = (static_cast<double>(j) + offset) * spacing;
        for (long i = -n; i <= n; ++i) {
            const double x = (static_cast<double>(i) + offset) * spacing;
            if (x * x + y * y <= r2) out.push_back({center.x + x, center.y + y, center.z});
        }
    }
    return out;
}

}  // namespace pnl
