#pragma once

// Interior field expansion in 2-D cylindrical harmonics on the measurement
// plane,
//
//     P(r, phi) = sum_{n=-N..N} alpha_n J_n(k r) exp(i n phi),
//
// fit to microphone data by Tikhonov-regularized least squares.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pnl/acoustics_core.hpp"
#include "pnl/bessel.hpp"
#include "pnl/errors.hpp"
#include "pnl/field.hpp"

namespace pnl {

inline constexpr double kMaxHarmonicCondition = 1e12;
inline constexpr double kDefaultTikhonovFactor = 1e-8;
inline constexpr double kPlaneTolerance = 1e-9;

struct HarmonicModel {
    Wavenumber k;
    Point3 center;
    int order = 0;
    /// alpha_{-N} .. alpha_{N}
    std::vector<Complex> coefficients;

    Complex coefficient(int n) const { return coefficients.at(static_cast<std::size_t>(n + order)); }
};

struct HarmonicFitInfo {
    double condition = 0.0;
    double tikhonov = 0.0;
    double largest_singular_value = 0.0;
};

/// N = ceil(k R).
inline int truncation_order(Wavenumber k, double radius) {
    return static_cast<int>(std::ceil(k.value() * radius));
}

namespace detail {

inline Eigen::MatrixXcd harmonic_basis(Wavenumber k, const Point3& center, int order, std::span<const Point3> points) {
    const auto cols = static_cast<Eigen::Index>(2 * order + 1);
    Eigen::MatrixXcd A(static_cast<Eigen::Index>(points.size()), cols);
    for (std::size_t q = 0; q < points.size(); ++q) {
        const double dx = points[q].x - center.x;
        const double dy = points[q].y - center.y;
        const double r = std::hypot(dx, dy);
        const double phi = std::atan2(dy, dx);
        const auto J = bessel_j_all(order, k.value() * r);
        for (int n = -order; n <= order; ++n) {
            const double jn = (n < 0 && (-n % 2)) ? -J[static_cast<std::size_t>(-n)] : J[static_cast<std::size_t>(std::abs(n))];
            A(static_cast<Eigen::Index>(q), n + order) = jn * std::polar(1.0, n * phi);
        }
    }
    return A;
}

inline void require_plane(std::span<const Point3> points, const Point3& center) {
    for (const auto& p : points)
        if (std::abs(p.z - center.z) > kPlaneTolerance)
            throw ConfigError("harmonics: point " + to_string(p) + " is off the expansion plane");
}

}  // namespace detail

/// Least-squares fit of the 2N+1 coefficients. A missing `tikhonov` selects
/// 1e-8 times the squared largest singular value of the basis matrix.
inline HarmonicModel fit_harmonics(const Observations& obs, Wavenumber k, const Point3& center, int order,
                                   std::optional<double> tikhonov = std::nullopt, HarmonicFitInfo* info = nullptr) {
    if (obs.size() == 0) throw ConfigError("fit_harmonics: no observations");
    if (obs.positions.size() != obs.pressures.size()) throw ConfigError("fit_harmonics: length mismatch");
    if (order < 0) throw ConfigError("fit_harmonics: truncation order must be >= 0");
    if (tikhonov && !(*tikhonov >= 0.0)) throw ConfigError("fit_harmonics: tikhonov must be >= 0");
    detail::require_plane(obs.positions, center);

    const Eigen::MatrixXcd A = detail::harmonic_basis(k, center, order, obs.positions);
    Eigen::VectorXcd p(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t q = 0; q < obs.size(); ++q) p(static_cast<Eigen::Index>(q)) = obs.pressures[q];

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    const double tau = tikhonov.value_or(kDefaultTikhonovFactor * smax * smax);
    // Fewer rows than columns leaves singular values that are exactly zero.
    const double smin = s.size() < A.cols() ? 0.0 : s(s.size() - 1);
    const double num = smax * smax + tau;
    const double den = smin * smin + tau;
    const double condition = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    if (info) *info = {condition, tau, smax};
    if (!(condition <= kMaxHarmonicCondition))
        throw RankDeficiencyError("fit_harmonics: regularized system is numerically singular", condition);

    const Eigen::VectorXcd proj = svd.matrixU().adjoint() * p;
    Eigen::VectorXcd scaled(proj.size());
    for (Eigen::Index i = 0; i < proj.size(); ++i) scaled(i) = proj(i) * (s(i) / (s(i) * s(i) + tau));
    const Eigen::VectorXcd alpha = svd.matrixV() * scaled;

    HarmonicModel m;
    m.k = k;
    m.center = center;
    m.order = order;
    m.coefficients.assign(alpha.data(), alpha.data() + alpha.size());
    return m;
}

inline std::vector<Complex> eval_harmonics(const HarmonicModel& model, std::span<const Point3> points) {
    detail::require_plane(points, model.center);
    const Eigen::MatrixXcd A = detail::harmonic_basis(model.k, model.center, model.order, points);
    const Eigen::Map<const Eigen::VectorXcd> alpha(model.coefficients.data(),
                                                   static_cast<Eigen::Index>(model.coefficients.size()));
    const Eigen::VectorXcd out = A * alpha;
    return {out.data(), out.data() + out.size()};
}

}  // namespace pnl
